"""
Display manager for hamlearn
Renders run reports, intervals and check results with rich
"""

from typing import Dict, List, Optional

from rich.console import Console
from rich.panel import Panel
from rich.table import Table
from rich.text import Text


def _fmt(value, digits: int = 6) -> str:
    if value is None:
        return "-"
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, float):
        return f"{value:.{digits}g}"
    return str(value)


class ReportDisplay:
    """Handles report display and formatting"""

    def __init__(self, console: Optional[Console] = None):
        self.console = console or Console()

    def show_title(self, title: str, subtitle: str = ""):
        """Display a title with optional subtitle"""
        self.console.print(Text(title, style="bold magenta"))
        if subtitle:
            self.console.print(Text(subtitle, style="cyan"))

    def show_header(self, header: Dict):
        """Display the model and run parameters"""
        if not header:
            return
        text = f"[bold cyan]{header.get('model') or 'model'}[/bold cyan] - {header['n']} qubits, {header['m']} terms\n\n"
        text += f"Terms: {', '.join(header.get('terms', []))}\n"
        text += f"Dual graph degree: {header.get('degree')}\n"
        text += f"Level: {header.get('level')} (theorem level {header.get('suggested_level')})\n"
        text += f"Beta: {_fmt(header.get('beta'))}\n"
        noise = header.get("noise") or {}
        text += f"Noise: {noise.get('mode')} eps0={_fmt(noise.get('epsilon0'))} seed={noise.get('seed')}\n"
        if header.get("source_model"):
            text += f"State generated by: {header['source_model']}\n"
        self.console.print(Panel(text, title="Run", border_style="blue"))

    def show_intervals(self, intervals: List[Dict], terms: Optional[List[str]] = None, title: str = "Intervals"):
        """Display certified intervals"""
        if not intervals:
            self.console.print("[dim]No intervals[/dim]")
            return

        table = Table(title=title, show_header=True)
        table.add_column("#", style="dim")
        table.add_column("Direction", style="cyan")
        table.add_column("Status", style="yellow")
        table.add_column("a", style="green", justify="right")
        table.add_column("b", style="green", justify="right")
        table.add_column("Width", style="white", justify="right")
        table.add_column("Box", style="red")

        for i, item in enumerate(intervals):
            v = item.get("v", [])
            nonzero = [k for k, x in enumerate(v) if x]
            if terms and len(nonzero) == 1 and v[nonzero[0]] == 1:
                direction = terms[nonzero[0]]
            else:
                direction = " ".join(_fmt(x, 3) for x in v)
            status = item["status"] if not item.get("reason") else f"{item['status']} ({item['reason']})"
            table.add_row(
                str(i),
                direction,
                status,
                _fmt(item.get("a")),
                _fmt(item.get("b")),
                _fmt(item.get("width"), 3),
                "active" if item.get("box_active") else "",
            )
        self.console.print(table)

    def show_confidence(self, result: Dict, title: str = "Algorithm B"):
        text = f"Status: {result.get('status')}\n"
        text += f"mu*: {_fmt(result.get('mu_star'))}\n"
        if result.get("lambda_star") is not None:
            text += f"lambda*: {' '.join(_fmt(x, 4) for x in result['lambda_star'])}\n"
        self.console.print(Panel(text, title=title, border_style="green"))

    def show_certification(self, result: Dict):
        verdict = result.get("verdict")
        style = {"consistent": "green", "not_gibbs_in_span": "red"}.get(verdict, "yellow")
        text = f"[bold {style}]{verdict}[/bold {style}]\n"
        text += f"Threshold: {_fmt(result.get('threshold'))}\n"
        confidence = result.get("confidence") or {}
        text += f"mu*: {_fmt(confidence.get('mu_star'))}\n"
        if result.get("certificate_valid") is not None:
            text += f"Certificate verified: {_fmt(result['certificate_valid'])}\n"
        if result.get("reason"):
            text += f"Reason: {result['reason']}\n"
        self.console.print(Panel(text, title="Certification", border_style=style))

    def show_checks(self, report: Dict):
        """Display identity checks, failures first"""
        table = Table(title=f"{report.get('name', 'checks')} ({'passed' if report.get('passed') else 'FAILED'})")
        table.add_column("Check", style="cyan")
        table.add_column("Residual", justify="right")
        table.add_column("Bound", justify="right")
        table.add_column("", style="bold")

        items = sorted(report.get("checks", {}).items(), key=lambda kv: (kv[1]["passed"], kv[0]))
        for label, item in items:
            mark = "[green]ok[/green]" if item["passed"] else "[red]fail[/red]"
            table.add_row(label, _fmt(item["residual"], 3), _fmt(item["bound"], 3), mark)
        self.console.print(table)

    def show_task_error(self, task: str, entry: Dict):
        self.console.print(f"[red]{task} failed:[/red] {entry.get('message', 'unknown error')}")

    def show_report(self, report: Dict):
        """Display every task entry of a report.json"""
        header = report.get("header", {})
        self.show_header(header)
        terms = header.get("terms")
        for task, entry in report.get("tasks", {}).items():
            if task == "measure":
                meta = entry.get("table", {})
                self.console.print(
                    f"[bold]measure[/bold]: r={meta.get('r')} K={_fmt(entry.get('K'))} "
                    f"clipped={meta.get('clipped')} cond_ok={_fmt(entry.get('cond_ok'))}"
                )
            elif task in ("intervals", "learn_a") and "intervals" in entry:
                self.show_intervals(entry["intervals"], terms, title=task)
            elif task == "learn_b" and "status" in entry:
                self.show_confidence(entry)
            elif task == "certify" and "verdict" in entry:
                self.show_certification(entry)
            elif task == "verify_modular" and "checks" in entry:
                self.show_checks(entry)
            elif task == "sweep" and "cells" in entry:
                self.console.print(f"[bold]sweep[/bold]: {entry['cells']} cells, {entry['errors']} failed")
            if not entry.get("success", True):
                self.show_task_error(task, entry)
