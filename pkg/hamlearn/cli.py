#!/usr/bin/env python3
"""
Command-line interface for hamlearn
Subcommands map onto runner task lists; errors exit with the code carried by their type
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Dict, List, Optional

from dotenv import find_dotenv, load_dotenv
from rich.logging import RichHandler

from hamlearn import __version__
from hamlearn.artifacts import load_report
from hamlearn.config import (
    ExperimentConfig,
    apply_overrides,
    get_config,
    load_experiment_config,
    parse_experiment_config,
)
from hamlearn.errors import ConfigError, HamLearnError
from hamlearn.fixtures import MODEL_KINDS, create_model_generator
from hamlearn.model import HamiltonianModel, pkl_size_bound, theorem_level
from hamlearn.runner import ExperimentRunner
from utils.display import ReportDisplay

logger = logging.getLogger("hamlearn")

COMMAND_TASKS = {
    "measure": ["measure"],
    "learn": ["measure", "intervals", "learn_b"],
    "certify": ["measure", "certify"],
    "verify": ["verify_modular"],
    "sweep": ["sweep"],
}


def suggest_level(model: HamiltonianModel) -> int:
    """max(3, 1 + (d + 1)^2); warns with the implied perturber-count bound"""
    level = theorem_level(model)
    logger.warning(f"level {level} implies up to {pkl_size_bound(model, level):.3e} perturbing operators")
    return level


def setup_logging(verbose: bool = False):
    level = "DEBUG" if verbose else get_config().LOG_LEVEL
    logging.basicConfig(
        level=level,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(rich_tracebacks=True, show_path=False)],
        force=True,
    )


def _add_run_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--config", help="experiment config (JSON)")
    parser.add_argument("--model", help="model file; replaces the config's model_path")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--seed", type=int, help="noise seed override")
    parser.add_argument("--level", type=int, help="hierarchy level override")
    parser.add_argument("--tol", type=float, help="solver tolerance override")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hamlearn", description="Certified Hamiltonian learning from Gibbs-state expectation values"
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen-model", help="write a fixture model file")
    gen.add_argument("--kind", choices=MODEL_KINDS, default="ising")
    gen.add_argument("--n", type=int, default=2, help="qubit count")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--random-coeffs", action="store_true", help="draw coefficients from [-1, 1]")
    gen.add_argument("--out", required=True, help="model file to write")

    for name, help_text in (
        ("measure", "tabulate expectation values and assemble the EEB system"),
        ("learn", "coefficient intervals and the confidence parameter"),
        ("certify", "decide whether the data fit a Gibbs state of the ansatz"),
        ("verify", "modular identity suite on the generating state"),
        ("sweep", "interval widths over error, level and seed grids"),
        ("run", "every task listed in the config"),
    ):
        _add_run_flags(sub.add_parser(name, help=help_text))

    report = sub.add_parser("report", help="render an existing report.json")
    report.add_argument("path", help="report.json or its output directory")
    return parser


def _gen_model(args) -> int:
    generator = create_model_generator(args.seed)
    kwargs = {}
    if args.random_coeffs and args.kind in ("ising", "tfim"):
        kwargs = {"coupling": None, "field": None}
    if args.kind == "out_of_span":
        ansatz, source = generator.out_of_span_pair()
        out = Path(args.out)
        ansatz.save(out)
        source.save(out.with_name(out.stem + ".source.json"))
        model = ansatz
    else:
        model = generator.build(args.kind, args.n, **kwargs)
        model.save(args.out)
    level = suggest_level(model)
    print(json.dumps({"model": str(args.out), "m": model.m, "n": model.n, "suggested_level": level}))
    return 0


def _experiment(args) -> ExperimentConfig:
    overrides: Dict = {
        "output_dir": args.out,
        "level": args.level,
        "solver_tol": args.tol,
        "noise.seed": args.seed,
    }
    tasks: Optional[List[str]] = COMMAND_TASKS.get(args.command)
    if tasks is not None:
        overrides["tasks"] = tasks
    if args.config:
        if args.model:
            overrides["model_path"] = args.model
        return load_experiment_config(args.config, overrides)
    if not args.model:
        raise ConfigError("either --config or --model is required")
    return parse_experiment_config(apply_overrides({"model_path": args.model}, overrides))


def _report(args) -> int:
    path = Path(args.path)
    if path.is_dir():
        path = path / "report.json"
    if not path.exists():
        raise ConfigError(f"report not found: {path}")
    ReportDisplay().show_report(load_report(path))
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    load_dotenv(find_dotenv(usecwd=True))
    args = build_parser().parse_args(argv)
    setup_logging(args.verbose)
    try:
        if args.command == "gen-model":
            return _gen_model(args)
        if args.command == "report":
            return _report(args)
        result = ExperimentRunner(_experiment(args)).run()
        if result.report:
            ReportDisplay().show_report(result.report)
        return result.exit_code
    except HamLearnError as e:
        error = {"error": type(e).__name__, "message": str(e), "exit_code": e.exit_code}
        print(json.dumps(error), file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
