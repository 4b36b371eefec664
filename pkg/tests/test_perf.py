import pytest

from hamlearn import perf
from hamlearn.perf import get_performance_stats, get_slow_calls, monitor_performance, reset_performance_metrics


@pytest.fixture(autouse=True)
def clean_metrics():
    reset_performance_metrics()
    yield
    reset_performance_metrics()


@monitor_performance
def square(x):
    return x * x


@monitor_performance
def explode():
    raise ValueError("boom")


def test_counts_calls():
    for i in range(3):
        assert square(i) == i * i
    stats = get_performance_stats()["square"]
    assert stats["count"] == 3
    assert stats["errors"] == 0
    assert stats["min_time"] <= stats["avg_time"] <= stats["max_time"]


def test_errors_are_counted_and_reraised():
    square(2)
    with pytest.raises(ValueError):
        explode()
    assert perf._performance_metrics["error_counts"]["explode"] == 1
    assert "explode" not in get_performance_stats()


def test_slow_calls(monkeypatch):
    settings = perf.get_config()
    settings.SLOW_SOLVE_SECONDS = -1.0
    monkeypatch.setattr(perf, "get_config", lambda: settings)
    square(3)
    slow = get_slow_calls()
    assert slow[-1]["operation"] == "square"


def test_timings_are_bounded():
    for i in range(150):
        square(i)
    assert len(perf._performance_metrics["call_times"]["square"]) == 100
    assert get_performance_stats()["square"]["count"] == 150
