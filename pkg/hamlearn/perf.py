"""
Performance monitoring for hamlearn
Call counts and durations per operation; timings stay in logs, never in artifacts
"""

import logging
import threading
import time
from collections import defaultdict, deque
from functools import wraps

from hamlearn.config import get_config

logger = logging.getLogger(__name__)

_lock = threading.Lock()


def _fresh_metrics():
    return {
        "call_times": defaultdict(deque),
        "call_counts": defaultdict(int),
        "error_counts": defaultdict(int),
        "slow_calls": deque(maxlen=100),
    }


# Performance metrics storage
_performance_metrics = _fresh_metrics()


def monitor_performance(f):
    """Decorator to monitor function performance"""

    @wraps(f)
    def decorated_function(*args, **kwargs):
        start_time = time.perf_counter()
        operation = f.__name__

        try:
            result = f(*args, **kwargs)
        except Exception as e:
            elapsed = time.perf_counter() - start_time
            with _lock:
                _performance_metrics["error_counts"][operation] += 1
            logger.error(f"Error in {operation} after {elapsed:.2f}s: {e}")
            raise

        elapsed = time.perf_counter() - start_time
        with _lock:
            times = _performance_metrics["call_times"][operation]
            times.append(elapsed)
            # Keep only last 100 timings per operation
            if len(times) > 100:
                times.popleft()
            _performance_metrics["call_counts"][operation] += 1

            threshold = get_config().SLOW_SOLVE_SECONDS
            if elapsed > threshold:
                _performance_metrics["slow_calls"].append({"operation": operation, "elapsed": elapsed})
        if elapsed > threshold:
            logger.warning(f"Slow call: {operation} took {elapsed:.2f}s")
        return result

    return decorated_function


def get_performance_stats():
    """Get performance statistics"""
    stats = {}
    with _lock:
        for operation, times in _performance_metrics["call_times"].items():
            if times:
                stats[operation] = {
                    "count": _performance_metrics["call_counts"][operation],
                    "avg_time": sum(times) / len(times),
                    "min_time": min(times),
                    "max_time": max(times),
                    "errors": _performance_metrics["error_counts"][operation],
                }
    return stats


def get_slow_calls(limit=10):
    """Get recent slow calls"""
    with _lock:
        return list(_performance_metrics["slow_calls"])[-limit:]


def reset_performance_metrics():
    """Reset all performance metrics"""
    global _performance_metrics
    with _lock:
        _performance_metrics = _fresh_metrics()
