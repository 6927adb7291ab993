"""Consolidated logging utilities for consistent logging patterns"""

import time
from functools import wraps

from loguru import logger


class LogContext:
    """Context manager for structured logging with timing"""

    def __init__(self, operation: str, **context):
        self.operation = operation
        self.context = context
        self.start_time = None
        self.duration_ms = None

    def __enter__(self):
        self.start_time = time.perf_counter()
        logger.info(f"Starting {self.operation}", **self.context)
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.duration_ms = (time.perf_counter() - self.start_time) * 1000

        if exc_type:
            logger.error(f"Failed {self.operation} after {self.duration_ms:.2f}ms: {exc_val}", **self.context)
        else:
            logger.info(f"Completed {self.operation} in {self.duration_ms:.2f}ms", **self.context)


def log_operation(operation: str):
    """Decorator to log function execution with timing"""

    def decorator(func):
        @wraps(func)
        def wrapper(*args, **kwargs):
            start_time = time.perf_counter()
            logger.debug(f"Starting {operation}")

            try:
                result = func(*args, **kwargs)
            except Exception as e:
                duration_ms = (time.perf_counter() - start_time) * 1000
                logger.error(f"Failed {operation} after {duration_ms:.2f}ms: {e}")
                raise
            duration_ms = (time.perf_counter() - start_time) * 1000
            logger.debug(f"Completed {operation} in {duration_ms:.2f}ms")
            return result

        return wrapper

    return decorator


class SolverLogger:
    """Domain-specific logging utilities"""

    @staticmethod
    def log_mesh_summary(summary: dict):
        logger.info(
            f"Tent mesh with {summary['tents']} tents in {summary['levels']} levels",
            **{key: value for key, value in summary.items() if key not in ("tents", "levels")},
        )

    @staticmethod
    def log_convergence_row(scheme: str, h: float, error: float, slope: float | None):
        slope_text = "-" if slope is None else f"{slope:.3f}"
        logger.info(f"{scheme} h={h:.3e} error={error:.3e} slope={slope_text}", scheme=scheme)

    @staticmethod
    def log_stability_verdict(courant: float, verdict: str, spectral_radius: float, max_power_norm: float):
        level = logger.info if verdict == "stable" else logger.warning
        level(
            f"Stability sweep at a*c={courant}: {verdict}",
            spectral_radius=spectral_radius,
            max_power_norm=max_power_norm,
        )
