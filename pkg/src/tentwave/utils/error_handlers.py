"""Common error handling utilities for the CLI and the HTTP service"""

from collections.abc import Callable
from functools import wraps
from typing import Any

from loguru import logger
from pydantic import ValidationError

from src.tentwave.errors import ConfigurationError, TentwaveError
from src.tentwave.utils.constants import EXIT_CONFIG_ERROR, EXIT_NUMERICAL_FAILURE, EXIT_OK


def create_error_response(error_msg: str, status: str = "error", **extra_fields) -> dict[str, Any]:
    """Create a standardized error response"""
    response = {"status": status, "error": error_msg}
    response.update(extra_fields)
    return response


def format_validation_error(error: ValidationError) -> list[str]:
    """Flatten a pydantic error into `dotted.path: message` lines"""
    lines = []
    for item in error.errors():
        path = ".".join(str(part) for part in item["loc"]) or "<root>"
        lines.append(f"{path}: {item['msg']}")
    return lines


def exit_code_for(error: BaseException | None) -> int:
    if error is None:
        return EXIT_OK
    if isinstance(error, ValidationError | ConfigurationError):
        return EXIT_CONFIG_ERROR
    return EXIT_NUMERICAL_FAILURE


def error_payload(error: TentwaveError) -> dict[str, Any]:
    """Error response body for a solver failure, with its diagnostics"""
    details = {key: value for key, value in error.details.items() if isinstance(value, str | int | float | bool)}
    return create_error_response(error.message, error_type=type(error).__name__, **details)


def handle_cli_errors(command: str) -> Callable[[Callable[..., int]], Callable[..., int]]:
    """Decorator factory mapping tentwave failures of a CLI command to exit codes"""

    def decorator(func: Callable[..., int]) -> Callable[..., int]:
        @wraps(func)
        def wrapper(*args, **kwargs) -> int:
            try:
                return func(*args, **kwargs)
            except ValidationError as e:
                for line in format_validation_error(e):
                    logger.error(f"{command}: invalid configuration: {line}")
                return exit_code_for(e)
            except ConfigurationError as e:
                logger.error(f"{command}: {e.message}")
                return exit_code_for(e)
            except TentwaveError as e:
                diagnostics = ", ".join(f"{key}={value}" for key, value in e.details.items())
                logger.error(f"{command} failed: {e.message}" + (f" ({diagnostics})" if diagnostics else ""))
                return exit_code_for(e)

        return wrapper

    return decorator
