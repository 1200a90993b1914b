"""Exception hierarchy of the package and the error-normalizing context manager."""

import logging
from typing import Dict, Any, Optional
from contextlib import contextmanager

from .utils import get_iso_timestamp


class XYChainError(Exception):
    """Base exception for XY chain computations."""
    pass


class ConfigurationError(XYChainError):
    """Invalid run configuration; carries the offending field path."""

    def __init__(self, message: str, field_path: Optional[str] = None):
        self.field_path = field_path
        if field_path:
            message = f"{field_path}: {message}"
        super().__init__(message)


class SectorMismatchError(XYChainError):
    """Chain size or parity sector incompatible with the antiperiodic Fourier sector."""
    pass


class SingularPointError(XYChainError):
    """Bogoliubov angle requested at a gapless point."""
    pass


class ConvergenceError(XYChainError):
    """Quadrature, series or grid did not reach the requested accuracy."""

    def __init__(self, message: str, achieved_error: Optional[float] = None):
        self.achieved_error = achieved_error
        super().__init__(message)


class CovarianceError(XYChainError):
    """Majorana covariance matrix violates the Gaussian-state bounds."""
    pass


class OracleError(XYChainError):
    """Exact-diagonalization request outside supported limits."""
    pass


class ProcessingError(XYChainError):
    """Unexpected failure inside a computation stage, wrapped with the stage name."""
    pass


class FileError(XYChainError):
    """Run, protocol or output file could not be read or written."""
    pass


def create_success_result(status: str = "success", **kwargs) -> Dict[str, Any]:
    """Result dictionary returned by the runner: status, UTC timestamp and any extra fields."""
    return {"status": status, "timestamp": get_iso_timestamp(), **kwargs}


@contextmanager
def handle_processing_errors(logger: logging.Logger, operation: str,
                             context: Optional[Dict[str, Any]] = None):
    """
    Log the start and end of ``operation`` and normalize what escapes it.

    XYChainError subclasses pass through untouched (the CLI maps them to exit codes).
    Missing or unreadable files become FileError; anything else becomes ProcessingError
    with ``context`` (chain parameters, usually) appended to the log line.
    """
    logger.info(f"Starting {operation}")
    try:
        yield
    except XYChainError as e:
        logger.error(f"{operation}: {type(e).__name__}: {e}")
        raise
    except (FileNotFoundError, PermissionError) as e:
        logger.error(f"{operation}: cannot access file: {e}")
        raise FileError(f"Cannot access file during {operation}: {e}") from e
    except Exception as e:
        suffix = f" [{context}]" if context else ""
        logger.error(f"{operation} failed: {e}{suffix}")
        raise ProcessingError(f"Failed to {operation}: {e}") from e
    logger.info(f"Completed {operation}")
