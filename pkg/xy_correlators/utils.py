"""Shared utilities: loggers, timers, atomic file writes and range parsing."""

import os
import re
import time
import logging
import tempfile
from pathlib import Path
from typing import List, Optional, Union
from datetime import datetime, timezone

import numpy as np


_RANGE_PATTERN = re.compile(
    r'^\s*(?P<start>[-+0-9.eE]+)\s*\.\.\s*(?P<stop>[-+0-9.eE]+)\s*(?::\s*(?P<count>\d+)\s*(?P<log>log)?)?\s*$'
)


def ensure_directory(directory: Path) -> Path:
    """Create the output folder (and parents) when missing; returns it as a Path."""
    folder = Path(directory)
    folder.mkdir(parents=True, exist_ok=True)
    return folder


def safe_write_file(file_path: Path, content: str, encoding: str = 'utf-8') -> None:
    """
    Replace ``file_path`` atomically: the content goes to a hidden temporary file in
    the same folder, which is then renamed over the target.

    Raises:
        IOError: If the temporary file cannot be written or renamed
    """
    target = Path(file_path)
    tmp_name = None
    try:
        with tempfile.NamedTemporaryFile('w', encoding=encoding, dir=target.parent,
                                         prefix=f".{target.name}.", delete=False) as handle:
            tmp_name = handle.name
            handle.write(content)
        os.replace(tmp_name, target)
    except OSError as e:
        if tmp_name and os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise IOError(f"Cannot write {target}: {e}")


def safe_read_file(file_path: Path, encoding: str = 'utf-8') -> str:
    """Whole text of a run or protocol file; any OS error becomes IOError."""
    try:
        return Path(file_path).read_text(encoding=encoding)
    except (OSError, UnicodeDecodeError) as e:
        raise IOError(f"Cannot read {file_path}: {e}")


def parse_range(text: Union[str, int, float, List]) -> List[float]:
    """
    Expand a range expression into a list of numbers.

    Accepted forms: ``1..4`` (inclusive integer range), ``0..10:21`` (linear points),
    ``1e-3..1e-1:7log`` (log-spaced points), ``1,2,5`` (explicit list) and plain numbers.

    Raises:
        ValueError: If the expression cannot be parsed
    """
    if isinstance(text, (int, float)):
        return [text]
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]

    text = str(text).strip()
    match = _RANGE_PATTERN.match(text)
    if match:
        start, stop = float(match.group('start')), float(match.group('stop'))
        count = match.group('count')
        if count is None:
            if start != int(start) or stop != int(stop):
                raise ValueError(f"Integer range expected, got '{text}'")
            step = 1 if stop >= start else -1
            return [int(v) for v in range(int(start), int(stop) + step, step)]
        count = int(count)
        if count < 1:
            raise ValueError(f"Point count must be positive in '{text}'")
        if match.group('log'):
            if start <= 0 or stop <= 0:
                raise ValueError(f"Log-spaced range needs positive bounds: '{text}'")
            return np.logspace(np.log10(start), np.log10(stop), count).tolist()
        return np.linspace(start, stop, count).tolist()

    parts = [part.strip() for part in text.split(',') if part.strip()]
    if not parts:
        raise ValueError("Empty range expression")
    try:
        if all(re.fullmatch(r'[-+]?\d+', part) for part in parts):
            return [int(part) for part in parts]
        return [float(part) for part in parts]
    except ValueError:
        raise ValueError(f"Cannot parse range expression '{text}'")


def get_iso_timestamp() -> str:
    """UTC time in ISO 8601, for log lines and result dictionaries (never for output files)."""
    return datetime.now(timezone.utc).isoformat(timespec='seconds')


def setup_module_logger(module_name: str, level: Optional[str] = None) -> logging.Logger:
    """
    Logger for a package module.

    Output is left to the root configuration done by the CLI; library use stays silent
    unless the caller configures logging. ``level`` pins this logger's own threshold.
    """
    logger = logging.getLogger(module_name)
    if not logger.handlers:
        logger.addHandler(logging.NullHandler())
    if level is not None:
        logger.setLevel(getattr(logging, level.upper(), logging.INFO))
    return logger


class StageTimer:
    """Wall-clock timer for one computation stage (monotonic clock)."""

    def __init__(self, stage: str = "stage"):
        self.stage = stage
        self._start = None
        self._stop = None

    def __enter__(self):
        self._start = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self._stop = time.perf_counter()

    @property
    def duration_seconds(self) -> float:
        if self._start is None or self._stop is None:
            return 0.0
        return self._stop - self._start

    @property
    def duration_rounded(self) -> float:
        return round(self.duration_seconds, 2)
