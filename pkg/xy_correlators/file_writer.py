"""Result table writer: CSV with a trailing metadata block, or JSON."""

import csv
import io
import json
import math
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from . import __version__
from .error_handler import FileError
from .utils import ensure_directory, safe_write_file


def _cell(value: Any) -> Any:
    if isinstance(value, complex):
        return repr(value)
    if isinstance(value, float):
        return repr(value)
    return value


def _json_value(value: Any) -> Any:
    if isinstance(value, complex):
        return {'re': value.real, 'im': value.imag}
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    if hasattr(value, 'item'):
        return _json_value(value.item())
    return value


class FileWriter:
    """Writes one result table per run into the output folder."""

    def __init__(self, output_folder: str = 'outputs', output_format: str = 'csv'):
        if output_format not in ('csv', 'json'):
            raise FileError(f"unsupported output format '{output_format}'")
        self.output_folder = Path(output_folder)
        self.output_format = output_format

    def output_path(self, name: str) -> Path:
        return self.output_folder / f"{name}.{self.output_format}"

    def write_table(self, name: str, rows: List[Dict[str, Any]], summary: Optional[Dict[str, Any]] = None,
                    metadata: Optional[Dict[str, str]] = None,
                    columns: Optional[Sequence[str]] = None) -> Path:
        """
        Write ``rows`` (dicts sharing one set of keys) to <output_folder>/<name>.<format>.

        Returns:
            Path of the written file
        """
        ensure_directory(self.output_folder)
        columns = list(columns or (rows[0].keys() if rows else []))
        metadata = dict(metadata or {})
        metadata.setdefault('version', __version__)
        summary = dict(summary or {})

        if self.output_format == 'csv':
            content = self._render_csv(columns, rows, summary, metadata)
        else:
            content = self._render_json(columns, rows, summary, metadata)

        path = self.output_path(name)
        safe_write_file(path, content)
        return path

    def write_summary(self, name: str, summary: Dict[str, Any], metadata: Optional[Dict[str, str]] = None) -> Path:
        """Fit results as a standalone JSON document, whatever the table format."""
        ensure_directory(self.output_folder)
        document = {
            'summary': {key: _json_value(value) for key, value in summary.items()},
            'metadata': dict(metadata or {}, version=__version__),
        }
        path = self.output_folder / f"{name}.json"
        safe_write_file(path, json.dumps(document, indent=2))
        return path

    def _render_csv(self, columns, rows, summary, metadata) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator='\n')
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(row.get(column, '')) for column in columns])
        for key, value in summary.items():
            buffer.write(f"# summary.{key}={_cell(value)}\n")
        for key, value in metadata.items():
            buffer.write(f"# {key}={value}\n")
        return buffer.getvalue()

    def _render_json(self, columns, rows, summary, metadata) -> str:
        document = {
            'columns': columns,
            'rows': [[_json_value(row.get(column)) for column in columns] for row in rows],
            'summary': {key: _json_value(value) for key, value in summary.items()},
            'metadata': metadata,
        }
        return json.dumps(document, indent=2)
