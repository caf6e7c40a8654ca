import csv
import io
import json
import math
import sys
from typing import Any, Iterable, Optional, Sequence

from .settings_module import Settings

def format_number(value: Any, digits: int = Settings.output.HUMAN_SIGNIFICANT_DIGITS) -> str:
    """
    Formats a value for human-readable output, floats with `digits` significant digits.

    Args:
        value (Any): Number, sequence of numbers or anything printable.
        digits (int): Significant digits for floats.

    Returns:
        str: The formatted value.
    """
    if isinstance(value, bool) or value is None:
        return str(value)
    if isinstance(value, float):
        return f"{value:.{digits}g}"
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(format_number(item, digits) for item in value) + "]"
    return str(value)

def render_human(data: dict, title: Optional[str] = None) -> str:
    """Renders a flat or one-level nested dictionary as aligned `key: value` lines."""
    lines = [title] if title else []
    width = max((len(key) for key in data), default=0)
    for key, value in data.items():
        if isinstance(value, dict):
            lines.append(f"{key}:")
            inner = max((len(inner_key) for inner_key in value), default=0)
            lines.extend(f"  {inner_key.ljust(inner)}  {format_number(inner_value)}" for inner_key, inner_value in value.items())
        else:
            lines.append(f"{key.ljust(width)}  {format_number(value)}")
    return "\n".join(lines) + "\n"

def render_human_table(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    cells = [list(header)] + [[format_number(value) for value in row] for row in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(header))]
    return "\n".join("  ".join(cell.rjust(width) for cell, width in zip(row, widths)) for row in cells) + "\n"

def _csv_cell(value: Any) -> Any:
    if isinstance(value, float):
        return "nan" if math.isnan(value) else repr(float(value))
    return value

def render_csv(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    """
    Renders rows as CSV with a mandatory header row, `\\n` line endings and full-precision floats.

    Args:
        header (Sequence[str]): Column names.
        rows (Iterable[Sequence[Any]]): Row values, one per header column.

    Returns:
        str: The CSV document.
    """
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator=Settings.output.CSV_LINE_TERMINATOR)
    writer.writerow(header)
    for row in rows:
        writer.writerow([_csv_cell(value) for value in row])
    return buffer.getvalue()

def _json_ready(value: Any) -> Any:
    if isinstance(value, dict):
        return {key: _json_ready(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_ready(item) for item in value]
    if hasattr(value, "item") and callable(value.item):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value

def render_json(data: Any) -> str:
    """Renders data as indented JSON; floats keep their shortest round-tripping repr and non-finite ones become null."""
    return json.dumps(_json_ready(data), indent=2, allow_nan=False) + "\n"

def write_output(text: str, path: Optional[str] = None) -> None:
    """Writes `text` to `path`, or to standard output when no path is given."""
    if path is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    with open(path, "w", encoding="utf-8", newline="") as file:
        file.write(text)
