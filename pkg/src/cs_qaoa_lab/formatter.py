"""Formatter module for output formatting.

This module provides formatters for CLI output:
- format_table: Rich table of summary rows
- format_json: JSON output for programmatic use
"""

import io
import json
from typing import Any, Sequence

from rich.console import Console
from rich.table import Table

_NUMERIC_STYLE = "yellow"
_KEY_COLUMNS = {"problem", "size", "mode", "p", "kind", "n", "m", "ansatz", "instance", "figure", "series"}


def _render(value: Any) -> str:
    if value is None:
        return "-"
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, float):
        return f"{value:.4g}"
    return str(value)


def format_table(rows: Sequence[dict[str, Any]], columns: Sequence[str], title: str) -> str:
    """Format result rows as a Rich table.

    Key columns (problem, size, mode, ...) are cyan; numbers are right-aligned.

    Args:
        rows: Result rows keyed by column name
        columns: Columns to show, in order
        title: Table title

    Returns:
        Formatted table as a string
    """
    table = Table(title=title, show_header=True, header_style="bold magenta")
    for column in columns:
        if column in _KEY_COLUMNS:
            table.add_column(column, style="cyan")
        else:
            table.add_column(column, style=_NUMERIC_STYLE, justify="right")

    for row in rows:
        table.add_row(*(_render(row.get(c)) for c in columns))

    if not rows:
        table.add_section()
        table.add_row("(no rows)", *("" for _ in columns[1:]))

    # Capture table output to string
    console = Console(file=io.StringIO(), force_terminal=True, width=120)
    console.print(table)
    output = console.file.getvalue()  # type: ignore

    return output


def format_json(payload: Any) -> str:
    """Format a JSON-serializable payload (pretty-printed with indent=2)."""
    return json.dumps(payload, indent=2)
