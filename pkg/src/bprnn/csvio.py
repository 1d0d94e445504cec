"""Deterministic CSV emission.

Cells are formatted with shortest-round-trip float repr and joined with
plain commas and newline terminators, so re-running a seeded command
reproduces byte-identical files.
"""

from pathlib import Path


def format_cell(value):
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def render_csv(header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_cell(v) for v in row))
    return "\n".join(lines) + "\n"


def write_csv(path, header, rows):
    Path(path).write_text(render_csv(header, rows), encoding="utf-8", newline="\n")
