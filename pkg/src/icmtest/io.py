"""CSV input for data matrices.

Cells are separated by commas or by runs of whitespace (decided from the
first non-blank line).  A single header row is allowed when its first cell
is not a number.  Blank lines are skipped; line numbers in errors are
1-based positions in the file, column numbers 1-based cell positions.
"""

import numpy as np

from .errors import ParseError


def _split(line, comma):
    if comma:
        return [c.strip() for c in line.split(",")]
    return line.split()


def _number(cell):
    try:
        value = float(cell)
    except ValueError:
        return None
    return value


def parse_csv(text):
    """``(matrix, header)``; ``header`` is a list of names or None."""
    lines = [(i, ln) for i, ln in enumerate(text.splitlines(), start=1) if ln.strip()]
    if not lines:
        raise ParseError("input is empty", line=0)
    comma = "," in lines[0][1]
    header = None
    first_cells = _split(lines[0][1], comma)
    if _number(first_cells[0]) is None:
        header = first_cells
        lines = lines[1:]
        if not lines:
            raise ParseError("input has a header but no data rows", line=0)
    width = len(header) if header is not None else len(_split(lines[0][1], comma))
    rows = []
    for lineno, line in lines:
        cells = _split(line, comma)
        if len(cells) != width:
            raise ParseError(f"expected {width} fields, found {len(cells)}", line=lineno)
        row = []
        for col, cell in enumerate(cells, start=1):
            value = _number(cell)
            if value is None:
                raise ParseError(f"non-numeric value {cell!r}", line=lineno, column=col)
            if not np.isfinite(value):
                raise ParseError(f"non-finite value {cell!r}", line=lineno, column=col)
            row.append(value)
        rows.append(row)
    return np.array(rows, dtype=float), header


def read_csv(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except UnicodeDecodeError as exc:
        raise ParseError(f"file is not valid UTF-8: {exc.reason}", line=0) from exc
    return parse_csv(text)


def format_matrix(X, header=None):
    """CSV text that :func:`parse_csv` reads back exactly."""
    out = []
    if header is not None:
        out.append(",".join(header))
    for row in np.asarray(X, dtype=float):
        out.append(",".join(repr(float(v)) for v in row))
    return "\n".join(out) + "\n"
