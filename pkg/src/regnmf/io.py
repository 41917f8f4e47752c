"""Matrix files, trace CSVs and key-value reports.

Numbers are written with Python's shortest round-trip ``repr`` so that
files reload bit-exactly and identical runs produce identical bytes.
"""

import csv
import io
import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import ParseError, ValidationError

TRACE_COLUMNS = ("iter", "objective", "frob_error", "alpha_l", "alpha_r", "clipped_count")
QP_TRACE_COLUMNS = ("iter", "objective", "alpha", "alpha_hat", "alpha_star")


def fmt(value):
    """Shortest round-trip text for a number; empty for ``None``/NaN."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    value = float(value)
    if np.isnan(value):
        return ""
    return repr(value)


def _parse_float(text, lineno):
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"line {lineno}: cannot parse {text.strip()!r} as a number",
                         line=lineno) from None
    if not np.isfinite(value):
        raise ParseError(f"line {lineno}: non-finite value {text.strip()!r}", line=lineno)
    return value


def _is_header(cells):
    try:
        [float(c) for c in cells]
    except ValueError:
        return True
    return False


def _read_rows(path):
    with open(path, newline="") as fh:
        for lineno, cells in enumerate(csv.reader(fh), start=1):
            if not cells or all(not c.strip() for c in cells):
                continue
            yield lineno, cells


def load_dense_csv(path):
    rows = []
    width = None
    for lineno, cells in _read_rows(path):
        if not rows and width is None and _is_header(cells):
            width = len(cells)
            continue
        if width is None:
            width = len(cells)
        if len(cells) != width:
            raise ParseError(
                f"line {lineno}: expected {width} fields, found {len(cells)}", line=lineno)
        rows.append([_parse_float(c, lineno) for c in cells])
    if not rows:
        raise ParseError("no numeric rows found")
    return np.array(rows, dtype=np.float64)


def load_triplet_csv(path, shape=None):
    entries = []
    header_seen = False
    for lineno, cells in _read_rows(path):
        if not header_seen:
            header_seen = True
            if [c.strip().lower() for c in cells] != ["row", "col", "value"]:
                raise ParseError(f"line {lineno}: expected header 'row,col,value'", line=lineno)
            continue
        if len(cells) != 3:
            raise ParseError(f"line {lineno}: expected 3 fields, found {len(cells)}", line=lineno)
        try:
            i, j = int(cells[0]), int(cells[1])
        except ValueError:
            raise ParseError(f"line {lineno}: indices must be integers", line=lineno) from None
        if i < 0 or j < 0:
            raise ParseError(f"line {lineno}: negative index", line=lineno)
        entries.append((lineno, i, j, _parse_float(cells[2], lineno)))
    if shape is None:
        if not entries:
            raise ParseError("no entries and no shape given")
        shape = (max(e[1] for e in entries) + 1, max(e[2] for e in entries) + 1)
    out = np.zeros(shape, dtype=np.float64)
    for lineno, i, j, v in entries:
        if i >= shape[0] or j >= shape[1]:
            raise ParseError(f"line {lineno}: index ({i},{j}) outside shape {shape}", line=lineno)
        out[i, j] += v
    return out


def load_matrix(path, format="dense_csv", shape=None, nonnegative=False):
    """Read a matrix from a dense or ``row,col,value`` triplet CSV.

    Dense files may start with one non-numeric header row.  Triplet
    indices are 0-based, repeated entries are summed and missing entries are
    zero; ``shape`` defaults to one past the largest indices.
    """
    if format == "dense_csv":
        m = load_dense_csv(path)
    elif format == "triplet_csv":
        m = load_triplet_csv(path, shape)
    else:
        raise ValueError(f"unknown format {format!r}")
    if nonnegative and np.any(m < 0):
        i, j = (int(v) for v in np.argwhere(m < 0)[0])
        raise ValidationError(f"negative value at ({i},{j}) where non-negative input is required")
    return m


def load_vector(path):
    """A vector stored as a single dense CSV row or column."""
    m = load_dense_csv(path)
    if 1 not in m.shape:
        raise ParseError(f"expected a single row or column, got shape {m.shape}")
    return m.ravel()


def matrix_to_text(m):
    m = np.atleast_2d(np.asarray(m, dtype=np.float64))
    return "".join(",".join(fmt(v) for v in row) + "\n" for row in m)


def atomic_write(path, text):
    """Write ``text`` to ``path`` via a temporary file and rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_matrix(path, m):
    atomic_write(path, matrix_to_text(m))


def trace_to_text(trace, columns=TRACE_COLUMNS):
    buf = io.StringIO()
    buf.write(",".join(columns) + "\n")
    for rec in trace:
        buf.write(",".join(fmt(getattr(rec, c)) for c in columns) + "\n")
    return buf.getvalue()


def write_trace(path, trace, columns=TRACE_COLUMNS):
    atomic_write(path, trace_to_text(trace, columns))


def read_trace(path):
    """Load a trace CSV into a dict of column name -> float array (NaN for blanks)."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        rows = list(reader)
        names = reader.fieldnames
    return {c: np.array([float(r[c]) if r[c] != "" else np.nan for r in rows]) for c in names}


def summary_to_text(items):
    return "".join(f"{k}={fmt(v) if not isinstance(v, str) else v}\n" for k, v in items.items())


def write_summary(path, items):
    """Flat ``key=value`` report, one pair per line, in insertion order."""
    atomic_write(path, summary_to_text(items))


def read_summary(path):
    out = {}
    with open(path) as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line:
                key, _, value = line.partition("=")
                out[key] = value
    return out
