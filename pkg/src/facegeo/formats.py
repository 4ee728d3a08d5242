"""Text formats shared by the library and the command line.

Matrix text format::

    # optional comment lines
    n m
    x11 x12 ... x1m
    ...
    xn1 ... xnm

Floats are written with ``repr`` (shortest round-trip form), so reading a
written matrix gives back the identical array.  ``.ops`` files concatenate
several matrix blocks; ``.vec`` files hold one float per line.
"""

from __future__ import annotations

import contextlib
import math
import os
import tempfile

import numpy as np

MATRIX_FORMAT_VERSION = 1
REPORT_FORMAT_VERSION = 1


class FormatError(ValueError):
    """Malformed input text; carries the source location."""

    def __init__(self, source, line, column, message):
        self.source = source
        self.line = line
        self.column = column
        super().__init__(f"{source}:{line}:{column}: {message}")


def _tokens(text):
    """Yield ``(line_no, [(col, token), ...])`` for non-blank, non-comment lines."""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        toks = []
        col = 0
        for tok in raw.split():
            col = raw.index(tok, col)
            toks.append((col + 1, tok))
            col += len(tok)
        yield lineno, toks


def _parse_float(source, lineno, col, tok):
    try:
        value = float(tok)
    except ValueError:
        raise FormatError(source, lineno, col, f"not a number: {tok!r}") from None
    if not math.isfinite(value):
        raise FormatError(source, lineno, col, f"non-finite value: {tok!r}")
    return value


def _parse_dim(source, lineno, col, tok):
    try:
        value = int(tok)
    except ValueError:
        raise FormatError(source, lineno, col, f"expected a positive integer, got {tok!r}") from None
    if value < 1:
        raise FormatError(source, lineno, col, f"dimension must be positive, got {value}")
    return value


def _read_blocks(text, source):
    lines = list(_tokens(text))
    pos = 0
    blocks = []
    while pos < len(lines):
        lineno, toks = lines[pos]
        if len(toks) != 2:
            raise FormatError(source, lineno, 1, 'header must be "n m"')
        n = _parse_dim(source, lineno, *toks[0])
        m = _parse_dim(source, lineno, *toks[1])
        pos += 1
        rows = []
        for i in range(n):
            if pos >= len(lines):
                last = lines[-1][0] if lines else 1
                raise FormatError(source, last + 1, 1, f"expected {n} rows, found {i}")
            lineno, toks = lines[pos]
            if len(toks) != m:
                raise FormatError(source, lineno, 1, f"expected {m} values, found {len(toks)}")
            rows.append([_parse_float(source, lineno, c, t) for c, t in toks])
            pos += 1
        blocks.append(np.array(rows, dtype=float).reshape(n, m))
    return blocks


def parse_matrix(text, source="<string>"):
    blocks = _read_blocks(text, source)
    if len(blocks) != 1:
        raise FormatError(source, 1, 1, f"expected exactly one matrix, found {len(blocks)}")
    return blocks[0]


def parse_ops(text, source="<string>"):
    return _read_blocks(text, source)


def parse_vector(text, source="<string>"):
    values = []
    for lineno, toks in _tokens(text):
        if len(toks) != 1:
            raise FormatError(source, lineno, 1, "expected one value per line")
        values.append(_parse_float(source, lineno, *toks[0]))
    return np.array(values, dtype=float)


def format_matrix(X):
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError("format_matrix expects a 2-D array")
    lines = [f"{X.shape[0]} {X.shape[1]}"]
    for row in X:
        lines.append(" ".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"


def format_ops(blocks):
    return "".join(format_matrix(B) for B in blocks)


def format_vector(v):
    return "".join(f"{float(x)!r}\n" for x in np.asarray(v, dtype=float).ravel())


def read_text(path):
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def read_matrix(path):
    return parse_matrix(read_text(path), source=str(path))


def read_ops(path):
    return parse_ops(read_text(path), source=str(path))


def read_vector(path):
    return parse_vector(read_text(path), source=str(path))


def atomic_write(path, text):
    """Write ``text`` to ``path`` through a temporary file and ``os.replace``."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(OSError):
            os.unlink(tmp)
        raise


def write_matrix(path, X):
    atomic_write(path, format_matrix(X))


def parse_config(text, source="<string>"):
    """Parse flat ``key=value`` lines into an ordered dict of strings."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise FormatError(source, lineno, 1, 'expected "key=value"')
        key, _, value = line.partition("=")
        key = key.strip()
        if not key:
            raise FormatError(source, lineno, 1, "empty key")
        if key in out:
            raise FormatError(source, lineno, 1, f"duplicate key {key!r}")
        out[key] = (value.strip(), lineno)
    return out


def format_float(x):
    """17 significant digits, as used in CSV output."""
    return f"{float(x):.17g}"
