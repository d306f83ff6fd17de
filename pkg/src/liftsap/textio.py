"""Versioned plain-text serialization of named scalars and matrices.

Layout::

    # <kind> v<version>
    scalar <name> <value>
    matrix <name> <rows> <cols>
    <row 0 values ...>
    ...
    end

Floats are written with ``repr`` so a write/read cycle is bit-exact.
"""

import numpy as np


class TextFormatError(ValueError):
    pass


def format_float(x):
    return repr(float(x))


class TextWriter:
    def __init__(self, kind, version=1):
        self.lines = [f"# {kind} v{version}"]

    def scalar(self, name, value):
        if isinstance(value, (float, np.floating)):
            value = format_float(value)
        self.lines.append(f"scalar {name} {value}")

    def matrix(self, name, array):
        a = np.asarray(array, dtype=float)
        if a.ndim == 1:
            a = a.reshape(1, -1)
        rows, cols = a.shape
        self.lines.append(f"matrix {name} {rows} {cols}")
        for row in a:
            self.lines.append(" ".join(format_float(v) for v in row))

    def vector(self, name, array):
        self.matrix(name, np.asarray(array, dtype=float).reshape(1, -1))

    def section(self, name):
        self.lines.append(f"section {name}")

    def getvalue(self):
        return "\n".join(self.lines + ["end"]) + "\n"


class TextReader:
    """Sequential reader for text produced by :class:`TextWriter`."""

    def __init__(self, text, kind, version=1):
        self.lines = text.splitlines()
        self.pos = 0
        header = self._next()
        if header != f"# {kind} v{version}":
            raise TextFormatError(f"expected header '# {kind} v{version}', got {header!r}")

    def _next(self):
        if self.pos >= len(self.lines):
            raise TextFormatError("unexpected end of input")
        line = self.lines[self.pos]
        self.pos += 1
        return line

    def _expect(self, tag, name):
        parts = self._next().split()
        if len(parts) < 2 or parts[0] != tag or parts[1] != name:
            raise TextFormatError(f"line {self.pos}: expected {tag} {name!r}, got {' '.join(parts)!r}")
        return parts[2:]

    def scalar(self, name, cast=float):
        rest = self._expect("scalar", name)
        return cast(" ".join(rest))

    def matrix(self, name):
        rows, cols = (int(v) for v in self._expect("matrix", name))
        out = np.empty((rows, cols))
        for r in range(rows):
            vals = self._next().split()
            if len(vals) != cols:
                raise TextFormatError(f"line {self.pos}: expected {cols} values, got {len(vals)}")
            out[r] = [float(v) for v in vals]
        return out

    def vector(self, name):
        return self.matrix(name).reshape(-1)

    def section(self, name):
        self._expect("section", name)

    def finish(self):
        if self._next() != "end":
            raise TextFormatError(f"line {self.pos}: expected 'end'")
