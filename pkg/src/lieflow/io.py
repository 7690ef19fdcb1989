"""Plain-text file formats, JSON/CSV emission and atomic writes."""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .algebra import AlgebraError, LieAlgebra


class FormatError(ValueError):
    pass


def parse_algebra(text: str, name: str = "") -> LieAlgebra:
    """Parse the algebra format: ``dim n``, ``labels a b ...`` and lines ``c i j k value``.

    Blank lines and ``#`` comments are ignored.  An entry ``c i j k v`` without
    an explicit ``c j i k`` partner implies ``c j i k -v``.
    """
    dim = None
    labels: tuple[str, ...] = ()
    entries: dict[tuple[int, int, int], float] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        key = parts[0]
        try:
            if key == "dim":
                dim = int(parts[1])
            elif key == "labels":
                labels = tuple(parts[1:])
            elif key == "name":
                name = " ".join(parts[1:])
            elif key == "c":
                i, j, k = (int(p) for p in parts[1:4])
                entries[(i, j, k)] = float(parts[4])
            else:
                raise FormatError(f"line {lineno}: unknown key {key!r}")
        except (IndexError, ValueError) as exc:
            if isinstance(exc, FormatError):
                raise
            raise FormatError(f"line {lineno}: cannot parse {raw!r}") from exc
    if dim is None or dim < 1:
        raise FormatError("missing or invalid 'dim'")
    c = np.zeros((dim, dim, dim))
    for (i, j, k), v in entries.items():
        if not all(0 <= x < dim for x in (i, j, k)):
            raise FormatError(f"index ({i}, {j}, {k}) out of range for dim {dim}")
        c[i, j, k] = v
    for (i, j, k), v in entries.items():
        if (j, i, k) not in entries:
            c[j, i, k] = -v
    try:
        return LieAlgebra(c, labels, name)
    except AlgebraError:
        raise
    except ValueError as exc:
        raise FormatError(str(exc)) from exc


def load_algebra(path: str | os.PathLike) -> LieAlgebra:
    p = Path(path)
    return parse_algebra(p.read_text(), p.stem)


def format_algebra(alg: LieAlgebra) -> str:
    lines = [f"dim {alg.dim}", "labels " + " ".join(alg.labels)]
    c = alg.structure_constants
    for i, j, k in zip(*np.nonzero(c)):
        lines.append(f"c {i} {j} {k} {float(c[i, j, k])!r}")
    return "\n".join(lines) + "\n"


def parse_matrix(text: str) -> np.ndarray:
    """Whitespace separated rows; ``;`` also separates rows (one-line form)."""
    rows = []
    for raw in text.replace(";", "\n").splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            try:
                rows.append([float(x) for x in line.replace(",", " ").split()])
            except ValueError as exc:
                raise FormatError(f"bad matrix row {raw!r}") from exc
    if not rows:
        raise FormatError("empty matrix")
    if len({len(r) for r in rows}) != 1:
        raise FormatError("matrix rows have different lengths")
    m = np.array(rows)
    if not np.all(np.isfinite(m)):
        raise FormatError("matrix entries must be finite")
    return m


def load_matrix(path: str | os.PathLike) -> np.ndarray:
    return parse_matrix(Path(path).read_text())


def parse_vector(text: str) -> np.ndarray:
    try:
        return np.array([float(x) for x in text.replace(",", " ").split()])
    except ValueError as exc:
        raise FormatError(f"bad vector {text!r}") from exc


def parse_window(text: str, dim: int | None = None) -> np.ndarray:
    """``"lo hi"`` for every axis, ``"lo hi; lo hi; ..."`` per axis, or a single half-width."""
    rows = [r for r in text.replace(",", " ").split(";") if r.strip()]
    vals = [[float(x) for x in r.split()] for r in rows]
    if len(vals) == 1 and len(vals[0]) == 1:
        h = abs(vals[0][0])
        vals = [[-h, h]]
    if any(len(v) != 2 for v in vals):
        raise FormatError(f"bad window {text!r}")
    w = np.array(vals)
    if dim is not None:
        if len(w) == 1:
            w = np.tile(w, (dim, 1))
        elif len(w) != dim:
            raise FormatError(f"window has {len(w)} axes, expected {dim}")
    return w


def to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        if np.isnan(f):
            return None
        if np.isinf(f):
            return "inf" if f > 0 else "-inf"
        return f
    return obj


def dumps_json(obj) -> str:
    return json.dumps(to_jsonable(obj), indent=2, sort_keys=False) + "\n"


def atomic_write(path: str | os.PathLike, text: str) -> None:
    """Write via a temporary file in the same directory and rename over the target."""
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{p.name}.", dir=p.parent)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, p)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in r])
    return buf.getvalue()


def csv_block(title: str, matrix) -> str:
    """A ``# title`` line followed by the rows of ``matrix`` as CSV."""
    buf = io.StringIO()
    buf.write(f"# {title}\n")
    w = csv.writer(buf, lineterminator="\n")
    for row in np.atleast_2d(np.asarray(matrix, dtype=float)):
        w.writerow([repr(float(x)) for x in row])
    return buf.getvalue()
