"""Plain-text interchange format for conic programs.

Grammar (one item per line, ``#`` starts a comment, blank lines ignored)::

    CONIC 1
    DIMS <n> <m>
    OBJECTIVE
    <j> <c_j>            # nonzeros only
    RHS
    <i> <b_i>            # nonzeros only
    ROWS <nnz>
    <i> <j> <a_ij>       # coordinate triplets
    CONES <count>
    <KIND> <dim>         # in variable order
    NAMES                # optional, one name per variable
    <name>
    END

Numbers are written with ``repr`` so a round trip is exact.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .cones import ConeBlock, ConeKind
from .ipm import ConicProgram

__all__ = ["write_program", "read_program", "dumps", "loads", "InterchangeError"]


class InterchangeError(ValueError):
    pass


def dumps(prog: ConicProgram) -> str:
    out = ["CONIC 1", f"DIMS {prog.n} {prog.m}", "OBJECTIVE"]
    out += [f"{j} {float(prog.c[j])!r}" for j in np.flatnonzero(prog.c)]
    out.append("RHS")
    out += [f"{i} {float(prog.b[i])!r}" for i in np.flatnonzero(prog.b)]
    A = prog.A.tocoo()
    order = np.lexsort((A.col, A.row))
    out.append(f"ROWS {order.size}")
    out += [f"{A.row[k]} {A.col[k]} {float(A.data[k])!r}" for k in order]
    out.append(f"CONES {len(prog.cones)}")
    out += [f"{blk.kind.value} {blk.dim}" for blk in prog.cones]
    if prog.variable_names is not None:
        out.append("NAMES")
        out += list(prog.variable_names)
    out.append("END")
    return "\n".join(out) + "\n"


def loads(text: str) -> ConicProgram:
    lines = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            lines.append((lineno, line))
    it = iter(lines)

    def expect(tag):
        try:
            lineno, line = next(it)
        except StopIteration:
            raise InterchangeError(f"unexpected end of file, expected {tag}") from None
        parts = line.split()
        if parts[0] != tag:
            raise InterchangeError(f"line {lineno}: expected {tag}, found {parts[0]!r}")
        return lineno, parts[1:]

    def numbers(count_hint=None, stop=None):
        rows = []
        for lineno, line in it:
            parts = line.split()
            if stop is not None and parts[0] == stop:
                return rows, (lineno, parts[1:])
            rows.append((lineno, parts))
            if count_hint is not None and len(rows) == count_hint:
                return rows, None
        raise InterchangeError(f"unexpected end of file while reading {stop or 'entries'}")

    _, ver = expect("CONIC")
    if ver != ["1"]:
        raise InterchangeError(f"unsupported interchange version {ver}")
    lineno, dims = expect("DIMS")
    try:
        n, m = int(dims[0]), int(dims[1])
    except (IndexError, ValueError):
        raise InterchangeError(f"line {lineno}: DIMS needs two integers") from None
    expect("OBJECTIVE")
    c = np.zeros(n)
    b = np.zeros(m)
    obj_rows, _ = numbers(stop="RHS")
    rhs_rows, rows_head = numbers(stop="ROWS")
    try:
        for lineno, (j, v) in obj_rows:
            c[int(j)] = float(v)
        for lineno, (i, v) in rhs_rows:
            b[int(i)] = float(v)
        nnz = int(rows_head[1][0])
        trip = numbers(count_hint=nnz)[0] if nnz else []
        r = [int(t[0]) for _, t in trip]
        cc = [int(t[1]) for _, t in trip]
        vals = [float(t[2]) for _, t in trip]
        lineno, cone_head = expect("CONES")
        cones = []
        for _ in range(int(cone_head[0])):
            lineno, line = next(it)
            kind, dim = line.split()
            cones.append(ConeBlock(ConeKind(kind), int(dim)))
    except (ValueError, IndexError, StopIteration) as err:
        raise InterchangeError(f"malformed entry near line {lineno}: {err}") from None
    A = sp.csr_matrix((vals, (r, cc)), shape=(m, n))

    names = None
    lineno, line = next(it, (None, None))
    if line == "NAMES":
        names = []
        for lineno, line in it:
            if line == "END":
                break
            names.append(line)
        else:
            raise InterchangeError("missing END")
    elif line != "END":
        raise InterchangeError(f"line {lineno}: expected NAMES or END")
    return ConicProgram(c, A, b, cones, names)


def write_program(prog: ConicProgram, path) -> Path:
    path = Path(path)
    path.write_text(dumps(prog))
    return path


def read_program(path) -> ConicProgram:
    return loads(Path(path).read_text())
