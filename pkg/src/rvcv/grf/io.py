"""Plain-text readers and writers for graphs and lattices."""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np

from ..errors import InvalidArgumentError
from .ergm import check_graph
from .ising import check_lattice

__all__ = ["read_graph", "write_graph", "read_lattice", "write_lattice"]

log = logging.getLogger(__name__)


def _rows(path):
    rows = []
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            rows.append(line.split())
    return rows


def read_graph(path, fmt: str = "auto", n: int | None = None) -> np.ndarray:
    """Read an undirected graph.

    ``fmt="matrix"``: whitespace-separated 0/1 adjacency matrix.
    ``fmt="edgelist"``: one ``i j`` pair per line, 0-indexed; ``n`` defaults
    to the largest index plus one.  ``"auto"`` picks the matrix format when
    the file is a square, symmetric 0/1 table and the edge list otherwise.
    """
    rows = _rows(path)
    if not rows:
        raise InvalidArgumentError(f"{path}: empty graph file")
    if fmt == "auto":
        square = all(len(r) == len(rows) for r in rows)
        if square:
            try:
                check_graph(np.array(rows, dtype=int))
                fmt = "matrix"
            except (InvalidArgumentError, ValueError):
                fmt = "edgelist"
        else:
            fmt = "edgelist"
    if fmt == "matrix":
        try:
            return check_graph(np.array(rows, dtype=int))
        except ValueError as exc:
            raise InvalidArgumentError(f"{path}: {exc}") from exc
    if fmt != "edgelist":
        raise InvalidArgumentError(f"unknown graph format {fmt!r}")
    try:
        edges = np.array(rows, dtype=int)
    except ValueError as exc:
        raise InvalidArgumentError(f"{path}: edge list must hold integer pairs") from exc
    if edges.ndim != 2 or edges.shape[1] != 2 or np.any(edges < 0):
        raise InvalidArgumentError(f"{path}: edge list must hold non-negative integer pairs")
    size = int(edges.max()) + 1 if n is None else int(n)
    adj = np.zeros((size, size), dtype=np.int8)
    adj[edges[:, 0], edges[:, 1]] = 1
    adj[edges[:, 1], edges[:, 0]] = 1
    return check_graph(adj)


def write_graph(path, adjacency, fmt: str = "matrix") -> None:
    a = check_graph(adjacency)
    if fmt == "matrix":
        np.savetxt(path, a, fmt="%d")
    elif fmt == "edgelist":
        i, j = np.nonzero(np.triu(a))
        np.savetxt(path, np.column_stack([i, j]), fmt="%d")
    else:
        raise InvalidArgumentError(f"unknown graph format {fmt!r}")


def read_lattice(path) -> tuple[np.ndarray, bool]:
    """Read rows of spins.  Returns ``(lattice, mapped)``.

    Entries may be -1/+1, or 0/1 which are mapped to -1/+1; ``mapped`` is
    True when that conversion happened.
    """
    try:
        arr = np.array(_rows(path), dtype=int)
    except ValueError as exc:
        raise InvalidArgumentError(f"{path}: lattice rows must be integers of equal length") from exc
    mapped = False
    if arr.size and np.all((arr == 0) | (arr == 1)):
        arr = 2 * arr - 1
        mapped = True
        log.warning("%s: 0/1 lattice mapped to -1/+1", path)
    return check_lattice(arr), mapped


def write_lattice(path, lattice) -> None:
    np.savetxt(path, check_lattice(lattice), fmt="%d")
