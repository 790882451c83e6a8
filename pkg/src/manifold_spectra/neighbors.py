"""
Fixed-radius neighbour search by uniform grid hashing.

Points are bucketed into cubic cells of side ``radius``; two points within
``radius`` of each other always sit in cells whose integer keys differ by at
most one per coordinate, so only ``3^d`` cells are scanned per cell. Pairs
are produced in blocks so callers can accumulate sums without holding every
pair in memory.
"""

import itertools
import logging
from collections.abc import Iterator

import numpy as np
import numpy.typing as npt
from scipy.spatial.distance import cdist

from .util import as_points

__all__ = [
    "iter_pairs_within",
    "iter_cross_pairs_within",
    "pairs_within",
    "cross_pairs_within",
]

logger = logging.getLogger(__name__)

IntArray = npt.NDArray[np.int64]
Array = npt.NDArray[np.float64]
PairBlock = tuple[IntArray, IntArray, Array]

#: Ambient dimension above which grid hashing stops paying off
GRID_MAX_DIM = 6
#: Largest point count handled by the all-pairs fallback
BRUTE_FORCE_MAX_POINTS = 20000
#: Query rows per distance block
BLOCK_ROWS = 1024


def _cells(points: Array, side: float) -> dict[tuple[int, ...], IntArray]:
    """Map integer cell keys to ascending point indices."""
    keys = np.floor(points / side).astype(np.int64)
    uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    order = np.argsort(inverse, kind="stable")
    bounds = np.concatenate(([0], np.cumsum(np.bincount(inverse))))
    return {
        tuple(int(c) for c in key): order[bounds[k] : bounds[k + 1]]
        for k, key in enumerate(uniq)
    }


def _use_grid(d: int, n: int) -> bool:
    if d <= GRID_MAX_DIM:
        return True
    if n <= BRUTE_FORCE_MAX_POINTS:
        return False
    logger.warning(
        "ambient dimension %d with %d points: using grid hashing anyway", d, n
    )
    return True


def _emit(
    rows: IntArray, cols: IntArray, dist: Array, mask: npt.NDArray[np.bool_]
) -> PairBlock | None:
    qi, pj = np.nonzero(mask)
    if qi.size == 0:
        return None
    return rows[qi], cols[pj], dist[qi, pj]


def iter_pairs_within(
    points: npt.ArrayLike, radius: float, include_self: bool = False
) -> Iterator[PairBlock]:
    """
    Yield blocks ``(i, j, dist)`` of unordered pairs with ``|x_i - x_j| <= radius``.

    Every unordered pair appears exactly once with ``i < j``; with
    ``include_self`` the pairs ``(i, i)`` are yielded too.
    """
    x = as_points(points)
    if radius <= 0:
        raise ValueError(f"radius must be positive, got {radius}")
    n, d = x.shape
    if n == 0:
        return

    if not _use_grid(d, n):
        for start in range(0, n, BLOCK_ROWS):
            rows = np.arange(start, min(start + BLOCK_ROWS, n))
            cols = np.arange(start, n)
            dist = cdist(x[rows], x[cols])
            upper = cols[np.newaxis, :] >= rows[:, np.newaxis] + (
                0 if include_self else 1
            )
            block = _emit(rows, cols, dist, (dist <= radius) & upper)
            if block is not None:
                yield block
        return

    cells = _cells(x, radius)
    zero = (0,) * d
    forward = [o for o in itertools.product((-1, 0, 1), repeat=d) if o > zero]
    for key in sorted(cells):
        own = cells[key]
        others = [
            cells[nb]
            for nb in (tuple(k + o for k, o in zip(key, off)) for off in forward)
            if nb in cells
        ]
        cols = np.concatenate([own, *others])
        in_own = np.zeros(cols.size, dtype=bool)
        in_own[: own.size] = True
        for start in range(0, own.size, BLOCK_ROWS):
            rows = own[start : start + BLOCK_ROWS]
            dist = cdist(x[rows], x[cols])
            if include_self:
                same = cols[np.newaxis, :] >= rows[:, np.newaxis]
            else:
                same = cols[np.newaxis, :] > rows[:, np.newaxis]
            keep = (dist <= radius) & (~in_own[np.newaxis, :] | same)
            block = _emit(rows, cols, dist, keep)
            if block is not None:
                i, j, dd = block
                yield np.minimum(i, j), np.maximum(i, j), dd


def iter_cross_pairs_within(
    queries: npt.ArrayLike, points: npt.ArrayLike, radius: float
) -> Iterator[PairBlock]:
    """
    Yield blocks ``(q, p, dist)`` with ``|queries[q] - points[p]| <= radius``.
    """
    xq = as_points(queries, "queries")
    xp = as_points(points)
    if radius <= 0:
        raise ValueError(f"radius must be positive, got {radius}")
    if xq.shape[1] != xp.shape[1]:
        raise ValueError("queries and points must share the ambient dimension")
    nq, d = xq.shape
    if nq == 0 or xp.shape[0] == 0:
        return

    if not _use_grid(d, max(nq, xp.shape[0])):
        cols = np.arange(xp.shape[0])
        for start in range(0, nq, BLOCK_ROWS):
            rows = np.arange(start, min(start + BLOCK_ROWS, nq))
            dist = cdist(xq[rows], xp)
            block = _emit(rows, cols, dist, dist <= radius)
            if block is not None:
                yield block
        return

    point_cells = _cells(xp, radius)
    query_cells = _cells(xq, radius)
    offsets = list(itertools.product((-1, 0, 1), repeat=d))
    for key in sorted(query_cells):
        near = [
            point_cells[nb]
            for nb in (tuple(k + o for k, o in zip(key, off)) for off in offsets)
            if nb in point_cells
        ]
        if not near:
            continue
        cols = np.sort(np.concatenate(near))
        own = query_cells[key]
        for start in range(0, own.size, BLOCK_ROWS):
            rows = own[start : start + BLOCK_ROWS]
            dist = cdist(xq[rows], xp[cols])
            block = _emit(rows, cols, dist, dist <= radius)
            if block is not None:
                yield block


def _collect(blocks: Iterator[PairBlock]) -> PairBlock:
    parts = list(blocks)
    if not parts:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty.copy(), np.empty(0)
    i = np.concatenate([p[0] for p in parts]).astype(np.int64)
    j = np.concatenate([p[1] for p in parts]).astype(np.int64)
    dist = np.concatenate([p[2] for p in parts])
    order = np.lexsort((j, i))
    return i[order], j[order], dist[order]


def pairs_within(
    points: npt.ArrayLike, radius: float, include_self: bool = False
) -> PairBlock:
    """
    All unordered pairs within ``radius``, sorted by ``(i, j)`` with ``i <= j``.
    """
    return _collect(iter_pairs_within(points, radius, include_self))


def cross_pairs_within(
    queries: npt.ArrayLike, points: npt.ArrayLike, radius: float
) -> PairBlock:
    """
    All ``(query, point)`` pairs within ``radius``, sorted by ``(q, p)``.
    """
    return _collect(iter_cross_pairs_within(queries, points, radius))
