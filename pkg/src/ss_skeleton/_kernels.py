"""Integer lattice kernels for leaf triangulations.

A leaf region in scaled coordinates is the lattice trapezoid
``0 <= x <= W, 0 <= y <= HL + slope * x`` with integer ``W, HL, slope``.
Triangles are ``(T, 3, 2)`` int64 arrays.

Backends: pure numpy, or numba ``@njit`` kernels.  ``SS_SKELETON_NUMBA``
selects: ``0``/``off`` disables numba, ``1``/``force`` always uses it, and the
default ``auto`` uses numba only from ``NUMBA_THRESHOLD`` triangles on.
Loading the cached numba kernels costs about 0.8 s per process (several
seconds on the very first compile), while numba saves roughly 0.5 us per
triangle across staircase + dets + tiling; see ``benchmarks/bench_kernels.py``.
"""

from __future__ import annotations

import importlib.util
import logging
import os

import numpy as np

log = logging.getLogger(__name__)

NUMBA_THRESHOLD = 1_000_000

# tiling verdict codes
TILING_OK = 0
TILING_OUTSIDE = 1
TILING_AREA = 2
TILING_EDGE = 3
TILING_BOUNDARY = 4

TILING_MESSAGES = {
    TILING_OK: "ok",
    TILING_OUTSIDE: "triangle vertex outside the leaf region",
    TILING_AREA: "triangle areas do not sum to the leaf area",
    TILING_EDGE: "edge shared by more than two triangles or with equal orientation",
    TILING_BOUNDARY: "unshared edge not on the leaf boundary",
}


def _mode() -> str:
    v = os.environ.get("SS_SKELETON_NUMBA", "auto").strip().lower()
    if v in ("0", "off", "false", "no"):
        return "off"
    if v in ("1", "force", "on", "true", "yes"):
        return "force"
    return "auto"


# ---------------------------------------------------------------- numpy path


def staircase_numpy(W: int, HL: int, slope: int) -> np.ndarray:
    if W <= 0:
        return np.zeros((0, 3, 2), dtype=np.int64)
    x = np.arange(W, dtype=np.int64)
    h0 = HL + slope * x
    h1 = h0 + slope
    lo = np.minimum(h0, h1)
    out = []
    # squares below min(h0, h1): two triangles each, diagonal of slope -1
    cols = np.repeat(x, lo)
    if cols.size:
        starts = np.cumsum(lo) - lo
        ys = np.arange(cols.size, dtype=np.int64) - np.repeat(starts, lo)
        a = np.stack([cols, ys], axis=1)
        b = np.stack([cols + 1, ys], axis=1)
        c = np.stack([cols, ys + 1], axis=1)
        d = np.stack([cols + 1, ys + 1], axis=1)
        sq = np.empty((2 * cols.size, 3, 2), dtype=np.int64)
        sq[0::2] = np.stack([a, b, c], axis=1)
        sq[1::2] = np.stack([b, d, c], axis=1)
        out.append(sq)
    # fan over the sloped top of each column
    k = abs(slope)
    if k:
        cols = np.repeat(x, k)
        ys = np.tile(np.arange(k, dtype=np.int64), W) + np.repeat(lo, k)
        if slope > 0:
            apex = np.stack([cols, np.repeat(h0, k)], axis=1)
            p = np.stack([cols + 1, ys], axis=1)
            q = np.stack([cols + 1, ys + 1], axis=1)
        else:
            apex = np.stack([cols + 1, np.repeat(h1, k)], axis=1)
            p = np.stack([cols, ys + 1], axis=1)
            q = np.stack([cols, ys], axis=1)
        out.append(np.stack([apex, p, q], axis=1))
    if not out:
        return np.zeros((0, 3, 2), dtype=np.int64)
    tris = np.concatenate(out)
    # column-major order, matching the numba kernel
    order = np.lexsort((tris[:, :, 1].min(axis=1), tris[:, :, 0].min(axis=1)))
    return tris[order]


def dets_numpy(tris: np.ndarray) -> np.ndarray:
    e1 = tris[:, 1] - tris[:, 0]
    e2 = tris[:, 2] - tris[:, 0]
    return e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]


def tiling_numpy(tris: np.ndarray, W: int, HL: int, slope: int) -> tuple[int, int]:
    T = tris.shape[0]
    xs, ys = tris[:, :, 0], tris[:, :, 1]
    inside = (xs >= 0) & (xs <= W) & (ys >= 0) & (ys <= HL + slope * xs)
    bad = np.nonzero(~inside.all(axis=1))[0]
    if bad.size:
        return TILING_OUTSIDE, int(bad[0])
    det = dets_numpy(tris)
    if int(np.abs(det).sum()) != W * (2 * HL + slope * W):
        return TILING_AREA, -1
    if T == 0:
        return TILING_OK, -1
    H = max(HL, HL + slope * W) + 1
    vid = xs * H + ys
    nv = (W + 1) * H
    keys = []
    signs = []
    for i, j, k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        a, b = vid[:, i], vid[:, j]
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        keys.append(lo * nv + hi)
        # side of the opposite vertex relative to the edge directed lo -> hi
        flip = np.where(a < b, 1, -1)
        signs.append(np.sign(det) * flip)
    keys = np.concatenate(keys)
    signs = np.concatenate(signs)
    tri_of = np.tile(np.arange(T), 3)
    order = np.argsort(keys, kind="stable")
    keys, signs, tri_of = keys[order], signs[order], tri_of[order]
    uniq, start, counts = np.unique(keys, return_index=True, return_counts=True)
    over = np.nonzero(counts > 2)[0]
    if over.size:
        return TILING_EDGE, int(tri_of[start[over[0]]])
    pairs = start[counts == 2]
    same = np.nonzero(signs[pairs] == signs[pairs + 1])[0]
    if same.size:
        return TILING_EDGE, int(tri_of[pairs[same[0]]])
    singles = start[counts == 1]
    lo, hi = uniq[counts == 1] // nv, uniq[counts == 1] % nv
    x0, y0, x1, y1 = lo // H, lo % H, hi // H, hi % H
    on = (
        ((x0 == 0) & (x1 == 0))
        | ((x0 == W) & (x1 == W))
        | ((y0 == 0) & (y1 == 0))
        | ((y0 == HL + slope * x0) & (y1 == HL + slope * x1))
    )
    off = np.nonzero(~on)[0]
    if off.size:
        return TILING_BOUNDARY, int(tri_of[singles[off[0]]])
    return TILING_OK, -1


# ---------------------------------------------------------------- numba path

_compiled = None


def _compile():
    """The numba kernels ``(staircase, dets, tiling)``, imported on first use."""
    global _compiled
    if _compiled is None:
        from . import _numba_kernels as nb

        _compiled = (nb.staircase_nb, nb.dets_nb, nb.tiling_nb)
    return _compiled


def _numba_available() -> bool:
    return importlib.util.find_spec("numba") is not None


def _use_numba(size: int) -> bool:
    mode = _mode()
    if mode == "off" or (mode == "auto" and size < NUMBA_THRESHOLD):
        return False
    if not _numba_available():
        if mode == "force":
            log.warning("SS_SKELETON_NUMBA=force but numba is not importable; using numpy")
        return False
    return mode == "force" or size >= NUMBA_THRESHOLD


def backend(size: int = NUMBA_THRESHOLD) -> str:
    """Backend that would serve a problem of ``size`` triangles."""
    return "numba" if _use_numba(size) else "numpy"


def _triangle_count(W: int, HL: int, slope: int) -> int:
    return W * (2 * HL + slope * W)  # each unimodular triangle has doubled area 1


def staircase(W: int, HL: int, slope: int) -> np.ndarray:
    """Unimodular triangulation of the lattice trapezoid."""
    if W < 0 or HL < 0 or HL + slope * W < 0:
        raise ValueError("trapezoid must have nonnegative width and heights")
    if _use_numba(_triangle_count(W, HL, slope)):
        return _compile()[0](np.int64(W), np.int64(HL), np.int64(slope))
    return staircase_numpy(W, HL, slope)


def dets(tris: np.ndarray) -> np.ndarray:
    tris = np.ascontiguousarray(tris, dtype=np.int64).reshape(-1, 3, 2)
    if _use_numba(tris.shape[0]):
        return _compile()[1](tris)
    return dets_numpy(tris)


def tiling(tris: np.ndarray, W: int, HL: int, slope: int) -> tuple[int, int]:
    """``(code, triangle index)``; code ``TILING_OK`` when the triangles tile the trapezoid."""
    tris = np.ascontiguousarray(tris, dtype=np.int64).reshape(-1, 3, 2)
    if _use_numba(tris.shape[0]):
        code, idx = _compile()[2](tris, np.int64(W), np.int64(HL), np.int64(slope))
        return int(code), int(idx)
    return tiling_numpy(tris, W, HL, slope)
