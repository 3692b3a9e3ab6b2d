"""numba ``@njit`` versions of the lattice kernels in :mod:`ss_skeleton._kernels`.

Imported lazily (numba start-up costs ~0.4 s).  The kernels live at module
level so that numba's on-disk cache (``cache=True``) is reused across
processes.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def staircase_nb(W, HL, slope):
    total = 0
    for j in range(W):
        h0 = HL + slope * j
        h1 = h0 + slope
        total += 2 * min(h0, h1) + abs(slope)
    out = np.empty((total, 3, 2), dtype=np.int64)
    t = 0
    for j in range(W):
        h0 = HL + slope * j
        h1 = h0 + slope
        lo = min(h0, h1)
        for y in range(lo):
            out[t, 0, 0] = j; out[t, 0, 1] = y
            out[t, 1, 0] = j + 1; out[t, 1, 1] = y
            out[t, 2, 0] = j; out[t, 2, 1] = y + 1
            t += 1
            out[t, 0, 0] = j + 1; out[t, 0, 1] = y
            out[t, 1, 0] = j + 1; out[t, 1, 1] = y + 1
            out[t, 2, 0] = j; out[t, 2, 1] = y + 1
            t += 1
        if h1 > h0:
            for y in range(h0, h1):
                out[t, 0, 0] = j; out[t, 0, 1] = h0
                out[t, 1, 0] = j + 1; out[t, 1, 1] = y
                out[t, 2, 0] = j + 1; out[t, 2, 1] = y + 1
                t += 1
        elif h0 > h1:
            for y in range(h1, h0):
                out[t, 0, 0] = j + 1; out[t, 0, 1] = h1
                out[t, 1, 0] = j; out[t, 1, 1] = y + 1
                out[t, 2, 0] = j; out[t, 2, 1] = y
                t += 1
    return out

@njit(cache=True)
def dets_nb(tris):
    T = tris.shape[0]
    out = np.empty(T, dtype=np.int64)
    for t in range(T):
        ax = tris[t, 1, 0] - tris[t, 0, 0]
        ay = tris[t, 1, 1] - tris[t, 0, 1]
        bx = tris[t, 2, 0] - tris[t, 0, 0]
        by = tris[t, 2, 1] - tris[t, 0, 1]
        out[t] = ax * by - ay * bx
    return out

@njit(cache=True)
def tiling_nb(tris, W, HL, slope):
    T = tris.shape[0]
    for t in range(T):
        for v in range(3):
            x = tris[t, v, 0]
            y = tris[t, v, 1]
            if x < 0 or x > W or y < 0 or y > HL + slope * x:
                return 1, t
    det = dets_nb(tris)
    area2 = 0
    for t in range(T):
        area2 += abs(det[t])
    if area2 != W * (2 * HL + slope * W):
        return 2, -1
    if T == 0:
        return 0, -1
    H = max(HL, HL + slope * W) + 1
    nv = (W + 1) * H
    n = 3 * T
    lo_v = np.empty(n, dtype=np.int64)
    hi_v = np.empty(n, dtype=np.int64)
    signs = np.empty(n, dtype=np.int64)
    owner = np.empty(n, dtype=np.int64)
    e = 0
    for t in range(T):
        s = 1 if det[t] > 0 else (-1 if det[t] < 0 else 0)
        for i in range(3):
            j = (i + 1) % 3
            a = tris[t, i, 0] * H + tris[t, i, 1]
            b = tris[t, j, 0] * H + tris[t, j, 1]
            if a < b:
                lo_v[e] = a; hi_v[e] = b; signs[e] = s
            else:
                lo_v[e] = b; hi_v[e] = a; signs[e] = -s
            owner[e] = t
            e += 1
    # counting sort by lower endpoint; buckets are tiny
    start = np.zeros(nv + 1, dtype=np.int64)
    for e in range(n):
        start[lo_v[e] + 1] += 1
    for v in range(nv):
        start[v + 1] += start[v]
    fill = start[:-1].copy()
    order = np.empty(n, dtype=np.int64)
    for e in range(n):
        order[fill[lo_v[e]]] = e
        fill[lo_v[e]] += 1
    for v in range(nv):
        b0 = start[v]
        b1 = start[v + 1]
        for p in range(b0, b1):
            ep = order[p]
            c = 0
            first = -1
            for q in range(b0, b1):
                eq = order[q]
                if hi_v[eq] == hi_v[ep]:
                    if first < 0:
                        first = eq
                    c += 1
            if c > 2:
                return 3, owner[ep]
            if c == 2:
                if first != ep and signs[first] == signs[ep]:
                    return 3, owner[ep]
            elif c == 1:
                x0 = v // H; y0 = v % H; x1 = hi_v[ep] // H; y1 = hi_v[ep] % H
                on = (x0 == 0 and x1 == 0) or (x0 == W and x1 == W) or (y0 == 0 and y1 == 0) or (
                    y0 == HL + slope * x0 and y1 == HL + slope * x1
                )
                if not on:
                    return 4, owner[ep]
    return 0, -1
