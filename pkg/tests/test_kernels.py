"""Staircase and tiling kernels: numpy reference vs numba backend."""

import numpy as np
import pytest

from ss_skeleton import _kernels as K

CASES = [(1, 1, 0), (3, 2, 0), (2, 0, 1), (3, 3, -1), (5, 2, 2), (1, 7, 0), (6, 6, -1), (3, 0, 2)]


def _numba_kernels():
    pytest.importorskip("numba")
    staircase, dets, tiling = K._compile()
    return {"staircase": staircase, "dets": dets, "tiling": tiling}


@pytest.mark.parametrize("W,HL,slope", CASES)
def test_numpy_staircase_tiles(W, HL, slope):
    tris = K.staircase_numpy(W, HL, slope)
    area2 = W * (2 * HL + slope * W)
    assert tris.shape == (area2, 3, 2)
    assert np.all(K.dets_numpy(tris) == 1)
    assert K.tiling_numpy(tris, W, HL, slope) == (K.TILING_OK, -1)


@pytest.mark.parametrize("W,HL,slope", CASES)
def test_numba_matches_numpy(W, HL, slope):
    nb = _numba_kernels()
    ref = K.staircase_numpy(W, HL, slope)
    got = nb["staircase"](W, HL, slope)
    np.testing.assert_array_equal(ref, got)
    np.testing.assert_array_equal(K.dets_numpy(ref), nb["dets"](ref))
    assert tuple(nb["tiling"](ref, W, HL, slope)) == K.tiling_numpy(ref, W, HL, slope)


@pytest.mark.parametrize("impl", ["numpy", "numba"])
def test_tiling_detects_mutations(impl):
    if impl == "numba":
        tiling = _numba_kernels()["tiling"]
    else:
        tiling = K.tiling_numpy
    tris = K.staircase_numpy(4, 3, 0)
    assert tuple(tiling(tris[1:], 4, 3, 0))[0] != K.TILING_OK
    moved = tris.copy()
    moved[5, 0] += (1, 0)
    assert tuple(tiling(moved, 4, 3, 0))[0] != K.TILING_OK
    outside = tris.copy()
    outside[0] += 10
    assert tuple(tiling(outside, 4, 3, 0))[0] == K.TILING_OUTSIDE
    # same area, same edges count, but one triangle doubled and one missing
    dup = np.concatenate([tris[:-1], tris[:1]])
    assert tuple(tiling(dup, 4, 3, 0))[0] != K.TILING_OK


def test_dispatch_modes(monkeypatch):
    monkeypatch.setenv("SS_SKELETON_NUMBA", "off")
    assert K.backend(10**7) == "numpy"
    monkeypatch.setenv("SS_SKELETON_NUMBA", "auto")
    assert K.backend(10) == "numpy"
    if K._numba_available():
        assert K.backend(K.NUMBA_THRESHOLD) == "numba"
        monkeypatch.setenv("SS_SKELETON_NUMBA", "force")
        assert K.backend(1) == "numba"


@pytest.mark.parametrize("mode", ["off", "force"])
def test_public_api_agrees_across_backends(monkeypatch, mode):
    if mode == "force":
        _numba_kernels()
    monkeypatch.setenv("SS_SKELETON_NUMBA", mode)
    tris = K.staircase(7, 5, 1)
    assert np.all(np.abs(K.dets(tris)) == 1)
    assert K.tiling(tris, 7, 5, 1) == (K.TILING_OK, -1)
