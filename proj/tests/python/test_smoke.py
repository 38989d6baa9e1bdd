"""Smoke tests for the python extension module."""

import numpy as np
import pytest

try:
    import maxconv as mc
except ImportError:
    import _maxconv as mc


def brute_force(L, R):
    L = np.asarray(L, dtype=float)
    R = np.asarray(R, dtype=float)
    out = np.zeros(len(L) + len(R) - 1)
    for i, a in enumerate(L):
        for j, b in enumerate(R):
            out[i + j] = max(out[i + j], a * b)
    return out


def test_naive_matches_brute_force():
    rng = np.random.default_rng(1)
    L = rng.random(37)
    R = rng.random(23)
    np.testing.assert_allclose(mc.naive_max_convolve(L, R), brute_force(L, R), rtol=0, atol=0)
    assert mc.naive_max_convolve([1.0, 0.5], [0.5, 1.0]).tolist() == [0.5, 1.0, 0.5]


def test_approximate_methods_track_the_oracle():
    rng = np.random.default_rng(2)
    L = rng.random(512)
    R = rng.random(512)
    exact = mc.naive_max_convolve(L, R)
    for method in ("piecewise", "piecewise-affine", "projection-affine"):
        approx = mc.max_convolve(L, R, method=method)
        assert approx.shape == exact.shape
        mask = exact > 1e-3
        rel = np.abs(approx[mask] - exact[mask]) / exact[mask]
        assert rel.max() < 0.25, method
    affine = mc.max_convolve(L, R, method="projection-affine")
    assert np.mean(np.abs(affine - exact)) < 5e-3  # p*max=64 top-contour bound is 2.2%


def test_full_diagnostics():
    rng = np.random.default_rng(3)
    L = rng.random(1024)
    R = rng.random(1024)
    res = mc.max_convolve(L, R, method="piecewise-affine", full=True)
    assert res["method"] == "piecewise-affine"
    assert len(res["ladder"]) == 14  # ceil(log2(select_pstar_max(2047))) + 1
    assert res["fft_count"] == 14
    assert res["values"].shape == (2047,)
    assert res["stable"].all()
    assert set(np.unique(res["pstar"])) <= set(res["ladder"])


def test_tensor_path():
    rng = np.random.default_rng(4)
    A = rng.random((12, 12))
    B = rng.random((12, 12))
    exact = mc.naive_max_convolve(A, B)
    assert exact.shape == (23, 23)
    approx = mc.max_convolve(A, B, method="projection-affine", pstar_max=64)
    mask = exact > 1e-3
    rel = np.abs(approx[mask] - exact[mask]) / exact[mask]
    assert rel.max() < 0.1


def test_deconvolve_roundtrip():
    rng = np.random.default_rng(5)
    L = 0.35 + 0.6 * rng.random(24)
    R = 0.35 + 0.6 * rng.random(41)
    p = 4.0
    forward = np.convolve(L**p, R**p) ** (1.0 / p)
    rec, unstable = mc.max_deconvolve(forward, L, pstar=p)
    assert not unstable
    np.testing.assert_allclose(rec, R, rtol=1e-5)


def test_constants_and_bounds():
    assert mc.projection_pstar_max_for_error(0.005) == pytest.approx(284.626, abs=0.01)
    assert mc.projection_error_mode(1e-12) == pytest.approx(14.517, abs=0.01)
    assert mc.select_pstar_max(1024, 1e-12) == pytest.approx(6934.94, abs=0.01)
    assert mc.error_bound_fixed(1024, 8.0) == pytest.approx(2 ** 1.25 - 1)
    assert mc.error_bound_middle_contour(1, 4.0) == 0.0
    t, degenerate = mc.t_ratio(np.array([1.0, 0.5, 0.5]), 1.0)
    assert t == pytest.approx(1.0)
    assert not degenerate
    assert mc.max_quad(2.0, 1.5, 1.25, 1.125, 1.0) == pytest.approx(1.0)
    assert mc.max_lin(1.25, 1.125, 1.0) == pytest.approx(0.9)


def test_viterbi_matches_brute_force():
    rng = np.random.default_rng(6)
    k, a, n = 3, 2, 5
    prior = rng.random(k)
    likelihood = rng.random((a, k))
    delta = rng.random(2 * k - 1)
    data = rng.integers(0, a, size=n)

    def score(path):
        s = prior[path[0]]
        for i in range(n):
            s *= likelihood[data[i], path[i]]
        for i in range(n - 1):
            s *= delta[path[i + 1] - path[i] + k - 1]
        return s

    best, best_path = -1.0, None
    for code in range(k**n):
        path, c = [], code
        for _ in range(n):
            path.append(c % k)
            c //= k
        s = score(path)
        if s > best:
            best, best_path = s, path

    got = mc.viterbi_additive(prior, likelihood, delta, data.tolist(), kernel="exact")
    assert score(got.tolist()) == pytest.approx(best)

    approx = mc.viterbi_additive(
        prior, likelihood, delta, data.tolist(), kernel="projection-affine"
    )
    stats = mc.compare_paths(got.tolist(), approx.tolist())
    assert stats["agreement"] >= 0.6
    assert len(approx) == n


def test_discretize_and_estimate():
    d = mc.discretize(np.array([0.0, 1.0, 2.0, 3.0]), 2)
    assert d["indices"].tolist() == [0, 0, 1, 1]
    model = mc.estimate_empirical_model([0, 1, 0, 1], 2, [0, 1, 1, 0], 2, smoothing=0.0)
    assert model["prior"].tolist() == [0.5, 0.5]
    assert model["delta"].tolist() == pytest.approx([1 / 3, 0.0, 2 / 3])
    assert model["likelihood"].shape == (2, 2)


def test_errors_are_raised():
    with pytest.raises(ValueError):
        mc.max_convolve(np.array([1.0, -2.0]), np.array([1.0]), method="piecewise")
    with pytest.raises(ValueError):
        mc.max_convolve(np.array([1.0]), np.array([1.0]), method="bogus")
    with pytest.raises(ValueError):
        mc.projection_pstar_max_for_error(0.5)
    with pytest.raises(ValueError):
        mc.estimate_empirical_model([0, 5], 2, [0, 1], 2)
    with pytest.raises(ValueError):
        mc.viterbi_additive(
            np.ones(2), np.full((2, 2), 0.5), np.array([0.2, 0.6, 0.2]), [0, 7]
        )
