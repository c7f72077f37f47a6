import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scenechar.matrix_ops import (
    SvdFactors,
    norms,
    read_matrix,
    soft_threshold,
    soft_threshold_matrix,
    svd,
    svt,
    write_matrix,
)

finite = st.floats(-1e6, 1e6, allow_nan=False)
thresholds = st.floats(0, 1e6, allow_nan=False)


@pytest.mark.parametrize(
    "a, lam, expected",
    [(5, 2, 3), (-5, 2, -3), (1, 2, 0), (-1, 2, 0), (2, 2, 0), (3.5, 0, 3.5), (-7.25, 0, -7.25)],
)
def test_soft_threshold_cases(a, lam, expected):
    assert soft_threshold(a, lam) == expected


@pytest.mark.parametrize("a, lam", [(math.nan, 1.0), (math.inf, 1.0), (1.0, -0.1), (1.0, math.nan)])
def test_soft_threshold_rejects(a, lam):
    with pytest.raises(ValueError):
        soft_threshold(a, lam)


@given(finite, thresholds)
def test_soft_threshold_shrinks_toward_zero(a, lam):
    r = soft_threshold(a, lam)
    assert abs(r) <= abs(a)
    assert r == 0 or math.copysign(1, r) == math.copysign(1, a)


@given(finite, thresholds)
def test_soft_threshold_odd(a, lam):
    assert soft_threshold(-a, lam) == -soft_threshold(a, lam)


@given(finite, finite, thresholds)
def test_soft_threshold_lipschitz(a, b, lam):
    ulp = 4 * np.finfo(float).eps * max(abs(a), abs(b), lam)
    assert abs(soft_threshold(a, lam) - soft_threshold(b, lam)) <= abs(a - b) + ulp


def test_soft_threshold_matrix_examples():
    assert np.array_equal(soft_threshold_matrix(np.zeros((3, 4)), 0.7), np.zeros((3, 4)))
    out = soft_threshold_matrix([[3, -1], [0.5, -4]], 1)
    assert np.array_equal(out, [[2, 0], [0, -3]])


def test_soft_threshold_matrix_matches_scalar(rng):
    a = rng.normal(size=(7, 9)) * 3
    out = soft_threshold_matrix(a, 1.1)
    ref = np.vectorize(lambda v: soft_threshold(v, 1.1))(a)
    assert np.array_equal(out, ref)


def test_soft_threshold_matrix_rejects_nonfinite():
    with pytest.raises(ValueError):
        soft_threshold_matrix([[1.0, np.nan]], 0.1)
    with pytest.raises(ValueError):
        soft_threshold_matrix([[1.0]], -1.0)


def _l1_prox_objective(x, a, lam):
    return lam * np.abs(x).sum() + 0.5 * np.sum((x - a) ** 2)


def test_soft_threshold_matrix_is_minimizer(rng):
    a = rng.normal(size=(5, 5))
    lam = 0.3
    x = soft_threshold_matrix(a, lam)
    f = _l1_prox_objective(x, a, lam)
    assert f <= _l1_prox_objective(a, a, lam)
    for scale in (1e-1, 1e-3):
        for _ in range(500):
            p = x + scale * rng.normal(size=x.shape)
            assert _l1_prox_objective(p, a, lam) >= f - 1e-15


def _check_factors(m, f: SvdFactors):
    k = min(m.shape)
    assert f.u.shape == (m.shape[0], k) and f.v.shape == (m.shape[1], k) and f.s.shape == (k,)
    assert np.all(f.s >= 0) and np.all(np.diff(f.s) <= 0)
    assert np.max(np.abs(f.u.T @ f.u - np.eye(k))) <= 1e-10
    assert np.max(np.abs(f.v.T @ f.v - np.eye(k))) <= 1e-10
    scale = max(np.linalg.norm(m), 1e-300)
    assert np.linalg.norm(f.reconstruct() - m) / scale <= 1e-8


@pytest.mark.parametrize("shape", [(1, 1), (3, 3), (6, 4), (4, 6), (20, 7)])
def test_svd_invariants(rng, shape):
    m = rng.normal(size=shape)
    _check_factors(m, svd(m))


def test_svd_identity_and_diagonal():
    assert np.allclose(svd(np.eye(3)).s, [1, 1, 1], atol=1e-14)
    f = svd(np.diag([3.0, 1.0]))
    assert np.allclose(f.s, [3, 1], atol=1e-14)
    for q in (f.u, f.v):
        assert np.allclose(np.abs(q), np.eye(2), atol=1e-14)


def test_svd_rank_one(rng):
    a = rng.normal(size=5)
    b = rng.normal(size=4)
    a *= 2 / np.linalg.norm(a)
    b *= 3 / np.linalg.norm(b)
    s = svd(np.outer(a, b)).s
    assert s[0] == pytest.approx(6.0, rel=1e-12)
    assert np.all(s[1:] < 1e-12)


def test_svd_sign_convention(rng):
    m = rng.normal(size=(6, 5))
    f = svd(m)
    for j in range(f.u.shape[1]):
        col = f.u[:, j]
        first = col[np.abs(col) > 1e-12][0]
        assert first > 0
    g = svd(m.copy())
    assert np.array_equal(f.u, g.u) and np.array_equal(f.v, g.v)


def test_svd_rejects_nonfinite():
    with pytest.raises(ValueError):
        svd([[1.0, np.inf]])


def test_svt_examples(rng):
    assert np.allclose(svt(np.diag([3.0, 1.0]), 2), np.diag([1.0, 0.0]), atol=1e-12)
    m = rng.normal(size=(5, 7))
    assert np.linalg.norm(svt(m, 0) - m) / np.linalg.norm(m) <= 1e-8
    smax = np.linalg.svd(m, compute_uv=False)[0]
    assert np.array_equal(svt(m, smax), np.zeros_like(m))
    assert np.array_equal(svt(m, smax * 2), np.zeros_like(m))


def test_svt_does_not_raise_rank(rng):
    m = rng.normal(size=(8, 2)) @ rng.normal(size=(2, 8))
    out = svt(m, 0.1)
    assert np.linalg.matrix_rank(out, tol=1e-9) <= np.linalg.matrix_rank(m, tol=1e-9)


def test_svt_nonexpansive(rng):
    for _ in range(50):
        a, b = rng.normal(size=(6, 6)), rng.normal(size=(6, 6))
        tau = rng.uniform(0, 2)
        assert np.linalg.norm(svt(a, tau) - svt(b, tau)) <= np.linalg.norm(a - b) * (1 + 1e-12)


def test_norms_examples():
    n = norms(np.eye(3))
    assert n["nuclear"] == pytest.approx(3) and n["l1"] == 3 and n["l0"] == 3
    assert n["frobenius"] == pytest.approx(math.sqrt(3))
    assert norms(np.zeros((2, 3))) == {"nuclear": 0.0, "l1": 0.0, "frobenius": 0.0, "l0": 0}
    d = norms(np.diag([3.0, 4.0]))
    assert d["nuclear"] == pytest.approx(7) and d["frobenius"] == pytest.approx(5)


def test_norms_l0_tolerance():
    assert norms([[1e-13, 2e-12, 0.0]])["l0"] == 1


def test_norms_agree_with_singular_values(rng):
    m = rng.normal(size=(7, 4))
    s = np.linalg.svd(m, compute_uv=False)
    n = norms(m)
    assert n["nuclear"] == pytest.approx(s.sum(), rel=1e-8)
    assert n["frobenius"] ** 2 == pytest.approx(np.sum(s**2), rel=1e-8)


def test_matrix_text_roundtrip(tmp_path, rng):
    m = rng.normal(size=(3, 5))
    p = tmp_path / "m.txt"
    write_matrix(p, m)
    assert p.read_text().splitlines()[0] == "3 5"
    assert np.array_equal(read_matrix(p), m)


@pytest.mark.parametrize(
    "text",
    ["", "2 2\n1 2\n", "2 2\n1 2\n3\n", "x y\n", "1 1\nnan\n"],
)
def test_matrix_text_errors(tmp_path, text):
    p = tmp_path / "bad.txt"
    p.write_text(text)
    with pytest.raises(ValueError):
        read_matrix(p)
