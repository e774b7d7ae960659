import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from ahsc import linalg
from ahsc.errors import SizeError


finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


def matrices(max_side=8):
    shapes = st.tuples(st.integers(1, max_side), st.integers(1, max_side))
    return shapes.flatmap(lambda s: arrays(np.float64, s, elements=finite))


class TestFrobenius:
    def test_identity(self):
        assert linalg.frobenius_norm(np.eye(3)) == pytest.approx(math.sqrt(3), abs=1e-12)

    def test_zero(self):
        assert linalg.frobenius_norm(np.zeros((2, 5))) == 0.0

    def test_345(self):
        assert linalg.frobenius_norm([[3, 4], [0, 0]]) == 5.0

    @given(matrices(), st.floats(-1e3, 1e3, allow_nan=False).filter(lambda c: c != 0))
    def test_homogeneous(self, A, c):
        # entries of cA are rounded once, so allow a few ulp on the result
        lhs = linalg.frobenius_norm(c * A)
        rhs = abs(c) * linalg.frobenius_norm(A)
        assert abs(lhs - rhs) <= 4 * np.spacing(max(rhs, np.finfo(float).tiny))

    @given(matrices())
    def test_zero_iff_zero_matrix(self, A):
        assert (linalg.frobenius_norm(A) == 0) == (not np.any(A))


class TestSpectral:
    @pytest.mark.parametrize(
        "M, expected",
        [
            (np.diag([2.0, 1.0]), 2.0),
            (np.zeros((3, 3)), 0.0),
            (np.array([[0.0, 1.0], [0.0, 0.0]]), 1.0),
        ],
    )
    def test_examples(self, M, expected):
        assert linalg.spectral_norm(M) == pytest.approx(expected, abs=1e-12)

    def test_matches_svd(self, rng):
        for _ in range(20):
            A = rng.standard_normal(tuple(rng.integers(1, 12, size=2)))
            assert linalg.spectral_norm(A) == pytest.approx(np.linalg.svd(A, compute_uv=False)[0], rel=1e-9)

    def test_nonconvergence_warns_with_estimate(self):
        A = np.diag([1.0, 0.999999])
        with pytest.warns(linalg.ConvergenceWarning):
            v = linalg.spectral_norm(A, tol=1e-15, max_iter=2)
        assert 0 < v <= 1.0
        res = linalg.power_iteration(A, tol=1e-15, max_iter=2)
        assert not res.converged and res.iterations == 2

    def test_seed_determinism(self, rng):
        A = rng.standard_normal((6, 4))
        assert linalg.spectral_norm(A, seed=5) == linalg.spectral_norm(A, seed=5)

    @given(matrices())
    def test_never_exceeds_frobenius(self, A):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", linalg.ConvergenceWarning)
            assert linalg.spectral_norm(A) <= linalg.frobenius_norm(A) * (1 + 1e-12)


class TestJacobi:
    @pytest.mark.parametrize(
        "S, expected",
        [
            (np.diag([-1.0, 3.0]), (-1.0, 3.0)),
            (np.eye(4), (1.0, 1.0)),
            (np.array([[0.0, 1.0], [1.0, 0.0]]), (-1.0, 1.0)),
        ],
    )
    def test_examples(self, S, expected):
        lo, hi = linalg.sym_eig_extremes(S)
        assert lo == pytest.approx(expected[0], abs=1e-12)
        assert hi == pytest.approx(expected[1], abs=1e-12)

    def test_against_lapack(self, rng):
        for n in (1, 2, 5, 17, 40):
            B = rng.standard_normal((n, n))
            S = (B + B.T) / 2
            ev = linalg.jacobi_eigenvalues(S)
            np.testing.assert_allclose(ev, np.linalg.eigvalsh(S), atol=1e-10 * np.abs(S).max())

    def test_size_limit(self):
        with pytest.raises(SizeError):
            linalg.sym_eig_extremes(np.eye(linalg.JACOBI_MAX_DIM + 1))

    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError):
            linalg.sym_eig_extremes(np.array([[1.0, 2.0], [0.0, 1.0]]))

    def test_psd_lambda_max_is_spectral_norm(self, rng):
        tol = 1e-12
        for _ in range(10):
            B = rng.standard_normal((6, 6))
            S = B @ B.T
            S = (S + S.T) / 2
            _, hi = linalg.sym_eig_extremes(S, tol=tol)
            assert abs(hi - linalg.spectral_norm(S, tol=tol)) <= 10 * tol * hi


def test_norm_sandwich_random(rng):
    for _ in range(50):
        r, c = rng.integers(1, 16, size=2)
        k = rng.integers(1, min(r, c) + 1)
        A = rng.standard_normal((r, k)) @ rng.standard_normal((k, c))
        rank = np.linalg.matrix_rank(A)
        s, f = linalg.spectral_norm(A), linalg.frobenius_norm(A)
        assert s <= f + 1e-9
        assert f <= math.sqrt(rank) * s + 1e-9


def test_loewner_order_psd(rng):
    for _ in range(50):
        n = rng.integers(1, 10)
        B = rng.standard_normal((n, n))
        C = rng.standard_normal((n, n))
        B, C = B @ B.T, C @ C.T
        assert linalg.spectral_norm(B + C) >= linalg.spectral_norm(B) - 1e-9


def test_loewner_order_fails_for_indefinite():
    # A >= B in the Loewner order but ||A||_2 < ||B||_2: why the property is only claimed for PSD pairs
    A = np.diag([1.0, -1.0])
    B = np.diag([0.0, -3.0])
    assert np.all(np.linalg.eigvalsh(A - B) >= 0)
    assert linalg.spectral_norm(A) < linalg.spectral_norm(B)
