import math

import numpy as np
import pytest

from wpcn_maxmin.errors import RankError
from wpcn_maxmin.perron import (
    collatz_wielandt_check,
    dominant_eigenvector,
    hermitian_top_eigenpair,
    nullspace_basis,
    spectral_radius,
)


def cubic_largest_real_root(a2, a1, a0):
    """Largest real root of x^3 + a2 x^2 + a1 x + a0 via the trigonometric method."""
    p = a1 - a2**2 / 3.0
    q = 2.0 * a2**3 / 27.0 - a2 * a1 / 3.0 + a0
    shift = -a2 / 3.0
    if abs(p) < 1e-30:
        return shift + np.cbrt(-q)
    disc = (q / 2.0) ** 2 + (p / 3.0) ** 3
    if disc > 0:  # one real root
        sq = math.sqrt(disc)
        return shift + np.cbrt(-q / 2.0 + sq) + np.cbrt(-q / 2.0 - sq)
    m = 2.0 * math.sqrt(-p / 3.0)
    theta = math.acos(np.clip(3.0 * q / (p * m), -1.0, 1.0)) / 3.0
    roots = [m * math.cos(theta - 2.0 * math.pi * k / 3.0) + shift for k in range(3)]
    return max(roots)


def char_poly_3x3(a):
    """x^3 + a2 x^2 + a1 x + a0 coefficients from traces/minors (independent route)."""
    tr = np.trace(a)
    minors = (
        a[1, 1] * a[2, 2] - a[1, 2] * a[2, 1]
        + a[0, 0] * a[2, 2] - a[0, 2] * a[2, 0]
        + a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
    )
    det = np.linalg.det(a)
    return -tr, minors, -det


def jacobi_top_eigenpair(h, sweeps=100):
    """Plain complex Jacobi eigensolver, used as an oracle only."""
    a = np.array(h, dtype=complex)
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    for _ in range(sweeps):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                off = max(off, abs(apq))
                if abs(apq) < 1e-14:
                    continue
                # unitary 2x2 rotation annihilating a[p, q]
                phi = np.angle(apq)
                app, aqq = a[p, p].real, a[q, q].real
                theta = 0.5 * math.atan2(2.0 * abs(apq), app - aqq)
                c = math.cos(theta)
                s = math.sin(theta) * np.exp(-1j * phi)
                rot = np.eye(n, dtype=complex)
                rot[p, p] = c
                rot[p, q] = -np.conj(s)
                rot[q, p] = s
                rot[q, q] = c
                a = rot.conj().T @ a @ rot
                v = v @ rot
        if off < 1e-14:
            break
    vals = np.real(np.diag(a))
    idx = int(np.argmax(vals))
    return vals[idx], v[:, idx]


class TestSpectralRadius:
    def test_permutation_matrix(self):
        assert spectral_radius(np.array([[0.0, 1.0], [1.0, 0.0]])) == pytest.approx(1.0)

    def test_diagonal(self):
        assert spectral_radius(np.diag([2.0, 3.0])) == pytest.approx(3.0)

    def test_matches_cubic_roots(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            a = rng.uniform(0.0, 2.0, size=(3, 3))
            rho = spectral_radius(a, tol=1e-10)
            a2, a1, a0 = char_poly_3x3(a)
            want = cubic_largest_real_root(a2, a1, a0)
            assert rho == pytest.approx(want, rel=1e-8)

    def test_perron_bounds_random(self):
        rng = np.random.default_rng(5)
        for _ in range(1000):
            n = int(rng.integers(2, 7))
            a = rng.uniform(0.0, 1.0, size=(n, n))
            rho = spectral_radius(a)
            assert rho >= np.max(np.diag(a)) - 1e-9 * max(rho, 1.0)
            assert rho <= np.max(a.sum(axis=1)) + 1e-9 * max(rho, 1.0)

    def test_rejects_negative_entries(self):
        with pytest.raises(ValueError, match="negative"):
            spectral_radius(np.array([[1.0, -0.1], [0.0, 1.0]]))

    def test_rejects_bad_tol(self):
        with pytest.raises(ValueError, match="tol"):
            spectral_radius(np.eye(2), tol=0.0)

    def test_rejects_non_square(self):
        with pytest.raises(ValueError, match="square"):
            spectral_radius(np.ones((2, 3)))

    def test_periodic_matrix_falls_back(self):
        # period-2 structure stalls the power iteration bracket
        a = np.array([[0.0, 2.0], [0.5, 0.0]])
        assert spectral_radius(a) == pytest.approx(1.0, rel=1e-8)


class TestDominantEigenvector:
    def test_symmetric_permutation(self):
        pair = dominant_eigenvector(np.array([[0.0, 1.0], [1.0, 0.0]]))
        assert pair.value == pytest.approx(1.0)
        assert pair.vector == pytest.approx(np.array([1.0, 1.0]))

    def test_reducible_upper_triangular(self):
        pair = dominant_eigenvector(np.array([[0.0, 2.0], [0.0, 1.0]]))
        assert pair.value == pytest.approx(1.0)
        assert pair.vector == pytest.approx(np.array([2.0, 1.0]))

    def test_random_irreducible_residual(self):
        rng = np.random.default_rng(23)
        for _ in range(30):
            a = rng.uniform(0.1, 1.0, size=(4, 4))
            pair = dominant_eigenvector(a)
            res = np.linalg.norm(a @ pair.vector - pair.value * pair.vector)
            assert res <= 1e-8 * pair.value * np.linalg.norm(pair.vector)
            # cross-check the eigenvalue against a dense decomposition
            want = np.max(np.abs(np.linalg.eigvals(a)))
            assert pair.value == pytest.approx(want, rel=1e-8)
            assert np.all(pair.vector > 0)

    def test_start_vector_invariance(self):
        rng = np.random.default_rng(3)
        a = rng.uniform(0.1, 1.0, size=(5, 5))
        p1 = dominant_eigenvector(a, start=np.ones(5))
        p2 = dominant_eigenvector(a, start=rng.uniform(0.5, 2.0, size=5))
        assert p1.value == pytest.approx(p2.value, rel=1e-10)
        assert np.allclose(p1.vector, p2.vector, rtol=1e-8)

    def test_degenerate_last_component(self):
        # dominant eigenvector e1: last component vanishes
        with pytest.raises(ValueError, match="degenerate"):
            dominant_eigenvector(np.diag([2.0, 1.0]))


class TestCollatzWielandt:
    def test_certifies_true_pair(self):
        m = np.array([[0.0, 1.0], [1.0, 0.0]])
        assert collatz_wielandt_check(m, 1.0, np.array([1.0, 1.0]))

    def test_rejects_wrong_radius(self):
        m = np.array([[0.0, 1.0], [1.0, 0.0]])
        assert not collatz_wielandt_check(m, 2.0, np.array([1.0, 1.0]))

    def test_random_self_consistency(self):
        rng = np.random.default_rng(71)
        for _ in range(40):
            a = rng.uniform(0.05, 1.0, size=(3, 3))
            rho = spectral_radius(a, tol=1e-10)
            vec = dominant_eigenvector(a).vector
            assert collatz_wielandt_check(a, rho, vec)

    def test_non_positive_vector_fails(self):
        m = np.array([[0.0, 1.0], [1.0, 0.0]])
        assert not collatz_wielandt_check(m, 1.0, np.array([1.0, 0.0]))


class TestHermitianTopEigenpair:
    def test_identity(self):
        val, vec = hermitian_top_eigenpair(np.eye(3))
        assert val == pytest.approx(1.0)
        assert np.linalg.norm(vec) == pytest.approx(1.0)

    def test_rank_one(self):
        g = np.array([2.0, 0.0, 0.0], dtype=complex)
        val, vec = hermitian_top_eigenpair(np.outer(g, g.conj()))
        assert val == pytest.approx(4.0)
        assert abs(np.vdot(vec, g / 2.0)) == pytest.approx(1.0)

    def test_random_matches_jacobi_oracle(self):
        rng = np.random.default_rng(9)
        for _ in range(10):
            a = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
            h = a + a.conj().T
            val, vec = hermitian_top_eigenpair(h)
            want_val, want_vec = jacobi_top_eigenpair(h)
            assert val == pytest.approx(want_val, abs=1e-10 * max(1.0, abs(want_val)))
            assert abs(np.vdot(vec, want_vec)) == pytest.approx(1.0, abs=1e-8)
            assert np.linalg.norm(h @ vec - val * vec) <= 1e-10 * max(np.abs(h).max(), 1.0)

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValueError, match="Hermitian"):
            hermitian_top_eigenpair(np.array([[0.0, 1.0], [0.0, 0.0]]))


class TestNullspaceBasis:
    def test_single_row(self):
        basis = nullspace_basis(np.array([[1.0, 0.0, 0.0]], dtype=complex))
        assert basis.shape == (3, 2)
        assert np.linalg.norm(basis[0, :]) <= 1e-12

    def test_identity_rows(self):
        a = np.eye(4)[:2].astype(complex)
        basis = nullspace_basis(a)
        assert basis.shape == (4, 2)
        assert np.linalg.norm(a @ basis) <= 1e-10
        assert np.allclose(basis.conj().T @ basis, np.eye(2), atol=1e-12)

    def test_random_wide(self):
        rng = np.random.default_rng(31)
        a = rng.standard_normal((3, 6)) + 1j * rng.standard_normal((3, 6))
        basis = nullspace_basis(a)
        assert basis.shape == (6, 3)
        assert np.linalg.norm(a @ basis) <= 1e-10 * np.linalg.norm(a)
        assert np.allclose(basis.conj().T @ basis, np.eye(3), atol=1e-12)

    def test_rank_deficient(self):
        a = np.vstack([np.ones(4), np.ones(4)]).astype(complex)
        with pytest.raises(RankError) as exc:
            nullspace_basis(a)
        assert exc.value.detected_rank == 1

    def test_square_rejected(self):
        with pytest.raises(ValueError, match="fewer rows"):
            nullspace_basis(np.eye(3, dtype=complex))
