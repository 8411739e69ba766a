"""Dense Perron-Frobenius utilities and small complex linear-algebra contracts.

Everything here operates on plain numpy arrays.  Real non-negative matrices
get spectral-radius / dominant-eigenvector routines built on power iteration
with a certified Collatz-Wielandt bracket; complex Hermitian matrices get a
top-eigenpair helper; general complex matrices get an orthonormal null-space
basis via SVD.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, RankError

# Window over which the Collatz-Wielandt bracket must keep shrinking before
# power iteration is declared stalled (periodic / reducible input).
_STALL_WINDOW = 200


@dataclass(frozen=True)
class EigenPair:
    """Dominant eigenvalue and eigenvector, vector scaled so its last entry is 1."""

    value: float
    vector: np.ndarray


def _as_nonneg_matrix(m):
    a = np.asarray(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    if np.any(a < 0):
        raise ValueError("matrix has negative entries")
    return a


def _char_poly_coeffs(a):
    """Characteristic polynomial coefficients via the Faddeev-LeVerrier recursion."""
    n = a.shape[0]
    coeffs = np.zeros(n + 1)
    coeffs[0] = 1.0
    m = np.zeros_like(a)
    for k in range(1, n + 1):
        m = a @ m + coeffs[k - 1] * np.eye(n)
        coeffs[k] = -np.trace(a @ m) / k
    return coeffs


def _dense_dominant(a):
    """Dominant eigenpair from a full eigendecomposition (fallback path)."""
    try:
        vals, vecs = np.linalg.eig(a)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"dense eigendecomposition failed: {exc}") from exc
    idx = int(np.argmax(np.abs(vals)))
    rho = float(np.abs(vals[idx]))
    v = vecs[:, idx]
    # Perron vector of a non-negative matrix can be chosen real non-negative:
    # strip the arbitrary complex phase, then fix the sign.
    pivot = v[int(np.argmax(np.abs(v)))]
    if abs(pivot) > 0:
        v = v * (np.conj(pivot) / abs(pivot))
    v = np.real(v)
    if v.sum() < 0:
        v = -v
    return rho, v


def spectral_radius(m, tol=1e-8, max_iter=10000):
    """Spectral radius of a non-negative square matrix.

    Power iteration from the all-ones vector, certified by the
    Collatz-Wielandt bracket: for positive x,
    min_j (Mx)_j/x_j <= rho(M) <= max_j (Mx)_j/x_j.
    Converged when the bracket width drops below ``tol`` relative.
    Reducible or periodic matrices stall the bracket; those fall back to the
    characteristic polynomial (n <= 4) or a dense eigendecomposition.
    """
    a = _as_nonneg_matrix(m)
    if tol <= 0:
        raise ValueError("tol must be positive")
    n = a.shape[0]
    if n == 1:
        return float(a[0, 0])

    x = np.ones(n)
    best_gap = np.inf
    stall = 0
    for _ in range(max_iter):
        y = a @ x
        s = y.sum()
        if s == 0.0:  # ones is in the null space; matrix is nilpotent-like
            break
        mask = x > 1e-300
        if np.all(mask):
            ratios = y[mask] / x[mask]
            lo, hi = ratios.min(), ratios.max()
            gap = hi - lo
            if gap <= tol * max(hi, 1e-300):
                return float(0.5 * (lo + hi))
            if gap < best_gap * 0.9999:
                best_gap = gap
                stall = 0
            else:
                stall += 1
                if stall >= _STALL_WINDOW:
                    break
        x = y / s

    # Fallback: certified bracket never closed (reducible/periodic input).
    if n <= 4:
        roots = np.roots(_char_poly_coeffs(a))
        return float(np.max(np.abs(roots)))
    rho, _ = _dense_dominant(a)
    return rho


def dominant_eigenvector(m, tol=1e-10, max_iter=10000, start=None):
    """Dominant eigenpair of a non-negative matrix, last component scaled to 1.

    Runs power iteration until the relative residual ||Mv - rho v|| <=
    tol * rho * ||v||, falling back to a dense eigendecomposition when the
    iteration stalls.  Raises ValueError when the eigenvector's last
    component vanishes (no extended-power-vector normalization exists).
    """
    a = _as_nonneg_matrix(m)
    if tol <= 0:
        raise ValueError("tol must be positive")
    n = a.shape[0]

    if start is None:
        x = np.ones(n)
    else:
        x = np.asarray(start, dtype=float).copy()
        if x.shape != (n,) or np.any(x <= 0):
            raise ValueError("start vector must be strictly positive of matching size")
        x /= np.linalg.norm(x)

    rho = 0.0
    converged = False
    prev_res = np.inf
    stall = 0
    for _ in range(max_iter):
        y = a @ x
        norm_y = np.linalg.norm(y)
        if norm_y == 0.0:
            break
        rho = float(x @ y)  # Rayleigh quotient; exact at the fixed point
        res = np.linalg.norm(y - rho * x)
        if res <= tol * max(rho, 1e-300):
            converged = True
            break
        if res < prev_res * 0.99999:
            prev_res = res
            stall = 0
        else:
            stall += 1
            if stall >= _STALL_WINDOW:
                break
        x = y / norm_y

    # A tiny last component may be a true zero only partially resolved by the
    # iteration; the dense eigenvector settles it.
    if not converged or abs(x[-1]) < 1e-8 * np.max(np.abs(x)):
        rho, x = _dense_dominant(a)
        x = x / np.linalg.norm(x)
        res = np.linalg.norm(a @ x - rho * x)
        if res > max(tol, 1e-9) * max(rho, 1e-300):
            raise ConvergenceError(
                f"dominant eigenpair residual {res:.3e} above tolerance", best=(rho, x)
            )

    if abs(x[-1]) < 1e-14:
        raise ValueError("degenerate eigenvector: last component vanishes before rescale")
    v = x / x[-1]
    return EigenPair(value=rho, vector=v)


def collatz_wielandt_check(m, rho, v, rel_tol=1e-6):
    """Certify ``rho`` as the spectral radius of ``m`` via the eigenvector ``v``.

    True iff v > 0, the component ratios (Mv)_j / v_j bracket rho, and the
    bracket is tight to ``rel_tol`` relative -- i.e. v is (numerically) the
    Perron eigenvector and rho its eigenvalue.
    """
    a = _as_nonneg_matrix(m)
    v = np.asarray(v, dtype=float)
    if v.shape != (a.shape[0],) or np.any(v <= 0):
        return False
    ratios = (a @ v) / v
    lo, hi = float(ratios.min()), float(ratios.max())
    scale = max(abs(rho), hi, 1e-300)
    slack = rel_tol * scale
    return (lo - rho <= slack) and (rho - hi <= slack) and (hi - lo <= slack)


def hermitian_top_eigenpair(h, herm_tol=1e-12):
    """Largest eigenvalue and unit-norm eigenvector of a Hermitian matrix."""
    a = np.asarray(h, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    asym = np.max(np.abs(a - a.conj().T))
    if asym > herm_tol:
        raise ValueError(f"matrix is not Hermitian: max asymmetry {asym:.3e}")
    vals, vecs = np.linalg.eigh(a)
    return float(vals[-1]), vecs[:, -1]


def nullspace_basis(a, rcond=1e-10):
    """Orthonormal basis of the null space of a full-row-rank r x M matrix.

    Returns an M x (M - r) matrix whose columns satisfy a @ basis = 0 and
    basis^H basis = I.  Raises RankError when the detected numerical rank
    (singular values above ``rcond`` times the largest) is below r.
    """
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2:
        raise ValueError(f"expected a 2-d array, got shape {a.shape}")
    r, m = a.shape
    if r >= m:
        raise ValueError(f"need fewer rows than columns, got {r} x {m}")
    if r == 0:
        return np.eye(m, dtype=complex)
    _, s, vh = np.linalg.svd(a, full_matrices=True)
    detected = int(np.sum(s > rcond * s[0]))
    if detected < r:
        raise RankError(
            f"matrix is rank-deficient: detected rank {detected} < {r}",
            detected_rank=detected,
        )
    return vh[r:, :].conj().T
