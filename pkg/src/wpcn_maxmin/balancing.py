"""Uplink max-min SINR balancing for fixed downlink energy covariance.

The balanced-SINR solution comes from non-negative matrix theory: for each
candidate binding user k, a (K+1) x (K+1) non-negative balance matrix couples
the equal-SINR power equations with that user's budget; the achievable
balanced SINR is the reciprocal of the largest spectral radius over k, and
the optimal powers are read off the dominant eigenvector.  Alternating this
exact power solve with MMSE receiver updates solves the uplink subproblem.

Two self-consistent noise/budget conventions are supported and produce the
same physical SINRs: "power" works with transmit powers and noise sigma^2,
"energy" with per-slot energies and noise (1 - tau) * sigma^2.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, InfeasibleError
from .perron import collatz_wielandt_check, spectral_radius
from .system import harvested_energy, harvested_power_budget

CONVENTIONS = ("power", "energy")


@dataclass(frozen=True)
class UplinkSolution:
    """Receiver bank, power allocation, and balanced SINR for one uplink solve."""

    W: np.ndarray
    p: np.ndarray
    gamma: float
    k_star: int
    rho: float
    trace: tuple = ()
    convention: str = "power"


def _check_convention(convention):
    if convention not in CONVENTIONS:
        raise ValueError(f"unknown convention {convention!r}, expected one of {CONVENTIONS}")


def balancing_budgets(S, ch, prm, tau, convention="power"):
    """Per-user budget in the chosen convention (transmit power or energy)."""
    _check_convention(convention)
    if convention == "power":
        return harvested_power_budget(S, ch, prm, tau)
    return harvested_energy(S, ch, prm, tau)


def noise_terms(W, prm, tau=None, convention="power"):
    """Effective noise per receiver: sigma^2 ||w_k||^2, times (1-tau) in energy mode."""
    _check_convention(convention)
    norms2 = np.sum(np.abs(np.asarray(W, dtype=complex)) ** 2, axis=0)
    scale = prm.noise_power if convention == "power" else (1.0 - tau) * prm.noise_power
    return scale * norms2


def cross_gains(W, H):
    """K x K gain matrix with entry [k, j] = |w_k^H h_j|^2."""
    w = np.asarray(W, dtype=complex)
    return np.abs(w.conj().T @ np.asarray(H, dtype=complex)) ** 2


def coupling_and_noise(W, ch, prm, tau=None, convention="power"):
    """Normalized interference coupling X and noise vector y.

    X[k, j] = |w_k^H h_j|^2 / |w_k^H h_k|^2 for j != k (zero diagonal) and
    y[k] = noise_k / |w_k^H h_k|^2, so the equal-SINR powers solve
    p / gamma = X p + y.
    """
    gains = cross_gains(W, ch.H)
    direct = np.diag(gains).copy()
    if np.any(direct <= 0):
        raise ValueError("degenerate receiver: some w_k is orthogonal to its own channel")
    coupling = gains / direct[:, None]
    np.fill_diagonal(coupling, 0.0)
    noise = noise_terms(W, prm, tau, convention) / direct
    return coupling, noise


def build_balance_matrix(k, W, budgets, ch, prm, tau=None, convention="power"):
    """Balance matrix for candidate binding user ``k``.

    Block layout, with X and y from :func:`coupling_and_noise`:

        [ X            y          ]
        [ X[k, :]/B_k  y[k]/B_k   ]

    All entries are non-negative; its spectral radius is the reciprocal of
    the balanced SINR attainable when user k's budget B_k binds.
    """
    budgets = np.asarray(budgets, dtype=float)
    if np.any(budgets <= 0):
        raise ValueError("budgets must be strictly positive")
    coupling, noise = coupling_and_noise(W, ch, prm, tau, convention)
    num_users = coupling.shape[0]
    a = np.zeros((num_users + 1, num_users + 1))
    a[:num_users, :num_users] = coupling
    a[:num_users, num_users] = noise
    a[num_users, :num_users] = coupling[k, :] / budgets[k]
    a[num_users, num_users] = noise[k] / budgets[k]
    return a


def _assemble_balance(coupling, noise, budgets, k):
    num_users = coupling.shape[0]
    a = np.zeros((num_users + 1, num_users + 1))
    a[:num_users, :num_users] = coupling
    a[:num_users, num_users] = noise
    a[num_users, :num_users] = coupling[k, :] / budgets[k]
    a[num_users, num_users] = noise[k] / budgets[k]
    return a


def balance_value_and_powers(W, S, tau, ch, prm, convention="power"):
    """Optimal balanced SINR and powers for fixed receivers and energy covariance.

    Evaluates the spectral radius of every candidate balance matrix and picks
    the binding user k* = argmax.  The eigenvalue estimate is then polished by
    Newton iteration on the binding-level equation [(rho I - X)^{-1} y]_{k*} =
    B_{k*}, which pins the equal-SINR powers to machine precision.
    """
    budgets = balancing_budgets(S, ch, prm, tau, convention)
    if np.any(budgets <= 0):
        raise ValueError("degenerate budget: some user harvests no usable energy")
    coupling, noise = coupling_and_noise(W, ch, prm, tau, convention)
    num_users = ch.num_users
    radii = np.array(
        [spectral_radius(_assemble_balance(coupling, noise, budgets, k)) for k in range(num_users)]
    )
    k_star = int(np.argmax(radii))
    rho = float(radii[k_star])
    eye = np.eye(num_users)
    rho_safe, p_safe = rho, None
    for _ in range(4):
        p = np.linalg.solve(rho * eye - coupling, noise)
        if np.any(p <= 0):  # stepped below rho(X); keep the last safe value
            rho = rho_safe
            p = p_safe if p_safe is not None else np.linalg.solve(rho * eye - coupling, noise)
            break
        rho_safe, p_safe = rho, p
        err = p[k_star] - budgets[k_star]
        if abs(err) <= 1e-14 * budgets[k_star]:
            break
        dp = np.linalg.solve(rho * eye - coupling, p)
        rho += err / dp[k_star]  # g'(rho) = -dp[k*]
    p = np.maximum(p, 0.0)
    return UplinkSolution(
        W=np.asarray(W, dtype=complex),
        p=p,
        gamma=1.0 / rho,
        k_star=k_star,
        rho=rho,
        trace=(rho,),
        convention=convention,
    )


def mmse_receivers(p, ch, prm, tau=None, convention="power"):
    """Unit-norm MMSE receiver bank for a fixed power allocation.

    w_k solves (sum_{j != k} p_j h_j h_j^H + noise I) w = h_k; among all
    linear receivers it maximizes user k's SINR at the given powers.
    """
    _check_convention(convention)
    p = np.asarray(p, dtype=float)
    if np.any(p < 0):
        raise ValueError("powers must be non-negative")
    h = ch.H
    num_antennas, num_users = h.shape
    noise = prm.noise_power if convention == "power" else (1.0 - tau) * prm.noise_power
    total = (h * p) @ h.conj().T + noise * np.eye(num_antennas)
    w = np.empty_like(h)
    for k in range(num_users):
        # Remove the own-signal term; equivalent direction, better conditioned
        # than forming each leave-one-out covariance from scratch.
        cov_k = total - p[k] * np.outer(h[:, k], h[:, k].conj())
        wk = np.linalg.solve(cov_k, h[:, k])
        w[:, k] = wk / np.linalg.norm(wk)
    return w


def power_fixed_point(theta, W, ch, prm, tau=None, convention="power", residual_tol=1e-10):
    """Equal-SINR powers at balancing target ``theta`` = 1/gamma for fixed W.

    Solves (theta I - X) p = y; requires theta above the spectral radius of
    the coupling matrix X, otherwise no positive solution exists.
    """
    coupling, noise = coupling_and_noise(W, ch, prm, tau, convention)
    rho_x = spectral_radius(coupling)
    if theta <= rho_x * (1.0 + 1e-12):
        raise InfeasibleError(
            f"target theta={theta:.6e} not above coupling spectral radius {rho_x:.6e}"
        )
    num_users = coupling.shape[0]
    p = np.linalg.solve(theta * np.eye(num_users) - coupling, noise)
    residual = np.abs(theta * p - coupling @ p - noise)
    scale = np.maximum(np.abs(theta * p), 1e-300)
    if np.any(residual > residual_tol * scale) or np.any(p <= 0):
        raise ConvergenceError("power fixed point failed its residual check", best=p)
    return p


def solve_ul_fixed_v(
    S, tau, ch, prm, tol=1e-9, max_iter=500, convention="power", initial_powers=None
):
    """Uplink subproblem for a fixed energy covariance: joint powers + receivers.

    Alternates the exact balanced-power solve with MMSE receiver updates,
    starting from MMSE receivers at full budgets (or at ``initial_powers``).
    Each half step is an exact optimizer, so the spectral-radius trace is
    non-increasing; stops when the relative improvement drops below ``tol``.
    """
    budgets = balancing_budgets(S, ch, prm, tau, convention)
    if np.any(budgets <= 0):
        raise ValueError("degenerate budget: some user harvests no usable energy")
    start = budgets if initial_powers is None else np.asarray(initial_powers, dtype=float)
    w = mmse_receivers(start, ch, prm, tau, convention)
    sol = balance_value_and_powers(w, S, tau, ch, prm, convention)
    trace = [sol.rho]
    converged = False
    for _ in range(max_iter):
        w = mmse_receivers(sol.p, ch, prm, tau, convention)
        nxt = balance_value_and_powers(w, S, tau, ch, prm, convention)
        if nxt.rho > sol.rho:
            converged = True  # numerical floor reached; keep the better iterate
            break
        trace.append(nxt.rho)
        converged = (sol.rho - nxt.rho) < tol * nxt.rho
        sol = nxt
        if converged:
            break
    out = UplinkSolution(
        W=sol.W, p=sol.p, gamma=sol.gamma, k_star=sol.k_star,
        rho=sol.rho, trace=tuple(trace), convention=convention,
    )
    if not converged:
        raise ConvergenceError(
            f"uplink alternation did not converge in {max_iter} iterations", best=out
        )
    return out


def certify_balance(sol, S, tau, ch, prm, rel_tol=1e-6):
    """Certificate checks for a balanced uplink solution.

    Returns a dict of booleans: equal per-user SINRs, binding budget at k*,
    componentwise budget feasibility, the eigen-bound lambda x >= A_k x for
    every k (equality at k*), and the Collatz-Wielandt certificate at k*.
    """
    budgets = balancing_budgets(S, ch, prm, tau, sol.convention)
    coupling, noise = coupling_and_noise(sol.W, ch, prm, tau, sol.convention)
    # Per-user SINR in the solution's own convention.
    own = np.asarray(sol.p, dtype=float)
    sinr = own / (coupling @ own + noise)
    spread = float(sinr.max() - sinr.min())
    equal_sinr = spread <= rel_tol * float(sinr.max())

    tight = abs(sol.p[sol.k_star] - budgets[sol.k_star]) <= 1e-8 * budgets[sol.k_star]
    feasible = bool(np.all(sol.p <= budgets * (1.0 + 1e-8)))

    x = np.append(sol.p, 1.0)
    lam = sol.rho
    bound_ok = True
    for k in range(ch.num_users):
        a_k = build_balance_matrix(k, sol.W, budgets, ch, prm, tau, sol.convention)
        slack = lam * x - a_k @ x
        if slack.min() < -rel_tol * lam * float(x.max()):
            bound_ok = False
        if k == sol.k_star:
            cw = collatz_wielandt_check(a_k, lam, x, rel_tol=rel_tol)
    return {
        "equal_sinr": equal_sinr,
        "binding_budget": bool(tight),
        "budget_feasible": feasible,
        "seneta_bound": bound_ok,
        "collatz_wielandt": bool(cw),
    }
