"""Downlink energy-beamforming optimizers.

Three layers:

* ``weighted_sum_energy_beam`` -- closed-form single beam maximizing a
  weighted sum of harvested powers (top eigenpair of the weighted channel
  covariance).
* ``maxmin_energy_covariance`` -- maximize t s.t. Tr(G_k S) >= c_k t,
  Tr(S) <= budget, S PSD.  Solved through its dual, an eigenvalue
  minimization over the simplex: min_lambda budget * lmax(sum_k lambda_k
  G_k / c_k).  Entropic mirror descent makes the first pass; a smoothed
  (log-sum-exp over eigenvalues) minimization polishes the weights, and the
  Gibbs density of the final matrix provides a primal candidate whose
  certified primal-dual gap must close below tolerance.
* ``solve_dl_fixed_w`` -- for fixed uplink receivers, minimize the worst
  balance-matrix spectral radius over the covariance by bisecting on the
  target and checking feasibility with ``maxmin_energy_covariance``.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import lsq_linear, minimize

from .balancing import (
    balancing_budgets,
    build_balance_matrix,
    coupling_and_noise,
)
from .errors import ConvergenceError, InfeasibleError
from .perron import hermitian_top_eigenpair, spectral_radius

_MIRROR_ITERS = 80           # mirror-descent burst before the smoothed polish
_WEIGHT_FLOOR = 1e-14        # keeps simplex weights recoverable
_PSI_FLOOR = 1e-300


@dataclass(frozen=True)
class DownlinkSolution:
    """Energy covariance with its objective value and dual certificate."""

    S: np.ndarray
    value: float
    dual_weights: np.ndarray
    gap: float
    perturbation: float = 0.0


def weighted_sum_energy_beam(weights, ch, prm):
    """Single energy beam maximizing sum_k alpha_k * eff * |g_k^H v|^2.

    The optimum of the weighted sum-energy problem uses one beam along the
    top eigenvector of sum_k alpha_k * eff * g_k g_k^H, scaled to the full
    power budget.
    """
    alpha = np.asarray(weights, dtype=float)
    if alpha.shape != (ch.num_users,):
        raise ValueError(f"need one weight per user, got shape {alpha.shape}")
    if np.any(alpha < 0) or not np.any(alpha > 0):
        raise ValueError("weights must be non-negative with at least one positive entry")
    weighted = prm.harvest_efficiency * (ch.G * alpha) @ ch.G.conj().T
    psi, eta = hermitian_top_eigenpair(weighted)
    s = prm.power_budget * np.outer(eta, eta.conj())
    lam = alpha / alpha.sum()
    return DownlinkSolution(S=s, value=psi * prm.power_budget, dual_weights=lam, gap=0.0)


class _SimplexDual:
    """Dual state for the max-min energy problem with scaled channels b_k.

    Works in the K x K Gram representation: with B = [b_1 .. b_K] and
    R = B^H B, the nonzero spectrum of sum_k lambda_k b_k b_k^H equals that
    of diag(sqrt(lambda)) R diag(sqrt(lambda)).
    """

    def __init__(self, scaled_channels):
        self.b = scaled_channels                      # M x K
        self.gram = self.b.conj().T @ self.b          # K x K
        self.k = self.b.shape[1]

    def eig(self, lam):
        w = np.sqrt(np.maximum(lam, 0.0))
        small = (w[:, None] * self.gram) * w[None, :]
        psi, z = np.linalg.eigh(0.5 * (small + small.conj().T))
        return psi, z, w

    def projections(self, psi, z, w):
        """|b_k^H u_i|^2 for eigenpairs with psi_i > 0 (columns i)."""
        keep = psi > _PSI_FLOOR
        num = self.gram @ (w[:, None] * z[:, keep])
        return psi[keep], np.abs(num) ** 2 / psi[keep], z[:, keep], keep

    def gibbs(self, lam, beta):
        """Gibbs-smoothed value, per-user averages, and mixture coefficients.

        Returns (smoothed max eigenvalue, per-user Tr(b_k b_k^H P), psi,
        mixture weights, kept eigvecs, sqrt-lambda) for the density
        P ~ exp(beta * M(lambda)) at a fixed absolute temperature ``beta``.
        """
        psi_all, z, w = self.eig(lam)
        psi, proj2, z_keep, _ = self.projections(psi_all, z, w)
        psi_max = psi_all[-1]
        logits = beta * (psi - psi_max)
        mix = np.exp(logits)
        mix_sum = mix.sum()
        mix /= mix_sum
        smoothed = psi_max + np.log(mix_sum) / beta
        per_user = proj2 @ mix
        return smoothed, per_user, psi, mix, z_keep, w

    def top(self, lam):
        """Largest eigenvalue and the per-user gains |b_k^H u|^2 at its eigenvector."""
        psi_all, z, w = self.eig(lam)
        psi, proj2, _, _ = self.projections(psi_all, z, w)
        return psi_all[-1], proj2[:, -1] if proj2.size else np.zeros(self.k)

    def primal_matrix(self, mix, psi, z_keep, w, budget):
        """Assemble S = budget * sum_i mix_i u_i u_i^H in the antenna domain."""
        core = (z_keep * (mix / psi)) @ z_keep.conj().T
        s = self.b @ ((w[:, None] * core) * w[None, :]) @ self.b.conj().T
        s = 0.5 * (s + s.conj().T)
        tr = float(np.real(np.trace(s)))
        if tr > 0:
            s *= 1.0 / tr
        return budget * s


def _mirror_descent(dual, lam, budget, tol, iters):
    """Entropic mirror descent on the dual, step 0.5/sqrt(t), normalized subgradient."""
    best_dual = np.inf
    best_lam = lam.copy()
    for t in range(1, iters + 1):
        psi_max, gains = dual.top(lam)
        d_val = budget * psi_max
        if d_val < best_dual:
            best_dual = d_val
            best_lam = lam.copy()
        # Rank-1 primal candidate closes the gap in the non-degenerate case.
        p_val = budget * float(gains.min())
        if best_dual - p_val <= tol * max(best_dual, _PSI_FLOOR):
            break
        sub = budget * gains
        scale = np.abs(sub).max()
        step = 0.5 / np.sqrt(t) * (sub / scale if scale > 0 else sub)
        lam = lam * np.exp(-step)
        lam = np.maximum(lam, _WEIGHT_FLOOR)
        lam /= lam.sum()
    return best_lam, best_dual


def _smoothed_polish(dual, lam, budget, tol, beta_schedule=(30.0, 3e3, 3e5, 3e7, 1e10)):
    """Minimize the log-sum-exp smoothing of the dual over softmax weights.

    Successively sharper smoothings are minimized with L-BFGS in the softmax
    parametrization (each round at a fixed absolute temperature, so the
    gradient stays exact); the Gibbs density at the final smoothing level
    supplies the primal candidate.
    """
    z0 = np.log(np.maximum(lam, _WEIGHT_FLOOR))

    def objective(zvar, beta):
        zs = zvar - zvar.max()
        lam_c = np.exp(zs)
        lam_c /= lam_c.sum()
        smoothed, per_user, _, _, _, _ = dual.gibbs(lam_c, beta)
        grad_z = lam_c * (per_user - float(lam_c @ per_user))
        return smoothed, grad_z

    beta_abs = None
    for rel_beta in beta_schedule:
        lam_round = np.exp(z0 - z0.max())
        lam_round /= lam_round.sum()
        psi_ref = float(dual.eig(lam_round)[0][-1])
        beta_abs = rel_beta / max(psi_ref, _PSI_FLOOR)
        res = minimize(
            objective,
            z0,
            args=(beta_abs,),
            jac=True,
            method="L-BFGS-B",
            options={"maxiter": 500, "ftol": 1e-18, "gtol": 1e-16, "maxls": 60},
        )
        z0 = res.x
        # Early exit once the Gibbs primal already certifies the gap.
        lam_c = np.exp(z0 - z0.max())
        lam_c /= lam_c.sum()
        psi_max = float(dual.eig(lam_c)[0][-1])
        _, per_user, _, _, _, _ = dual.gibbs(lam_c, beta_abs)
        if psi_max - float(per_user.min()) <= 0.3 * tol * max(psi_max, _PSI_FLOOR):
            break
    lam = np.exp(z0 - z0.max())
    lam /= lam.sum()
    dual_val = budget * float(dual.eig(lam)[0][-1])
    return lam, dual_val, beta_abs


def _primal_candidates(dual, lam, beta_abs, budget, cluster_rel=1e-6):
    """Primal covariance candidates supported on the dominant eigenspace.

    Yields the Gibbs density at the final smoothing level, the top rank-1
    projector, and -- when the top eigenvalue is (nearly) degenerate -- an
    equalized mixture over the eigen-cluster obtained from a tiny
    non-negative least-squares solve.  Every candidate is re-evaluated
    honestly by the caller, so these are heuristics only for tightness.
    """
    psi_all, z, w = dual.eig(lam)
    psi, proj2, z_keep, _ = dual.projections(psi_all, z, w)
    if psi.size == 0:
        return []
    logits = beta_abs * (psi - psi_all[-1])
    mix_gibbs = np.exp(logits)
    mix_gibbs /= mix_gibbs.sum()

    candidates = [mix_gibbs]
    top_only = np.zeros_like(psi)
    top_only[-1] = 1.0
    candidates.append(top_only)

    cluster = psi >= psi_all[-1] * (1.0 - cluster_rel)
    active = lam > 1e-8 * lam.max()
    m = int(cluster.sum())
    if m >= 1 and active.any():
        # Equalize per-user gains over the cluster: sum_i q_i proj2[k, i] = t
        # for active k, sum_i q_i = 1, q >= 0.
        rows = proj2[np.ix_(active, cluster)]
        a_mat = np.hstack([rows, -np.ones((rows.shape[0], 1))])
        a_mat = np.vstack([a_mat, np.append(np.ones(m), 0.0)])
        b = np.zeros(a_mat.shape[0])
        b[-1] = 1.0
        scale = max(rows.max(), 1e-300)
        weights = np.ones(a_mat.shape[0])
        weights[:-1] = 1.0 / scale
        try:
            res = lsq_linear(
                a_mat * weights[:, None],
                b * weights,
                bounds=(
                    np.append(np.zeros(m), -np.inf),
                    np.full(m + 1, np.inf),
                ),
            )
            q = np.maximum(res.x[:m], 0.0)
            if q.sum() > 0:
                q /= q.sum()
                mix_eq = np.zeros_like(psi)
                mix_eq[cluster] = q
                candidates.append(mix_eq)
        except (ValueError, np.linalg.LinAlgError):
            pass

    return [
        dual.primal_matrix(mix, psi, z_keep, w, budget)
        for mix in candidates
        if mix.sum() > 0
    ]


def maxmin_energy_covariance(
    costs, budget, ch, prm, tol=1e-6, max_iter=5000, start_weights=None
):
    """Maximize min_k Tr(G_k S) / c_k over PSD S with Tr(S) <= budget.

    Solves the simplex dual min_lambda budget * lmax(sum_k lambda_k G_k/c_k)
    by mirror descent plus a smoothed polish, recovers the primal covariance
    from the dominant eigenspace (Gibbs density), and certifies the result
    with the primal-dual gap.  Degenerate instances that resist the polish
    are retried once with a deterministic multiplicative cost perturbation.
    Raises ConvergenceError if the relative gap never closes below ``tol``.
    """
    c = np.asarray(costs, dtype=float)
    if c.shape != (ch.num_users,) or np.any(c <= 0):
        raise ValueError("costs must be strictly positive, one per user")
    if budget <= 0:
        raise ValueError("budget must be positive")
    col_norms = np.linalg.norm(ch.G, axis=0)
    if np.any(col_norms == 0):
        raise ValueError("some user has a zero downlink channel")

    def attempt(cost_vec, lam0):
        dual = _SimplexDual(ch.G / np.sqrt(cost_vec))
        lam, _ = _mirror_descent(dual, lam0, budget, tol, min(_MIRROR_ITERS, max_iter))
        lam, dual_val, beta_abs = _smoothed_polish(dual, lam, budget, tol)
        # Evaluate every primal candidate from the assembled covariance itself
        # and keep the best; this keeps the reported value honest.
        best_s, best_value = None, -np.inf
        for s in _primal_candidates(dual, lam, beta_abs, budget):
            harvested = np.real(np.einsum("mk,mn,nk->k", ch.G.conj(), s, ch.G))
            value = float((harvested / cost_vec).min())
            if value > best_value:
                best_s, best_value = s, value
        gap = dual_val - best_value
        return lam, best_s, best_value, gap, dual_val

    if start_weights is None:
        lam0 = np.full(ch.num_users, 1.0 / ch.num_users)
    else:
        lam0 = np.maximum(np.asarray(start_weights, dtype=float), _WEIGHT_FLOOR)
        lam0 /= lam0.sum()

    lam, s, value, gap, dual_val = attempt(c, lam0)
    perturbation = 0.0
    if gap > tol * max(dual_val, _PSI_FLOOR):
        # Degenerate dominant eigenspace: retry with a tiny deterministic
        # multiplicative perturbation of the costs.
        rng = np.random.default_rng(12345)
        xi = rng.uniform(0.0, 1e-9, size=ch.num_users)
        lam, s, value, gap, dual_val = attempt(c * (1.0 + xi), lam0)
        perturbation = float(xi.max())
        if gap > tol * max(dual_val, _PSI_FLOOR):
            raise ConvergenceError(
                f"max-min energy solve left a relative gap of {gap / max(dual_val, _PSI_FLOOR):.3e}",
                best=DownlinkSolution(S=s, value=value, dual_weights=lam, gap=gap),
                gap=gap,
            )
    return DownlinkSolution(
        S=s, value=value, dual_weights=lam, gap=gap, perturbation=perturbation
    )


def _fixed_point_powers(theta, coupling, noise):
    """Equal-SINR powers at target theta from precomputed coupling terms."""
    n = coupling.shape[0]
    return np.linalg.solve(theta * np.eye(n) - coupling, noise)


def solve_dl_fixed_w(W, tau, ch, prm, tol=1e-6, convention="power", inner_tol=1e-8):
    """Best energy covariance for fixed receivers: minimize max_k rho(A_k).

    Bisects on the balancing target theta.  A target is feasible iff some
    admissible covariance covers the equal-SINR powers p(theta), i.e. the
    max-min energy problem with costs derived from p(theta) reaches t >= 1.
    The upper bracket comes from the near-far weighted sum-energy beam; the
    lower bracket is the coupling matrix's spectral radius, below which no
    power vector exists.
    """
    if not 0.0 < tau < 1.0:
        raise ValueError("tau must lie strictly between 0 and 1")
    coupling, noise = coupling_and_noise(W, ch, prm, tau, convention)
    rho_x = spectral_radius(coupling)

    e_c = prm.circuit_energy_vector(ch.num_users)
    harvest_scale = prm.harvest_efficiency * tau
    energy_per_power = (1.0 - tau) if convention == "power" else 1.0

    def costs_for(theta):
        p = _fixed_point_powers(theta, coupling, noise)
        return (p * energy_per_power + e_c) / harvest_scale

    # Upper bracket from a feasible covariance: weighted sum-energy beam with
    # near-far weights, falling back to isotropic if any budget degenerates.
    g_norms = np.linalg.norm(ch.G, axis=0)
    h_norms = np.linalg.norm(ch.H, axis=0)
    if np.any(g_norms == 0) or np.any(h_norms == 0):
        raise InfeasibleError("a user with a zero channel cannot be served")
    s_init = weighted_sum_energy_beam(1.0 / (h_norms**2 * g_norms**2), ch, prm).S
    budgets = balancing_budgets(s_init, ch, prm, tau, convention)
    if np.any(budgets <= 0):
        s_init = (prm.power_budget / ch.num_antennas) * np.eye(ch.num_antennas, dtype=complex)
        budgets = balancing_budgets(s_init, ch, prm, tau, convention)
        if np.any(budgets <= 0):
            raise InfeasibleError("no covariance yields positive budgets for every user")
    hi = max(
        spectral_radius(build_balance_matrix(k, W, budgets, ch, prm, tau, convention))
        for k in range(ch.num_users)
    )

    lam_warm = None
    best = {"theta": None, "sol": None}

    def probe(theta):
        nonlocal lam_warm
        cost_vec = costs_for(theta)
        feas_sol = best["sol"]
        if feas_sol is not None:
            harvested = np.real(
                np.einsum("mk,mn,nk->k", ch.G.conj(), feas_sol.S, ch.G)
            )
            if np.all(harvested >= cost_vec):  # previous covariance still covers
                return True, feas_sol
        sol = maxmin_energy_covariance(
            cost_vec, prm.power_budget, ch, prm, tol=inner_tol, start_weights=lam_warm
        )
        lam_warm = sol.dual_weights
        return sol.value >= 1.0 - 1e-9, sol

    feasible, sol_hi = probe(hi)
    doublings = 0
    while not feasible:
        doublings += 1
        if doublings > 60:
            raise InfeasibleError("failed to bracket a feasible balancing target")
        hi *= 2.0
        feasible, sol_hi = probe(hi)
    best["theta"], best["sol"] = hi, sol_hi

    lo = rho_x * (1.0 + 1e-12) + 1e-300
    while hi - lo > tol * hi:
        mid = 0.5 * (lo + hi)
        ok, sol_mid = probe(mid)
        if ok:
            hi = mid
            best["theta"], best["sol"] = mid, sol_mid
        else:
            lo = mid

    sol = best["sol"]
    budgets = balancing_budgets(sol.S, ch, prm, tau, convention)
    achieved = max(
        spectral_radius(build_balance_matrix(k, W, budgets, ch, prm, tau, convention))
        for k in range(ch.num_users)
    )
    if achieved > best["theta"] * (1.0 + tol):
        raise ConvergenceError(
            f"bisection result violates its own target: {achieved:.6e} > {best['theta']:.6e}"
        )
    return DownlinkSolution(
        S=sol.S,
        value=float(achieved),
        dual_weights=sol.dual_weights,
        gap=sol.gap,
        perturbation=sol.perturbation,
    )
