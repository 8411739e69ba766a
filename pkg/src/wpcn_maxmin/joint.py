"""End-to-end max-min throughput optimization.

For a fixed time split the downlink covariance and uplink receivers/powers
are optimized by exact alternation (each half step solves its subproblem to
optimality, so the worst spectral radius is non-increasing and the iteration
reaches the global optimum of the fixed-tau problem).  The time split itself
is found by a one-dimensional search: a coarse grid over (0, 1) followed by
golden-section refinement inside the best bracket.

A single-antenna system cannot beamform, so ``solve_optimal`` falls back to
a TDMA reference schedule there (flagged in the result); it is a simplified
baseline, not part of the optimality claims.
"""

import math
from dataclasses import dataclass

import numpy as np

from .balancing import solve_ul_fixed_v
from .beamforming import solve_dl_fixed_w, weighted_sum_energy_beam
from .errors import ConvergenceError, InfeasibleError
from .system import achievable_rate

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class AlternatingResult:
    """Converged fixed-tau solution with its per-iteration spectral radii."""

    uplink: object
    downlink: object
    rho_trace: tuple


@dataclass(frozen=True)
class JointSolution:
    """Full answer: time split, covariance, receivers, powers, max-min rate.

    Powers are always reported in the transmit-power domain (watts),
    regardless of the convention used internally.  ``tau_profile`` carries
    the (tau, rate) pairs evaluated during the one-dimensional search; failed
    grid points appear with a NaN rate.
    """

    tau: float
    S: np.ndarray
    W: np.ndarray
    p: np.ndarray
    rate: float
    gamma: float
    k_star: int
    rho_trace: tuple = ()
    tau_profile: tuple = ()
    iterations: int = 0
    method: str = "optimal"
    convention: str = "power"


def default_init_weights(ch):
    """Near-far energy weights 1 / (||h_k||^2 ||g_k||^2)."""
    g_norms = np.linalg.norm(ch.G, axis=0)
    h_norms = np.linalg.norm(ch.H, axis=0)
    if np.any(g_norms == 0) or np.any(h_norms == 0):
        raise ValueError("every user needs a nonzero channel")
    return 1.0 / (h_norms**2 * g_norms**2)


def alternating_optimize(
    tau, ch, prm, eps=1e-6, max_iter=30,
    convention="power", init_weights=None, dl_tol=1e-8, ul_tol=1e-9,
):
    """Alternating downlink/uplink optimization at a fixed time split.

    Starts from the weighted sum-energy beam (near-far weights unless
    ``init_weights`` is given), then repeats: optimal covariance for the
    current receivers, optimal receivers/powers for the new covariance.
    Stops when the worst spectral radius improves by less than ``eps``
    (absolute); both half steps are exact, so the trace never increases.
    """
    if not 0.0 < tau < 1.0:
        raise ValueError("tau must lie strictly between 0 and 1")
    if eps <= 0:
        raise ValueError("eps must be positive")
    alpha = default_init_weights(ch) if init_weights is None else np.asarray(init_weights, float)
    dl = weighted_sum_energy_beam(alpha, ch, prm)
    ul = solve_ul_fixed_v(dl.S, tau, ch, prm, tol=ul_tol, convention=convention)
    trace = [ul.rho]
    converged = False
    for _ in range(max_iter):
        dl_next = solve_dl_fixed_w(ul.W, tau, ch, prm, tol=dl_tol, convention=convention)
        ul_next = solve_ul_fixed_v(dl_next.S, tau, ch, prm, tol=ul_tol, convention=convention)
        if ul_next.rho > ul.rho:
            converged = True  # numerical floor: keep the better iterate
            break
        trace.append(ul_next.rho)
        delta = ul.rho - ul_next.rho
        ul, dl = ul_next, dl_next
        if delta < eps:
            converged = True
            break
    result = AlternatingResult(uplink=ul, downlink=dl, rho_trace=tuple(trace))
    if not converged:
        raise ConvergenceError(
            f"alternating optimization did not converge in {max_iter} iterations",
            best=result,
        )
    return result


def _joint_from(tau, alt, convention, tau_profile=()):
    ul = alt.uplink
    p = np.asarray(ul.p, dtype=float)
    if convention == "energy":
        p = p / (1.0 - tau)  # energies back to transmit powers
    rate = float(achievable_rate(np.array([ul.gamma]), tau)[0])
    return JointSolution(
        tau=float(tau),
        S=alt.downlink.S,
        W=ul.W,
        p=p,
        rate=rate,
        gamma=float(ul.gamma),
        k_star=int(ul.k_star),
        rho_trace=alt.rho_trace,
        tau_profile=tuple(tau_profile),
        iterations=len(alt.rho_trace) - 1,
        method="optimal",
        convention=convention,
    )


def optimal_at_tau(tau, ch, prm, eps=1e-6, convention="power", **kwargs):
    """Fixed-tau optimal solution packaged as a JointSolution."""
    alt = alternating_optimize(tau, ch, prm, eps=eps, convention=convention, **kwargs)
    return _joint_from(tau, alt, convention)


def tau_sweep_optimize(
    ch, prm, grid_step=0.01, refine=True, eps=1e-6,
    convention="power", refine_iters=40, max_iter=30,
):
    """One-dimensional search over the time split.

    Evaluates the fixed-tau optimum on the grid {step, 2 step, ...}, then
    (optionally) golden-section refines inside the bracket around the best
    grid point.  Solver failures at individual grid points are recorded in
    the profile as NaN rates and skipped.
    """
    if not 0.0 < grid_step < 0.5:
        raise ValueError("grid_step must lie in (0, 0.5)")
    taus = np.round(np.arange(grid_step, 1.0, grid_step), 12)
    taus = taus[taus < 1.0]

    cache = {}

    def evaluate(tau):
        tau = float(tau)
        if tau not in cache:
            try:
                alt = alternating_optimize(
                    tau, ch, prm, eps=eps, convention=convention, max_iter=max_iter
                )
                rate = float(achievable_rate(np.array([alt.uplink.gamma]), tau)[0])
                cache[tau] = (rate, alt)
            except (ConvergenceError, InfeasibleError, ValueError):
                cache[tau] = (float("nan"), None)
        return cache[tau]

    profile = [(float(t), evaluate(t)[0]) for t in taus]
    valid = [(t, r) for t, r in profile if np.isfinite(r)]
    if not valid:
        raise InfeasibleError("every grid point failed during the tau sweep")

    best_tau = max(valid, key=lambda tr: tr[1])[0]

    if refine:
        idx = list(taus).index(best_tau)
        lo = float(taus[idx - 1]) if idx > 0 else max(best_tau - grid_step, grid_step * 1e-3)
        hi = float(taus[idx + 1]) if idx + 1 < len(taus) else min(best_tau + grid_step, 1.0 - 1e-9)

        def rate_at(tau):
            r = evaluate(tau)[0]
            return r if np.isfinite(r) else -np.inf

        a, b = lo, hi
        c = b - _GOLDEN * (b - a)
        d = a + _GOLDEN * (b - a)
        fc, fd = rate_at(c), rate_at(d)
        for _ in range(refine_iters):
            if fc >= fd:
                b, d, fd = d, c, fc
                c = b - _GOLDEN * (b - a)
                fc = rate_at(c)
            else:
                a, c, fc = c, d, fd
                d = a + _GOLDEN * (b - a)
                fd = rate_at(d)
        candidates = [t for t in cache if np.isfinite(cache[t][0])]
        best_tau = max(candidates, key=lambda t: cache[t][0])

    rate, alt = cache[best_tau]
    return _joint_from(best_tau, alt, convention, tau_profile=profile)


def tdma_reference(ch, prm, tau0_grid=0.01, refine_iters=60):
    """Single-antenna TDMA baseline: one downlink slot, then one uplink slot
    per user, all slot lengths jointly optimized for the common rate.

    For a downlink fraction tau0 each user banks energy proportional to its
    downlink gain; the largest common rate follows from bisection on the
    rate, with each user's required slot length found by an inner bisection.
    This is a simplified reference schedule, flagged via method="tdma".
    """
    if ch.num_antennas != 1:
        raise ValueError("the TDMA reference applies to single-antenna systems")
    gains_dl = np.abs(ch.G[0, :]) ** 2
    gains_ul = np.abs(ch.H[0, :]) ** 2
    if np.any(gains_dl <= 0) or np.any(gains_ul <= 0):
        raise ValueError("every user needs a nonzero channel")

    def slot_for_rate(rate, a_k, limit):
        # smallest t with t*log2(1 + a_k/t) = rate; increasing in t
        lo, hi = 0.0, limit
        for _ in range(100):
            mid = 0.5 * (lo + hi)
            if mid > 0 and mid * math.log2(1.0 + a_k / mid) >= rate:
                hi = mid
            else:
                lo = mid
        return hi

    def common_rate(tau0):
        if not 0.0 < tau0 < 1.0:
            return -np.inf, None
        ul_time = 1.0 - tau0
        a = (
            prm.harvest_efficiency * tau0 * prm.power_budget * gains_dl * gains_ul
            / prm.noise_power
        )
        hi = min(ul_time * math.log2(1.0 + ak / ul_time) for ak in a)
        lo = 0.0
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            slots = [slot_for_rate(mid, ak, ul_time) for ak in a]
            if sum(slots) <= ul_time:
                lo = mid
            else:
                hi = mid
        slots = np.array([slot_for_rate(lo, ak, ul_time) for ak in a])
        return lo, (a, slots)

    # coarse grid + golden refinement over the downlink fraction
    grid = np.arange(tau0_grid, 1.0, tau0_grid)
    rates = [common_rate(t)[0] for t in grid]
    i = int(np.argmax(rates))
    a_br = grid[i - 1] if i > 0 else tau0_grid * 1e-3
    b_br = grid[i + 1] if i + 1 < len(grid) else 1.0 - 1e-9
    a, b = float(a_br), float(b_br)
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = common_rate(c)[0], common_rate(d)[0]
    for _ in range(refine_iters):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = common_rate(c)[0]
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = common_rate(d)[0]
    tau0 = 0.5 * (a + b)
    rate, (a_vec, slots) = common_rate(tau0)

    energies = prm.harvest_efficiency * tau0 * prm.power_budget * gains_dl
    powers = np.where(slots > 0, energies / np.maximum(slots, 1e-300), 0.0)
    slot_sinr = powers * gains_ul / prm.noise_power
    return JointSolution(
        tau=float(tau0),
        S=np.array([[prm.power_budget]], dtype=complex),
        W=np.ones((1, ch.num_users), dtype=complex),
        p=powers,
        rate=float(rate),
        gamma=float(slot_sinr.min()),
        k_star=-1,
        method="tdma",
    )


def solve_optimal(ch, prm, grid_step=0.01, refine=True, eps=1e-6, convention="power"):
    """Full pipeline: tau sweep over the alternating optimizer.

    Single-antenna systems fall back to the TDMA reference schedule.
    """
    if ch.num_antennas == 1:
        return tdma_reference(ch, prm)
    return tau_sweep_optimize(
        ch, prm, grid_step=grid_step, refine=refine, eps=eps, convention=convention
    )
