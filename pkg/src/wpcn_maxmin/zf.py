"""Zero-forcing receivers and the low-complexity design pipelines.

With receivers constrained to the null space of all other users' channels,
the uplink decouples: every user sees only its equivalent channel gain and
transmits at full harvested power.  The remaining design reduces to picking
the downlink covariance (jointly optimal via the max-min energy problem, or
a single weighted/random beam) plus a one-dimensional concave time split.
"""

import math
from dataclasses import dataclass

import numpy as np

from .beamforming import maxmin_energy_covariance, weighted_sum_energy_beam
from .joint import JointSolution
from .perron import nullspace_basis

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class ZfBank:
    """Zero-forcing receiver bank and the equivalent channel gains it leaves."""

    W_zf: np.ndarray
    equivalent_gains: np.ndarray


def zf_receivers(ch):
    """Per-user projection of h_k onto the null space of the other channels.

    Requires K <= M; each unit-norm receiver nulls all co-channel users,
    leaving the equivalent gain |w_k^H h_k|^2 = ||Y_k^H h_k||^2 where Y_k
    spans null{h_j : j != k}.
    """
    m, k_users = ch.H.shape
    if k_users > m:
        raise ValueError(f"zero-forcing needs K <= M, got K={k_users}, M={m}")
    w = np.empty_like(ch.H)
    gains = np.empty(k_users)
    for k in range(k_users):
        others = np.delete(ch.H, k, axis=1).conj().T  # rows h_j^H, j != k
        basis = nullspace_basis(others) if others.shape[0] else np.eye(m, dtype=complex)
        proj = basis @ (basis.conj().T @ ch.H[:, k])
        norm = np.linalg.norm(proj)
        if norm <= 1e-14 * np.linalg.norm(ch.H[:, k]):
            raise ValueError(f"user {k}'s channel lies in the span of the others")
        w[:, k] = proj / norm
        gains[k] = norm**2
    return ZfBank(W_zf=w, equivalent_gains=gains)


def _min_rate_at_tau(tau, sinr_slopes):
    """min_k (1 - tau) log2(1 + slope_k * tau / (1 - tau)); concave in tau."""
    x = tau / (1.0 - tau)
    return float((1.0 - tau) * np.log2(1.0 + sinr_slopes * x).min())


def _best_tau(sinr_slopes, lo=1e-3, hi=0.999, iters=80):
    """Golden-section maximization of the concave min-rate over the time split."""
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc = _min_rate_at_tau(c, sinr_slopes)
    fd = _min_rate_at_tau(d, sinr_slopes)
    for _ in range(iters):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = _min_rate_at_tau(c, sinr_slopes)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = _min_rate_at_tau(d, sinr_slopes)
    tau = 0.5 * (a + b)
    return tau, _min_rate_at_tau(tau, sinr_slopes)


def _zf_solution_for_covariance(ch, prm, bank, s_full, method, tau=None):
    """Package a ZF solution for a fixed full-power covariance.

    Every user transmits its whole harvested budget (zero-forcing leaves no
    interference), so the per-user SINR grows linearly in tau/(1-tau) and
    the time split maximizes a min of concave functions.
    """
    harvested = np.real(np.einsum("mk,mn,nk->k", ch.G.conj(), s_full, ch.G))
    q = prm.harvest_efficiency * harvested  # harvested power per unit tau
    slopes = bank.equivalent_gains * q / prm.noise_power
    if tau is None:
        tau, rate = _best_tau(slopes)
    else:
        if not 0.0 < tau < 1.0:
            raise ValueError("tau must lie strictly between 0 and 1")
        rate = _min_rate_at_tau(tau, slopes)
    p = tau * q / (1.0 - tau)
    gammas = bank.equivalent_gains * p / prm.noise_power
    return JointSolution(
        tau=float(tau),
        S=s_full,
        W=bank.W_zf,
        p=p,
        rate=rate,
        gamma=float(gammas.min()),
        k_star=int(np.argmin(gammas)),
        method=method,
    )


def zf_balanced_direction(ch, prm, tol=1e-8):
    """Receiver bank plus the unit-budget balanced energy level and direction.

    The inner covariance problem for the joint ZF design: maximize
    min_k equivalent_gain_k * eff * Tr(G_k S) / noise over Tr(S) <= 1.
    Scaling the budget scales the level linearly, so one solve covers every
    time split.
    """
    bank = zf_receivers(ch)
    costs = prm.noise_power / (prm.harvest_efficiency * bank.equivalent_gains)
    sol = maxmin_energy_covariance(costs, 1.0, ch, prm, tol=tol)
    return bank, sol


def zf_rate_at_tau(tau, level, prm):
    """Best ZF max-min rate at a fixed time split, given the unit-budget level."""
    x = tau / (1.0 - tau)
    return float((1.0 - tau) * np.log2(1.0 + level * prm.power_budget * x))


def suboptimal1(ch, prm, tau=None, tol=1e-8):
    """Joint ZF design: balanced covariance direction plus optimal time split.

    For any fixed tau the optimal scaled covariance is the max-min energy
    solution (level linear in tau), so the search collapses to one concave
    1-D maximization; users transmit at full harvested power.
    """
    bank, direction = zf_balanced_direction(ch, prm, tol=tol)
    s_full = prm.power_budget * direction.S  # trace = power budget
    return _zf_solution_for_covariance(ch, prm, bank, s_full, "zf-sub1", tau=tau)


def suboptimal2(ch, prm, tau=None):
    """Separated ZF design: one near-far weighted energy beam, then the time split."""
    bank = zf_receivers(ch)
    g_norms2 = np.sum(np.abs(ch.G) ** 2, axis=0)
    weights = 1.0 / (bank.equivalent_gains * g_norms2)
    beam = weighted_sum_energy_beam(weights, ch, prm)
    return _zf_solution_for_covariance(ch, prm, bank, beam.S, "zf-sub2", tau=tau)


def random_beam_baseline(ch, prm, seed, tau=None):
    """Isotropically random single energy beam with the ZF time-split optimization."""
    rng = np.random.default_rng(seed)
    u = rng.standard_normal(ch.num_antennas) + 1j * rng.standard_normal(ch.num_antennas)
    u /= np.linalg.norm(u)
    s_full = prm.power_budget * np.outer(u, u.conj())
    bank = zf_receivers(ch)
    return _zf_solution_for_covariance(ch, prm, bank, s_full, "random-beam", tau=tau)
