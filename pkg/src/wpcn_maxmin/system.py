"""Physical-layer quantities: harvested power budgets, uplink SINR, rates,
scenario constants, and end-to-end solution validation."""

from dataclasses import dataclass

import numpy as np


def dbm_to_watt(dbm):
    return 10.0 ** (dbm / 10.0) * 1e-3


def watt_to_dbm(watt):
    if watt <= 0:
        raise ValueError("power must be positive to express in dBm")
    return 10.0 * np.log10(watt / 1e-3)


@dataclass(frozen=True)
class SystemParams:
    """Scenario constants: AP power budget, noise power, harvesting efficiency,
    and optional per-user circuit energy (all powers in watts, energy in joules)."""

    power_budget: float
    noise_power: float
    harvest_efficiency: float = 0.5
    circuit_energy: tuple = ()

    def __post_init__(self):
        object.__setattr__(
            self, "circuit_energy", tuple(float(e) for e in np.atleast_1d(self.circuit_energy))
        )
        if self.power_budget <= 0:
            raise ValueError("power_budget must be positive")
        if self.noise_power <= 0:
            raise ValueError("noise_power must be positive")
        if not 0.0 < self.harvest_efficiency <= 1.0:
            raise ValueError("harvest_efficiency must lie in (0, 1]")
        if any(e < 0 for e in self.circuit_energy):
            raise ValueError("circuit_energy entries must be non-negative")

    def circuit_energy_vector(self, num_users):
        e = self.circuit_energy
        if len(e) == 0:
            return np.zeros(num_users)
        if len(e) == 1:
            return np.full(num_users, e[0])
        if len(e) != num_users:
            raise ValueError(f"circuit_energy has {len(e)} entries, expected {num_users}")
        return np.array(e)


@dataclass(frozen=True)
class EnergyCovariance:
    """Downlink transmit covariance S (Hermitian PSD), S = sum_i v_i v_i^H."""

    S: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.S, dtype=complex)
        if s.ndim != 2 or s.shape[0] != s.shape[1]:
            raise ValueError(f"S must be square, got shape {s.shape}")
        object.__setattr__(self, "S", s)

    def validate(self, power_budget, herm_tol=1e-10, psd_tol=-1e-10, trace_tol=1e-9):
        """Return a list of violated covariance invariants (empty when valid)."""
        violations = []
        asym = float(np.max(np.abs(self.S - self.S.conj().T)))
        if asym > herm_tol:
            violations.append(("hermitian", asym))
        min_eig = float(np.linalg.eigvalsh(0.5 * (self.S + self.S.conj().T)).min())
        if min_eig < psd_tol:
            violations.append(("positive_semidefinite", -min_eig))
        excess = float(np.real(np.trace(self.S))) - power_budget
        if excess > trace_tol:
            violations.append(("trace_budget", excess))
        return violations

    def beams(self, rel_tol=1e-12):
        """Energy beams v_i with S = sum_i v_i v_i^H, from the eigendecomposition."""
        vals, vecs = np.linalg.eigh(0.5 * (self.S + self.S.conj().T))
        top = vals[-1] if vals[-1] > 0 else 0.0
        out = []
        for i in range(len(vals) - 1, -1, -1):
            if vals[i] > rel_tol * top and vals[i] > 0:
                out.append(np.sqrt(vals[i]) * vecs[:, i])
        return out

    def rank(self, rel_tol=1e-9):
        vals = np.linalg.eigvalsh(0.5 * (self.S + self.S.conj().T))
        top = vals[-1] if vals[-1] > 0 else 0.0
        return int(np.sum(vals > rel_tol * max(top, 1e-300)))


def _covariance_array(S):
    return S.S if isinstance(S, EnergyCovariance) else np.asarray(S, dtype=complex)


def harvested_energy(S, ch, prm, tau):
    """Energy harvested per user during the downlink phase, net of circuit use.

    E_k = eff * tau * g_k^H S g_k - E_c_k, clamped at zero.
    """
    if not 0.0 < tau < 1.0:
        raise ValueError("tau must lie strictly between 0 and 1")
    s = _covariance_array(S)
    raw = np.real(np.einsum("mk,mn,nk->k", ch.G.conj(), s, ch.G))
    e_c = prm.circuit_energy_vector(ch.num_users)
    return np.maximum(prm.harvest_efficiency * tau * raw - e_c, 0.0)


def harvested_power_budget(S, ch, prm, tau):
    """Average uplink transmit power available per user:
    (eff * tau * g_k^H S g_k - E_c_k) / (1 - tau), clamped at zero."""
    return harvested_energy(S, ch, prm, tau) / (1.0 - tau)


def uplink_sinr(p, W, ch, prm):
    """Per-user uplink SINR for power vector ``p`` and receiver bank ``W``.

    gamma_k = p_k |w_k^H h_k|^2 /
              (sum_{j != k} p_j |w_k^H h_j|^2 + noise * ||w_k||^2).
    """
    p = np.asarray(p, dtype=float)
    w = np.asarray(W, dtype=complex)
    if w.shape != ch.H.shape:
        raise ValueError(f"receiver bank shape {w.shape} does not match channels {ch.H.shape}")
    if p.shape != (ch.num_users,):
        raise ValueError(f"power vector shape {p.shape} does not match K={ch.num_users}")
    if np.any(p < 0):
        raise ValueError("powers must be non-negative")
    norms2 = np.sum(np.abs(w) ** 2, axis=0)
    if np.any(norms2 <= 0):
        raise ValueError("receiver bank has a zero column")
    cross = np.abs(w.conj().T @ ch.H) ** 2  # [k, j] = |w_k^H h_j|^2
    signal = p * np.diag(cross)
    interference = cross @ p - signal
    return signal / (interference + prm.noise_power * norms2)


def achievable_rate(gammas, tau):
    """Per-user rate in bps/Hz: (1 - tau) * log2(1 + gamma)."""
    g = np.asarray(gammas, dtype=float)
    if np.any(g < 0):
        raise ValueError("SINR values must be non-negative")
    if not 0.0 < tau < 1.0:
        raise ValueError("tau must lie strictly between 0 and 1")
    return (1.0 - tau) * np.log2(1.0 + g)


def validate_solution(sol, ch, prm, power_tol=1e-9, rate_tol=1e-9):
    """Check a JointSolution against the original problem constraints.

    Returns a list of (constraint_name, violation_magnitude) pairs; an empty
    list means every constraint holds up to the stated tolerances.
    """
    violations = []
    if not 0.0 < sol.tau < 1.0:
        violations.append(("time_allocation", abs(sol.tau - 0.5)))
        return violations  # remaining checks need a valid tau

    cov = sol.S if isinstance(sol.S, EnergyCovariance) else EnergyCovariance(S=sol.S)
    violations.extend(cov.validate(prm.power_budget))

    budgets = harvested_power_budget(cov, ch, prm, sol.tau)
    p = np.asarray(sol.p, dtype=float)
    over = p - budgets
    worst = float(over.max()) if over.size else 0.0
    if worst > power_tol * max(float(budgets.max()), 1e-300):
        violations.append(("uplink_power_budget", worst))

    gammas = uplink_sinr(p, sol.W, ch, prm)
    min_rate = float(achievable_rate(gammas, sol.tau).min())
    err = abs(sol.rate - min_rate)
    if err > rate_tol * max(abs(min_rate), 1e-300):
        violations.append(("reported_rate", err))
    return violations
