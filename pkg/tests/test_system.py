import numpy as np
import pytest

from conftest import random_channelset, random_covariance, random_receivers
from wpcn_maxmin.channel import ChannelSet
from wpcn_maxmin.joint import JointSolution, optimal_at_tau
from wpcn_maxmin.system import (
    EnergyCovariance,
    SystemParams,
    achievable_rate,
    dbm_to_watt,
    harvested_power_budget,
    uplink_sinr,
    validate_solution,
    watt_to_dbm,
)


class TestUnitsAndParams:
    def test_dbm_conversions(self):
        assert dbm_to_watt(-50.0) == pytest.approx(1e-8)
        assert dbm_to_watt(30.0) == pytest.approx(1.0)
        assert watt_to_dbm(1e-8) == pytest.approx(-50.0)

    @pytest.mark.parametrize(
        "kw",
        [
            dict(power_budget=0.0, noise_power=1e-8),
            dict(power_budget=1.0, noise_power=0.0),
            dict(power_budget=1.0, noise_power=1e-8, harvest_efficiency=1.5),
            dict(power_budget=1.0, noise_power=1e-8, circuit_energy=(-1e-6,)),
        ],
    )
    def test_invalid_params_rejected(self, kw):
        with pytest.raises(ValueError):
            SystemParams(**kw)

    def test_circuit_energy_broadcast(self):
        prm = SystemParams(power_budget=1.0, noise_power=1e-8, circuit_energy=1e-6)
        assert np.array_equal(prm.circuit_energy_vector(3), np.full(3, 1e-6))


class TestHarvestedBudget:
    def test_single_beam_example(self):
        # beam on e1, channel e1: (0.5 * 0.5 * 1)/(0.5) = 0.5 W
        g = np.zeros((2, 1), dtype=complex)
        g[0, 0] = 1.0
        ch = ChannelSet(G=g, H=g.copy())
        prm = SystemParams(power_budget=1.0, noise_power=1e-8, harvest_efficiency=0.5)
        s = np.zeros((2, 2), dtype=complex)
        s[0, 0] = 1.0
        assert harvested_power_budget(s, ch, prm, 0.5) == pytest.approx([0.5])

    def test_zero_covariance(self, bench_channels, bench_params):
        s = np.zeros((6, 6), dtype=complex)
        out = harvested_power_budget(s, bench_channels, bench_params, 0.5)
        assert np.array_equal(out, np.zeros(4))

    @pytest.mark.parametrize("tau", [0.0, 1.0, -0.5, 1.5])
    def test_tau_domain(self, bench_channels, bench_params, tau):
        s = np.eye(6, dtype=complex)
        with pytest.raises(ValueError, match="tau"):
            harvested_power_budget(s, bench_channels, bench_params, tau)

    def test_linear_in_covariance(self, bench_channels, bench_params):
        rng = np.random.default_rng(0)
        s1 = random_covariance(rng, 6, 0.4)
        s2 = random_covariance(rng, 6, 0.6)
        b1 = harvested_power_budget(s1, bench_channels, bench_params, 0.3)
        b2 = harvested_power_budget(s2, bench_channels, bench_params, 0.3)
        b12 = harvested_power_budget(s1 + s2, bench_channels, bench_params, 0.3)
        assert np.allclose(b12, b1 + b2, rtol=1e-12)

    def test_tau_scaling(self, bench_channels, bench_params):
        rng = np.random.default_rng(1)
        s = random_covariance(rng, 6, 1.0)
        b1 = harvested_power_budget(s, bench_channels, bench_params, 0.25)
        b2 = harvested_power_budget(s, bench_channels, bench_params, 0.5)
        # ratio tau/(1-tau): (0.25/0.75) vs (0.5/0.5)
        assert np.allclose(b2 / b1, np.full(4, (0.5 / 0.5) / (0.25 / 0.75)), rtol=1e-12)

    def test_circuit_energy_clamp(self):
        g = np.ones((1, 1), dtype=complex)
        ch = ChannelSet(G=g, H=g.copy())
        prm = SystemParams(power_budget=1.0, noise_power=1e-8,
                           harvest_efficiency=0.5, circuit_energy=10.0)
        s = np.array([[1.0]], dtype=complex)
        assert harvested_power_budget(s, ch, prm, 0.5) == pytest.approx([0.0])


class TestUplinkSinr:
    def test_matched_filter_single_user(self):
        rng = np.random.default_rng(2)
        h = rng.standard_normal((3, 1)) + 1j * rng.standard_normal((3, 1))
        ch = ChannelSet(G=h, H=h.copy())
        prm = SystemParams(power_budget=1.0, noise_power=1e-8)
        p = np.array([2e-4])
        out = uplink_sinr(p, h, ch, prm)
        want = p[0] * np.linalg.norm(h) ** 2 / prm.noise_power
        assert out[0] == pytest.approx(want, rel=1e-12)

    def test_orthogonal_channels(self):
        h = np.eye(2, dtype=complex) * [2.0, 3.0]
        ch = ChannelSet(G=h, H=h.copy())
        prm = SystemParams(power_budget=1.0, noise_power=1e-8)
        p = np.array([1e-4, 2e-4])
        out = uplink_sinr(p, h, ch, prm)
        assert out == pytest.approx(p * np.array([4.0, 9.0]) / prm.noise_power, rel=1e-12)

    def test_two_user_hand_value(self):
        # direct scalar evaluation of the SINR formula, written out longhand
        h = np.array([[1.0, 0.6], [0.0, 0.8]], dtype=complex)
        w = np.array([[1.0, 0.0], [0.0, 1.0]], dtype=complex)
        ch = ChannelSet(G=h, H=h.copy())
        prm = SystemParams(power_budget=1.0, noise_power=1e-2)
        p = np.array([0.5, 0.25])
        out = uplink_sinr(p, w, ch, prm)
        want0 = 0.5 * 1.0 / (0.25 * 0.36 + 1e-2 * 1.0)
        want1 = 0.25 * 0.64 / (0.5 * 0.0 + 1e-2 * 1.0)
        assert out == pytest.approx([want0, want1], rel=1e-12)

    def test_receiver_scale_invariance(self):
        rng = np.random.default_rng(3)
        ch = random_channelset(rng, 4, 3, scale=0.02)
        prm = SystemParams(power_budget=1.0, noise_power=1e-8)
        w = random_receivers(rng, 4, 3)
        p = rng.uniform(1e-5, 1e-3, 3)
        base = uplink_sinr(p, w, ch, prm)
        for _ in range(20):
            scales = rng.uniform(0.1, 10.0, 3) * np.exp(1j * rng.uniform(0, 2 * np.pi, 3))
            assert np.allclose(uplink_sinr(p, w * scales, ch, prm), base, rtol=1e-10)

    def test_power_monotonicity(self):
        rng = np.random.default_rng(4)
        ch = random_channelset(rng, 3, 3, scale=0.02)
        prm = SystemParams(power_budget=1.0, noise_power=1e-8)
        w = random_receivers(rng, 3, 3)
        for _ in range(1000):
            p = rng.uniform(1e-5, 1e-3, 3)
            base = uplink_sinr(p, w, ch, prm)
            k = int(rng.integers(3))
            bumped = p.copy()
            bumped[k] *= 1.3
            out = uplink_sinr(bumped, w, ch, prm)
            assert out[k] > base[k] * (1 - 1e-12)
            others = np.delete(np.arange(3), k)
            assert np.all(out[others] <= base[others] * (1 + 1e-12))

    def test_zero_receiver_column_rejected(self):
        rng = np.random.default_rng(5)
        ch = random_channelset(rng, 3, 2)
        prm = SystemParams(power_budget=1.0, noise_power=1e-8)
        w = random_receivers(rng, 3, 2)
        w[:, 1] = 0.0
        with pytest.raises(ValueError, match="zero column"):
            uplink_sinr(np.array([1.0, 1.0]), w, ch, prm)


class TestAchievableRate:
    def test_values(self):
        assert achievable_rate(np.array([0.0]), 0.3)[0] == pytest.approx(0.0)
        assert achievable_rate(np.array([1.0]), 0.5)[0] == pytest.approx(0.5)
        assert achievable_rate(np.array([3.0]), 0.25)[0] == pytest.approx(1.5)

    def test_rejects_negative_sinr(self):
        with pytest.raises(ValueError, match="non-negative"):
            achievable_rate(np.array([-0.1]), 0.5)


class TestEnergyCovariance:
    def test_beam_reconstruction(self):
        rng = np.random.default_rng(6)
        s = random_covariance(rng, 5, 2.0)
        cov = EnergyCovariance(S=s)
        beams = cov.beams()
        rebuilt = sum(np.outer(v, v.conj()) for v in beams)
        assert np.max(np.abs(rebuilt - s)) <= 1e-8
        assert cov.validate(power_budget=2.0 + 1e-9) == []

    def test_trace_violation_reported(self):
        cov = EnergyCovariance(S=np.eye(3, dtype=complex))
        names = [name for name, _ in cov.validate(power_budget=2.0)]
        assert "trace_budget" in names

    def test_rank_counts_beams(self):
        g = np.array([1.0, 1.0j, 0.0])
        cov = EnergyCovariance(S=np.outer(g, g.conj()))
        assert cov.rank() == 1
        assert len(cov.beams()) == 1


class TestValidateSolution:
    def test_solver_output_clean(self, bench_channels, bench_params):
        sol = optimal_at_tau(0.5, bench_channels, bench_params)
        assert validate_solution(sol, bench_channels, bench_params) == []

    def test_overdrawn_power_flagged(self, bench_channels, bench_params):
        sol = optimal_at_tau(0.5, bench_channels, bench_params)
        bad = JointSolution(
            tau=sol.tau, S=sol.S, W=sol.W, p=2.0 * sol.p, rate=sol.rate,
            gamma=sol.gamma, k_star=sol.k_star,
        )
        names = [name for name, _ in validate_solution(bad, bench_channels, bench_params)]
        assert "uplink_power_budget" in names

    def test_bad_tau_flagged(self, bench_channels, bench_params):
        sol = optimal_at_tau(0.5, bench_channels, bench_params)
        bad = JointSolution(
            tau=1.0, S=sol.S, W=sol.W, p=sol.p, rate=sol.rate,
            gamma=sol.gamma, k_star=sol.k_star,
        )
        names = [name for name, _ in validate_solution(bad, bench_channels, bench_params)]
        assert "time_allocation" in names
