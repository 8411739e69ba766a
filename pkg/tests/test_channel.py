import csv

import numpy as np
import pytest

from wpcn_maxmin.channel import (
    ChannelModelConfig,
    ChannelSet,
    export_channels_csv,
    paper_fixture,
    path_loss,
    sample_channels,
    steering_vector,
)


def make_cfg(**kw):
    base = dict(
        user_angles=(np.deg2rad(-45.0), np.deg2rad(15.0)),
        user_distances=(1.0, 2.0),
        seed=0,
    )
    base.update(kw)
    return ChannelModelConfig(**base)


class TestPathLoss:
    def test_reference_distance(self):
        assert path_loss(1.0, make_cfg()) == pytest.approx(1e-3)

    def test_two_meters(self):
        assert path_loss(2.0, make_cfg()) == pytest.approx(1.25e-4)

    def test_intermediate_distance(self):
        # 1e-3 * 1.4^-3
        assert path_loss(1.4, make_cfg()) == pytest.approx(3.6443e-4, rel=5e-5)

    def test_rejects_non_positive(self):
        with pytest.raises(ValueError, match="positive"):
            path_loss(0.0, make_cfg())

    def test_strictly_decreasing(self):
        cfg = make_cfg()
        grid = np.linspace(0.5, 5.0, 40)
        vals = [path_loss(d, cfg) for d in grid]
        assert np.all(np.diff(vals) < 0)


class TestConfigValidation:
    def test_angle_distance_length_mismatch(self):
        with pytest.raises(ValueError, match="equal length"):
            make_cfg(user_angles=(0.0,))

    def test_negative_rician_factor(self):
        with pytest.raises(ValueError, match="rician"):
            make_cfg(rician_factor=-1.0)

    def test_non_positive_distance(self):
        with pytest.raises(ValueError, match="positive"):
            make_cfg(user_distances=(1.0, 0.0))


class TestSampling:
    def test_steering_vector_norm(self):
        for angle in (-1.2, 0.0, 0.7):
            a = steering_vector(5, angle)
            assert np.linalg.norm(a) ** 2 == pytest.approx(5.0)

    def test_los_limit(self):
        cfg = make_cfg(rician_factor=1e12)
        ch = sample_channels(4, cfg)
        for k, (angle, dist) in enumerate(zip(cfg.user_angles, cfg.user_distances)):
            want = np.sqrt(path_loss(dist, cfg)) * steering_vector(4, angle)
            assert np.linalg.norm(ch.G[:, k] - want) <= 1e-5

    def test_rayleigh_entry_variance(self):
        # pure NLOS: per-entry variance should equal the path loss
        cfg = make_cfg(rician_factor=0.0, user_angles=(0.3,), user_distances=(1.7,))
        loss = path_loss(1.7, cfg)
        draws = np.empty((100_000, 2), dtype=complex)
        for i in range(draws.shape[0]):
            draws[i] = sample_channels(2, make_cfg(
                rician_factor=0.0, user_angles=(0.3,), user_distances=(1.7,), seed=i
            )).G[:, 0]
        var = np.mean(np.abs(draws) ** 2)
        assert var == pytest.approx(loss, rel=0.02)

    def test_mean_column_power(self):
        cfg = make_cfg()
        losses = np.array([path_loss(d, cfg) for d in cfg.user_distances])
        acc = np.zeros(2)
        n = 100_000
        for i in range(n):
            g = sample_channels(3, make_cfg(seed=i)).G
            acc += np.sum(np.abs(g) ** 2, axis=0)
        mean_power = acc / (n * 3)
        assert mean_power == pytest.approx(losses, rel=0.02)

    def test_seed_determinism(self):
        cfg = make_cfg(seed=42)
        a = sample_channels(4, cfg)
        b = sample_channels(4, cfg)
        assert np.array_equal(a.G, b.G)
        assert np.array_equal(a.H, b.H)

    def test_seed_independence(self):
        # NLOS components from different seeds should be uncorrelated
        n = 10_000
        cfg_kw = dict(rician_factor=0.0, user_angles=(0.1,), user_distances=(1.0,))
        xs = np.empty(n)
        ys = np.empty(n)
        for i in range(n):
            xs[i] = sample_channels(1, make_cfg(seed=i, **cfg_kw)).G[0, 0].real
            ys[i] = sample_channels(1, make_cfg(seed=i + n, **cfg_kw)).G[0, 0].real
        r = np.corrcoef(xs, ys)[0, 1]
        assert abs(r) < 0.05

    def test_reciprocity_flag(self):
        ch = sample_channels(3, make_cfg())
        assert np.array_equal(ch.G, ch.H)
        ch2 = sample_channels(3, make_cfg(), reciprocal=False)
        assert not np.array_equal(ch2.G, ch2.H)

    def test_channelset_rejects_mismatched_reciprocal(self):
        g = np.ones((2, 2), dtype=complex)
        with pytest.raises(ValueError, match="reciprocal"):
            ChannelSet(G=g, H=2 * g, reciprocal=True)

    def test_antenna_masking(self):
        ch = sample_channels(5, make_cfg())
        sub = ch.with_active_antennas(3)
        assert sub.G.shape == (3, 2)
        assert np.array_equal(sub.G, ch.G[:3])


class TestFixture:
    def test_shape_and_reciprocity(self):
        ch = paper_fixture()
        assert ch.G.shape == (6, 4)
        assert np.array_equal(ch.G, ch.H)

    def test_printed_corner_entries(self):
        ch = paper_fixture()
        assert ch.G[0, 0] == pytest.approx(0.0082 + 0.0085j)
        assert ch.G[5, 3] == pytest.approx(-0.0151 + 0.0075j)

    def test_five_digit_entry_kept_verbatim(self):
        ch = paper_fixture()
        assert ch.G[0, 1] == pytest.approx(0.01371 - 0.0022j)

    def test_csv_export_roundtrip(self, tmp_path):
        ch = paper_fixture()
        path = tmp_path / "bench.csv"
        export_channels_csv(ch, path)
        with open(path) as fh:
            rows = list(csv.reader(fh))
        assert rows[0][:2] == ["g1_re", "g1_im"]
        assert len(rows) == 7  # header + one row per antenna
        parsed = np.array(
            [[float(rows[1 + m][2 * k]) + 1j * float(rows[1 + m][2 * k + 1])
              for k in range(4)] for m in range(6)]
        )
        assert np.allclose(parsed, ch.G, atol=1e-12)
