"""Channel generation: distance path loss, Rician fading over a uniform linear
array, and the fixed 6x4 benchmark channel used by the reference experiments."""

import csv
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ChannelModelConfig:
    """Path-loss and Rician fading parameters for one scenario.

    ``user_angles`` are directions in radians, ``user_distances`` in meters;
    both have one entry per user.  ``reference_loss`` is the loss at
    ``reference_distance``, and ``rician_factor`` the LOS/NLOS power ratio.
    """

    user_angles: tuple = ()
    user_distances: tuple = ()
    reference_loss: float = 1e-3
    reference_distance: float = 1.0
    path_loss_exponent: float = 3.0
    rician_factor: float = 3.0
    antenna_spacing_over_wavelength: float = 0.5
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "user_angles", tuple(float(a) for a in self.user_angles))
        object.__setattr__(
            self, "user_distances", tuple(float(d) for d in self.user_distances)
        )
        if self.reference_loss <= 0:
            raise ValueError("reference_loss must be positive")
        if self.reference_distance <= 0:
            raise ValueError("reference_distance must be positive")
        if self.path_loss_exponent < 0:
            raise ValueError("path_loss_exponent must be non-negative")
        if self.rician_factor < 0:
            raise ValueError("rician_factor must be non-negative")
        if len(self.user_angles) != len(self.user_distances):
            raise ValueError("user_angles and user_distances must have equal length")
        if any(d <= 0 for d in self.user_distances):
            raise ValueError("user distances must be positive")

    @property
    def num_users(self):
        return len(self.user_angles)


@dataclass(frozen=True)
class ChannelSet:
    """Downlink channels G and uplink channels H, one M-vector column per user."""

    G: np.ndarray
    H: np.ndarray
    reciprocal: bool = True

    def __post_init__(self):
        g = np.asarray(self.G, dtype=complex)
        h = np.asarray(self.H, dtype=complex)
        if g.ndim != 2 or g.shape != h.shape or g.shape[0] < 1 or g.shape[1] < 1:
            raise ValueError(f"G and H must be equal-shape M x K matrices, got {g.shape} / {h.shape}")
        if not (np.all(np.isfinite(g)) and np.all(np.isfinite(h))):
            raise ValueError("channel matrices must be finite")
        if self.reciprocal and not np.array_equal(g, h):
            raise ValueError("reciprocal flag set but H differs from G")
        object.__setattr__(self, "G", g)
        object.__setattr__(self, "H", h)

    @property
    def num_antennas(self):
        return self.G.shape[0]

    @property
    def num_users(self):
        return self.G.shape[1]

    def with_active_antennas(self, m):
        """Restrict to the first ``m`` antennas (rows)."""
        if not 1 <= m <= self.num_antennas:
            raise ValueError(f"active antenna count {m} out of range")
        return ChannelSet(G=self.G[:m].copy(), H=self.H[:m].copy(), reciprocal=self.reciprocal)


def path_loss(distance, cfg):
    """Distance-dependent loss: reference_loss * (d / d_ref)^-exponent."""
    if distance <= 0:
        raise ValueError("distance must be positive")
    return cfg.reference_loss * (distance / cfg.reference_distance) ** (
        -cfg.path_loss_exponent
    )


def steering_vector(num_antennas, angle, spacing_over_wavelength=0.5):
    """Far-field ULA response [1, e^{j t}, ..., e^{j (M-1) t}], t = -2 pi s sin(angle)."""
    phase = -2.0 * np.pi * spacing_over_wavelength * np.sin(angle)
    return np.exp(1j * phase * np.arange(num_antennas))

def sample_channels(num_antennas, cfg, reciprocal=True):
    """Draw one Rician channel realization per user.

    Column k is sqrt(L_k) * (sqrt(KR/(1+KR)) a(angle_k) + sqrt(1/(1+KR)) n_k)
    with n_k i.i.d. circularly-symmetric complex Gaussian of unit variance.
    Deterministic given ``cfg.seed``; the uplink matrix equals the downlink
    one unless ``reciprocal`` is False, in which case it is drawn fresh.
    """
    if num_antennas < 1:
        raise ValueError("num_antennas must be >= 1")
    if cfg.num_users < 1:
        raise ValueError("config must define at least one user")
    rng = np.random.default_rng(cfg.seed)
    kr = cfg.rician_factor
    los_w = np.sqrt(kr / (1.0 + kr))
    nlos_w = np.sqrt(1.0 / (1.0 + kr))

    def draw():
        cols = []
        for angle, dist in zip(cfg.user_angles, cfg.user_distances):
            a = steering_vector(num_antennas, angle, cfg.antenna_spacing_over_wavelength)
            n = (rng.standard_normal(num_antennas) + 1j * rng.standard_normal(num_antennas)) / np.sqrt(2.0)
            cols.append(np.sqrt(path_loss(dist, cfg)) * (los_w * a + nlos_w * n))
        return np.stack(cols, axis=1)

    g = draw()
    h = g.copy() if reciprocal else draw()
    return ChannelSet(G=g, H=h, reciprocal=reciprocal)


# Fixed M=6, K=4 benchmark channel (reciprocal UL/DL) used by the reference
# experiments; users sit at {-45, -15, 15, 45} degrees and {1, 1.4, 1.8, 2} m.
_FIXTURE_ROWS = [
    [0.0082 + 0.0085j, 0.01371 - 0.0022j, 0.0133 + 0.0077j, 0.0081 - 0.0004j],
    [0.0021 + 0.0110j, 0.0383 + 0.0125j, 0.0162 + 0.0061j, 0.0113 - 0.0051j],
    [-0.0246 - 0.0104j, 0.0172 + 0.0271j, 0.0236 + 0.0125j, 0.0003 - 0.0136j],
    [-0.0184 - 0.0174j, -0.0364 + 0.0023j, 0.0194 + 0.0031j, -0.0131 - 0.0110j],
    [0.0411 + 0.0017j, -0.0371 - 0.0106j, -0.0032 - 0.0064j, -0.0161 + 0.0009j],
    [-0.0002 + 0.0516j, -0.0172 - 0.0160j, 0.0202 - 0.0014j, -0.0151 + 0.0075j],
]

FIXTURE_USER_ANGLES_DEG = (-45.0, -15.0, 15.0, 45.0)
FIXTURE_USER_DISTANCES_M = (1.0, 1.4, 1.8, 2.0)


def paper_fixture():
    """The fixed 6x4 benchmark ChannelSet (uplink equals downlink)."""
    g = np.array(_FIXTURE_ROWS, dtype=complex)
    return ChannelSet(G=g, H=g.copy(), reciprocal=True)


def export_channels_csv(ch, path):
    """Write a ChannelSet as CSV: one row per antenna, re/im interleaved per user."""
    header = []
    for k in range(ch.num_users):
        header += [f"g{k + 1}_re", f"g{k + 1}_im"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in ch.G:
            flat = []
            for z in row:
                flat += [f"{z.real:.12g}", f"{z.imag:.12g}"]
            writer.writerow(flat)
