"""Max-min throughput optimization for multi-antenna wireless-powered networks.

A multi-antenna access point first broadcasts energy downlink (shaped by a
transmit covariance), then the users send information uplink simultaneously
with their harvested power.  This package jointly optimizes the time split,
the downlink energy covariance, and the uplink powers plus receive
beamformers so the worst user's throughput is maximized, along with the
zero-forcing baselines and an experiment CLI.
"""

__version__ = "0.1.0"

from .balancing import (
    UplinkSolution,
    balance_value_and_powers,
    build_balance_matrix,
    mmse_receivers,
    power_fixed_point,
    solve_ul_fixed_v,
)
from .beamforming import (
    DownlinkSolution,
    maxmin_energy_covariance,
    solve_dl_fixed_w,
    weighted_sum_energy_beam,
)
from .channel import (
    ChannelModelConfig,
    ChannelSet,
    export_channels_csv,
    paper_fixture,
    path_loss,
    sample_channels,
    steering_vector,
)
from .errors import ConvergenceError, InfeasibleError, RankError
from .joint import (
    JointSolution,
    alternating_optimize,
    optimal_at_tau,
    solve_optimal,
    tau_sweep_optimize,
    tdma_reference,
)
from .perron import (
    EigenPair,
    collatz_wielandt_check,
    dominant_eigenvector,
    hermitian_top_eigenpair,
    nullspace_basis,
    spectral_radius,
)
from .system import (
    EnergyCovariance,
    SystemParams,
    achievable_rate,
    dbm_to_watt,
    harvested_energy,
    harvested_power_budget,
    uplink_sinr,
    validate_solution,
    watt_to_dbm,
)
from .zf import (
    ZfBank,
    random_beam_baseline,
    suboptimal1,
    suboptimal2,
    zf_receivers,
)
