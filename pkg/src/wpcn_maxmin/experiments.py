"""Configuration-driven experiment harness.

Loads a JSON scenario description, dispatches to the requested solver,
and produces machine-readable reports: a flat CSV (one row per evaluated
point) and/or a JSON mirror of the records.  Runs are deterministic given
the config and seeds; the runtime column is informational only.
"""

import csv
import hashlib
import json
import time
from dataclasses import asdict, dataclass, field, replace
from multiprocessing import get_context

import numpy as np

from . import __version__
from .channel import ChannelModelConfig, paper_fixture, sample_channels
from .errors import ConvergenceError, InfeasibleError
from .joint import optimal_at_tau, solve_optimal, tdma_reference
from .system import SystemParams, dbm_to_watt, harvested_power_budget, validate_solution
from .zf import random_beam_baseline, suboptimal1, suboptimal2

METHODS = ("optimal", "zf-sub1", "zf-sub2", "random-beam")
SCENARIOS = ("fixture", "random")
SWEEP_KINDS = ("tau", "distance", "antennas")

FIXTURE_SYSTEM = {"power_budget_w": 1.0, "noise_dbm": -50.0, "harvest_efficiency": 0.5}


class ConfigError(ValueError):
    """Invalid experiment configuration; ``where`` names the offending field."""

    def __init__(self, where, message):
        super().__init__(f"{where}: {message}")
        self.where = where


@dataclass(frozen=True)
class SweepSpec:
    kind: str
    start: float
    stop: float
    step: float

    def points(self):
        if self.kind == "antennas":
            return [int(v) for v in np.arange(int(self.start), int(self.stop) + 1, int(self.step))]
        n = int(np.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        return [float(np.round(self.start + i * self.step, 12)) for i in range(n)]


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: str
    method: str
    num_antennas: int
    num_users: int
    system: SystemParams
    channel: ChannelModelConfig = None
    tau: float = None
    sweep: SweepSpec = None
    seeds: tuple = (0,)
    tau_grid_step: float = 0.01
    refine: bool = True
    convention: str = "power"
    output_path: str = None


@dataclass
class PointRecord:
    scenario_id: str
    method: str
    num_antennas: int
    num_users: int
    tau: float
    rate_bps_hz: float
    gamma: float
    k_star: int
    p: tuple
    budgets: tuple
    iters: int
    runtime_ms: float
    seed: int


@dataclass
class ExperimentReport:
    records: list = field(default_factory=list)
    errors: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)


def _require(raw, where, allowed, required):
    unknown = sorted(set(raw) - set(allowed))
    if unknown:
        raise ConfigError(f"{where}.{unknown[0]}" if where else unknown[0], "unknown key")
    for key in required:
        if key not in raw:
            raise ConfigError(f"{where}.{key}" if where else key, "missing required key")


def _system_from(raw):
    _require(
        raw, "system",
        allowed=("power_budget_w", "power_budget_dbm", "noise_w", "noise_dbm",
                 "harvest_efficiency", "circuit_energy"),
        required=(),
    )
    if ("power_budget_w" in raw) == ("power_budget_dbm" in raw):
        raise ConfigError("system", "give exactly one of power_budget_w / power_budget_dbm")
    if ("noise_w" in raw) == ("noise_dbm" in raw):
        raise ConfigError("system", "give exactly one of noise_w / noise_dbm")
    power = raw.get("power_budget_w", None)
    if power is None:
        power = dbm_to_watt(float(raw["power_budget_dbm"]))
    noise = raw.get("noise_w", None)
    if noise is None:
        noise = dbm_to_watt(float(raw["noise_dbm"]))
    circuit = raw.get("circuit_energy", ())
    try:
        return SystemParams(
            power_budget=float(power),
            noise_power=float(noise),
            harvest_efficiency=float(raw.get("harvest_efficiency", 0.5)),
            circuit_energy=tuple(np.atleast_1d(circuit).astype(float)),
        )
    except ValueError as exc:
        raise ConfigError("system", str(exc)) from exc


def _channel_from(raw):
    _require(
        raw, "channel",
        allowed=("user_angles_deg", "user_distances_m", "reference_loss",
                 "reference_distance_m", "path_loss_exponent", "rician_factor",
                 "antenna_spacing_over_wavelength", "seed"),
        required=("user_angles_deg", "user_distances_m"),
    )
    try:
        return ChannelModelConfig(
            user_angles=tuple(np.deg2rad(np.asarray(raw["user_angles_deg"], dtype=float))),
            user_distances=tuple(np.asarray(raw["user_distances_m"], dtype=float)),
            reference_loss=float(raw.get("reference_loss", 1e-3)),
            reference_distance=float(raw.get("reference_distance_m", 1.0)),
            path_loss_exponent=float(raw.get("path_loss_exponent", 3.0)),
            rician_factor=float(raw.get("rician_factor", 3.0)),
            antenna_spacing_over_wavelength=float(
                raw.get("antenna_spacing_over_wavelength", 0.5)
            ),
            seed=int(raw.get("seed", 0)),
        )
    except ValueError as exc:
        raise ConfigError("channel", str(exc)) from exc


def _sweep_from(raw):
    _require(raw, "sweep", allowed=("kind", "start", "stop", "step"),
             required=("kind", "start", "stop"))
    kind = raw["kind"]
    if kind not in SWEEP_KINDS:
        raise ConfigError("sweep.kind", f"must be one of {SWEEP_KINDS}")
    step = float(raw.get("step", 1.0))
    start, stop = float(raw["start"]), float(raw["stop"])
    if step <= 0 or stop < start:
        raise ConfigError("sweep", "need step > 0 and stop >= start")
    if kind == "tau" and not (0.0 < start and stop < 1.0):
        raise ConfigError("sweep", "tau sweep must stay strictly inside (0, 1)")
    if kind == "distance" and start <= 0:
        raise ConfigError("sweep", "distances must be positive")
    if kind == "antennas" and (start < 1 or int(start) != start or int(step) != step):
        raise ConfigError("sweep", "antenna sweep needs integer start/step >= 1")
    return SweepSpec(kind=kind, start=start, stop=stop, step=step)


def config_from_dict(raw):
    """Validate a raw JSON dict into an ExperimentConfig (unknown keys rejected)."""
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    _require(
        raw, "",
        allowed=("scenario", "method", "M", "K", "system", "channel", "tau", "sweep",
                 "seeds", "tau_grid_step", "refine", "convention", "output_path"),
        required=("scenario", "method"),
    )
    scenario = raw["scenario"]
    if scenario not in SCENARIOS:
        raise ConfigError("scenario", f"must be one of {SCENARIOS}")
    method = raw["method"]
    if method not in METHODS:
        raise ConfigError("method", f"must be one of {METHODS}")

    system = _system_from(raw.get("system", dict(FIXTURE_SYSTEM)))

    channel = None
    if scenario == "fixture":
        if "channel" in raw:
            raise ConfigError("channel", "fixture scenario has a fixed channel model")
        num_antennas = int(raw.get("M", 6))
        num_users = int(raw.get("K", 4))
        if not 1 <= num_antennas <= 6:
            raise ConfigError("M", "fixture supports 1..6 active antennas")
        if num_users != 4:
            raise ConfigError("K", "the fixture has exactly 4 users")
    else:
        if "channel" not in raw:
            raise ConfigError("channel", "random scenario needs a channel section")
        channel = _channel_from(raw["channel"])
        num_users = int(raw.get("K", channel.num_users))
        if num_users != channel.num_users:
            raise ConfigError("K", f"K={num_users} but channel describes {channel.num_users} users")
        if "M" not in raw:
            raise ConfigError("M", "random scenario needs the antenna count M")
        num_antennas = int(raw["M"])
        if num_antennas < 1:
            raise ConfigError("M", "M must be >= 1")

    tau = raw.get("tau", None)
    if tau is not None:
        tau = float(tau)
        if not 0.0 < tau < 1.0:
            raise ConfigError("tau", "must lie strictly between 0 and 1")

    sweep = _sweep_from(raw["sweep"]) if "sweep" in raw else None
    if sweep is not None and sweep.kind == "distance" and scenario != "random":
        raise ConfigError("sweep", "distance sweeps need the random scenario")
    if sweep is not None and sweep.kind == "tau" and tau is not None:
        raise ConfigError("tau", "fixed tau conflicts with a tau sweep")
    if sweep is not None and sweep.kind == "antennas":
        limit = 6 if scenario == "fixture" else num_antennas
        if int(sweep.stop) > limit:
            raise ConfigError("sweep.stop", f"at most {limit} antennas available")

    seeds = raw.get("seeds", [0])
    if not isinstance(seeds, (list, tuple)) or not seeds:
        raise ConfigError("seeds", "must be a non-empty list of integers")
    try:
        seeds = tuple(int(s) for s in seeds)
    except (TypeError, ValueError) as exc:
        raise ConfigError("seeds", "must be integers") from exc

    tau_grid_step = float(raw.get("tau_grid_step", 0.01))
    if not 0.0 < tau_grid_step < 0.5:
        raise ConfigError("tau_grid_step", "must lie in (0, 0.5)")
    convention = raw.get("convention", "power")
    if convention not in ("power", "energy"):
        raise ConfigError("convention", "must be 'power' or 'energy'")

    return ExperimentConfig(
        scenario=scenario,
        method=method,
        num_antennas=num_antennas,
        num_users=num_users,
        system=system,
        channel=channel,
        tau=tau,
        sweep=sweep,
        seeds=seeds,
        tau_grid_step=tau_grid_step,
        refine=bool(raw.get("refine", True)),
        convention=convention,
        output_path=raw.get("output_path", None),
    )


def load_config(path):
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError("<file>", f"invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    return config_from_dict(raw)


def config_hash(cfg):
    """Stable hash of the config for report provenance."""
    blob = json.dumps(asdict_config(cfg), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def asdict_config(cfg):
    out = {
        "scenario": cfg.scenario, "method": cfg.method, "M": cfg.num_antennas,
        "K": cfg.num_users, "tau": cfg.tau, "seeds": list(cfg.seeds),
        "tau_grid_step": cfg.tau_grid_step, "refine": cfg.refine,
        "convention": cfg.convention,
        "system": {
            "power_budget_w": cfg.system.power_budget,
            "noise_w": cfg.system.noise_power,
            "harvest_efficiency": cfg.system.harvest_efficiency,
            "circuit_energy": list(cfg.system.circuit_energy),
        },
    }
    if cfg.channel is not None:
        out["channel"] = {
            "user_angles_deg": list(np.rad2deg(cfg.channel.user_angles)),
            "user_distances_m": list(cfg.channel.user_distances),
            "reference_loss": cfg.channel.reference_loss,
            "reference_distance_m": cfg.channel.reference_distance,
            "path_loss_exponent": cfg.channel.path_loss_exponent,
            "rician_factor": cfg.channel.rician_factor,
            "antenna_spacing_over_wavelength": cfg.channel.antenna_spacing_over_wavelength,
        }
    if cfg.sweep is not None:
        out["sweep"] = asdict(cfg.sweep)
    return out


def _channels_for(cfg, seed, distance=None, antennas=None):
    m = antennas if antennas is not None else cfg.num_antennas
    if cfg.scenario == "fixture":
        ch = paper_fixture()
        return ch.with_active_antennas(m) if m < 6 else ch
    model = replace(cfg.channel, seed=seed)
    if distance is not None:
        model = replace(model, user_distances=(distance,) * model.num_users)
    return sample_channels(m, model)


def _solve_point(cfg, ch, seed, tau):
    method = cfg.method
    if method == "optimal":
        if ch.num_antennas == 1:
            return tdma_reference(ch, cfg.system)
        if tau is not None:
            return optimal_at_tau(tau, ch, cfg.system, convention=cfg.convention)
        return solve_optimal(
            ch, cfg.system, grid_step=cfg.tau_grid_step,
            refine=cfg.refine, convention=cfg.convention,
        )
    if method == "zf-sub1":
        return suboptimal1(ch, cfg.system, tau=tau)
    if method == "zf-sub2":
        return suboptimal2(ch, cfg.system, tau=tau)
    return random_beam_baseline(ch, cfg.system, seed, tau=tau)


def _run_point(task):
    """Evaluate one (sweep point, seed) pair; module-level for multiprocessing."""
    cfg, point_label, seed, tau, distance, antennas = task
    started = time.perf_counter()
    try:
        ch = _channels_for(cfg, seed, distance=distance, antennas=antennas)
        sol = _solve_point(cfg, ch, seed, tau)
        if sol.method != "tdma":  # the TDMA baseline has different feasibility semantics
            violations = validate_solution(sol, ch, cfg.system)
            if violations:
                raise ConvergenceError(f"solution failed validation: {violations}")
        budgets = (
            sol.p if sol.method == "tdma"
            else harvested_power_budget(sol.S, ch, cfg.system, sol.tau)
        )
        runtime_ms = 1e3 * (time.perf_counter() - started)
        return PointRecord(
            scenario_id=point_label,
            method=sol.method,
            num_antennas=ch.num_antennas,
            num_users=ch.num_users,
            tau=float(sol.tau),
            rate_bps_hz=float(sol.rate),
            gamma=float(sol.gamma),
            k_star=int(sol.k_star),
            p=tuple(float(x) for x in sol.p),
            budgets=tuple(float(x) for x in np.asarray(budgets, dtype=float)),
            iters=int(sol.iterations),
            runtime_ms=runtime_ms,
            seed=seed,
        )
    except (ConvergenceError, InfeasibleError, ValueError) as exc:
        return {"scenario_id": point_label, "seed": seed, "error": str(exc)}


def _tasks_for(cfg):
    if cfg.sweep is None:
        label = cfg.scenario
        return [(cfg, label, seed, cfg.tau, None, None) for seed in cfg.seeds]
    tasks = []
    for value in cfg.sweep.points():
        label = f"{cfg.scenario}:{cfg.sweep.kind}={value:.6g}"
        for seed in cfg.seeds:
            if cfg.sweep.kind == "tau":
                tasks.append((cfg, label, seed, float(value), None, None))
            elif cfg.sweep.kind == "distance":
                tasks.append((cfg, label, seed, cfg.tau, float(value), None))
            else:
                tasks.append((cfg, label, seed, cfg.tau, None, int(value)))
    return tasks


def _collect(cfg, outcomes):
    report = ExperimentReport()
    report.metadata = {
        "config_hash": config_hash(cfg),
        "version": __version__,
        "config": asdict_config(cfg),
    }
    for item in outcomes:
        if isinstance(item, PointRecord):
            report.records.append(item)
        else:
            report.errors.append(item)
    return report


def run_scenario(cfg):
    """Run the configured method once per seed (no sweep)."""
    return _collect(cfg, [_run_point(t) for t in _tasks_for(cfg)])


def run_sweep(cfg, workers=1):
    """Run every sweep point independently; order-stable and seed-deterministic."""
    tasks = _tasks_for(cfg)
    if workers > 1:
        with get_context("spawn").Pool(workers) as pool:
            outcomes = pool.map(_run_point, tasks)
    else:
        outcomes = [_run_point(t) for t in tasks]
    return _collect(cfg, outcomes)


def csv_header(num_users):
    head = ["scenario_id", "method", "M", "K", "tau", "rate_bps_hz", "gamma", "k_star"]
    head += [f"p_{k + 1}" for k in range(num_users)]
    head += [f"budget_{k + 1}" for k in range(num_users)]
    head += ["iters", "runtime_ms", "seed"]
    return head


def _fmt(x):
    return format(float(x), ".12g")


def emit_report(report, path_prefix, fmt="csv", num_users=None):
    """Write the report; returns the list of files written.

    CSV columns: scenario_id, method, M, K, tau, rate_bps_hz, gamma, k_star,
    p_1..p_K, budget_1..budget_K, iters, runtime_ms, seed.  Numbers carry 12
    significant digits.  JSON mirrors the records (and failures) verbatim.
    """
    written = []
    if num_users is None:
        num_users = report.records[0].num_users if report.records else 0
    if fmt not in ("csv", "json"):
        raise ValueError(f"unknown report format {fmt!r}")
    if fmt == "csv":
        path = f"{path_prefix}.csv"
        try:
            with open(path, "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(csv_header(num_users))
                for r in report.records:
                    row = [r.scenario_id, r.method, r.num_antennas, r.num_users,
                           _fmt(r.tau), _fmt(r.rate_bps_hz), _fmt(r.gamma), r.k_star]
                    row += [_fmt(x) for x in r.p]
                    row += [_fmt(x) for x in r.budgets]
                    row += [r.iters, _fmt(r.runtime_ms), r.seed]
                    writer.writerow(row)
        except OSError as exc:
            raise OSError(f"cannot write report to {path}: {exc}") from exc
        written.append(path)
    else:
        path = f"{path_prefix}.json"
        payload = {
            "metadata": report.metadata,
            "records": [asdict(r) for r in report.records],
            "errors": report.errors,
        }
        try:
            with open(path, "w") as fh:
                json.dump(payload, fh, indent=2, default=float)
                fh.write("\n")
        except OSError as exc:
            raise OSError(f"cannot write report to {path}: {exc}") from exc
        written.append(path)
    return written
