"""Monte Carlo experiment driver: sweep grids, emit CSV/JSON, stay reproducible.

A run is fully determined by (config, master_seed): channel realizations are
keyed by the correlation grid index and the realization index only, so every
scheme, rate, and self-interference level at the same grid slot is evaluated
on identical channels (paired comparisons). Rows are emitted in grid order
regardless of how workers finish.
"""
from __future__ import annotations

import configparser
import csv
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace, asdict

import numpy as np

from .allocation import LineSearchOptions, line_search_randomization
from .channel import (ChannelSet, channel_set_to_dict, channel_set_from_dict,
                      realize_channels)
from .config import (PhysicalConstants, PowerLimits, TopologyConfig,
                     dbm_to_watt, watt_to_dbm)
from .metrics import (SecrecySpec, achievable_secrecy_rate, audit_known_ecsi,
                      audit_unknown_ecsi, build_eve_statistics, empirical_outage)
from .precoding import build_precoders, precoder_set_from_dict, precoder_set_to_dict
from .scheduling import run_scheduled_blocks


class ConfigError(ValueError):
    """Invalid configuration; message names the offending field."""


REGIMES = ("known_ecsi", "unknown_ecsi")

CSV_COLUMNS = ["scheme", "regime", "rate", "alpha", "rho", "num_active",
               "realization", "seed", "feasible", "total_power_w",
               "total_power_dbm", "info_power_w", "txfj_power_w", "rxfj_power_w",
               "chosen_rx", "min_secrecy_rate", "empirical_outage"]


@dataclass
class ExperimentConfig:
    constants: PhysicalConstants = field(default_factory=PhysicalConstants)
    topology: TopologyConfig = field(default_factory=TopologyConfig)
    limits: PowerLimits = field(default_factory=PowerLimits)
    regime: str = "known_ecsi"
    schemes: tuple = ("cfj",)
    rates: tuple = (2.0,)
    alphas: tuple = (0.0,)
    rhos: tuple = (0.0,)
    t_values: tuple = ()          # non-empty switches to block scheduling
    outage_budget: float = 0.01
    num_realizations: int = 200
    master_seed: int = 20160401
    out_dir: str = "results"
    rx_max: float = 10.0
    rx_grid_points: int = 64
    rx_search: str = "common"     # or "per_bob"
    eve_stats_mode: str = "last_known"
    audit_draws: int = 2000
    workers: int = 1
    dump_realizations: bool = False


def validate_config(config: ExperimentConfig) -> None:
    topo = config.topology
    if config.regime not in REGIMES:
        raise ConfigError(f"sweep.regime: must be one of {REGIMES}")
    for scheme in config.schemes:
        if scheme not in ("zfbf", "txfj_only", "cfj"):
            raise ConfigError(f"sweep.schemes: unknown scheme '{scheme}'")
    if config.regime == "unknown_ecsi" and "zfbf" in config.schemes:
        raise ConfigError("sweep.schemes: zfbf requires known eavesdropper "
                          "channels and cannot run in the unknown_ecsi regime")
    if "zfbf" in config.schemes and topo.num_tx_antennas <= (
            topo.num_bobs + topo.num_eves - 1):
        raise ConfigError("topology.num_tx_antennas: zfbf needs more antennas "
                          "than num_bobs + num_eves - 1")
    if not config.rates or any(r <= 0 for r in config.rates):
        raise ConfigError("secrecy.rates: need at least one positive rate")
    if any(not 0.0 <= a <= 1.0 for a in config.alphas):
        raise ConfigError("sweep.alphas: entries must lie in [0, 1]")
    if any(not 0.0 <= r <= 1.0 for r in config.rhos):
        raise ConfigError("sweep.rhos: entries must lie in [0, 1]")
    if config.t_values:
        if config.regime != "known_ecsi":
            raise ConfigError("sweep.t_values: scheduling runs in the "
                              "known_ecsi regime only")
        for t in config.t_values:
            if not 1 <= t <= topo.num_bobs:
                raise ConfigError("sweep.t_values: entries must lie in "
                                  f"[1, {topo.num_bobs}]")
            if topo.num_tx_antennas <= t:
                raise ConfigError("sweep.t_values: num_tx_antennas must exceed T")
    if not 0.0 < config.outage_budget < 1.0:
        raise ConfigError("secrecy.outage_budget: must lie in (0, 1)")
    if config.num_realizations < 1:
        raise ConfigError("run.realizations: must be >= 1")
    if config.rx_search not in ("common", "per_bob"):
        raise ConfigError("run.rx_search: must be 'common' or 'per_bob'")
    if config.rx_max <= 0 or config.rx_grid_points < 2:
        raise ConfigError("run.rx_max/rx_grid_points: need rx_max > 0 and "
                          "at least 2 grid points")
    if config.audit_draws < 1:
        raise ConfigError("run.audit_draws: must be >= 1")
    if config.workers < 1:
        raise ConfigError("run.workers: must be >= 1")


@dataclass
class GridPoint:
    scheme: str
    rate: float
    alpha: float
    rho: float
    rho_idx: int
    num_active: int


@dataclass
class ResultRow:
    scheme: str
    regime: str
    rate: float
    alpha: float
    rho: float
    num_active: int
    realization: int
    seed: str
    feasible: bool
    total_power_w: float | None = None
    total_power_dbm: float | None = None
    info_power_w: float | None = None
    txfj_power_w: float | None = None
    rxfj_power_w: float | None = None
    chosen_rx: tuple = ()
    min_secrecy_rate: float | None = None
    empirical_outage: float | None = None

    def to_csv(self) -> list:
        fmt = lambda x: "" if x is None else format(x, ".6g")
        return [self.scheme, self.regime, fmt(self.rate), fmt(self.alpha),
                fmt(self.rho), str(self.num_active), str(self.realization),
                self.seed, "true" if self.feasible else "false",
                fmt(self.total_power_w), fmt(self.total_power_dbm),
                fmt(self.info_power_w), fmt(self.txfj_power_w),
                fmt(self.rxfj_power_w),
                ";".join(format(v, ".6g") for v in self.chosen_rx),
                fmt(self.min_secrecy_rate), fmt(self.empirical_outage)]


def _grid(config: ExperimentConfig) -> list:
    points = []
    for rho_idx, rho in enumerate(config.rhos):
        for scheme in config.schemes:
            alphas = config.alphas if scheme == "cfj" else (0.0,)
            for alpha in alphas:
                for rate in config.rates:
                    t_list = config.t_values or (config.topology.num_bobs,)
                    for t in t_list:
                        points.append(GridPoint(scheme=scheme, rate=float(rate),
                                                alpha=float(alpha), rho=float(rho),
                                                rho_idx=rho_idx, num_active=int(t)))
    return points


def _search_options(config: ExperimentConfig) -> LineSearchOptions:
    return LineSearchOptions(rx_max=config.rx_max,
                             grid_points=config.rx_grid_points,
                             per_bob=config.rx_search == "per_bob")


def _realization_task(args) -> tuple:
    config, point, realization = args
    row, dump = _run_realization(config, point, realization)
    return row, dump


def _run_realization(config: ExperimentConfig, point: GridPoint,
                     realization: int) -> tuple:
    """One channel draw, one solve, one audited row."""
    topo = replace(config.topology, correlation=point.rho, si_residual=point.alpha)
    seed = np.random.SeedSequence(config.master_seed,
                                  spawn_key=(point.rho_idx, realization))
    channels = realize_channels(topo, config.constants, seed)
    precoders = build_precoders(channels, point.scheme)
    spec = SecrecySpec.uniform(topo.num_bobs, point.rate,
                               eps=config.outage_budget, rho=point.rho)
    eve_stats = None
    if config.regime == "unknown_ecsi":
        eve_stats = build_eve_statistics(channels, spec, config.eve_stats_mode)
    report = line_search_randomization(channels, precoders, spec, limits=config.limits,
                                       regime=config.regime, eve_stats=eve_stats,
                                       alpha=point.alpha,
                                       options=_search_options(config))
    seed_key = f"{config.master_seed}:{point.rho_idx}:{realization}"
    row = ResultRow(scheme=point.scheme, regime=config.regime, rate=point.rate,
                    alpha=point.alpha, rho=point.rho, num_active=point.num_active,
                    realization=realization, seed=seed_key, feasible=False)
    dump = None
    if report.feasible:
        alloc = report.allocation
        solved = spec.with_randomization(report.chosen_rx)
        if config.regime == "known_ecsi":
            audit = audit_known_ecsi(channels, precoders, alloc, solved,
                                     config.limits, alpha=point.alpha)
        else:
            audit = audit_unknown_ecsi(channels, precoders, alloc, solved,
                                       eve_stats, config.limits, alpha=point.alpha)
        if not audit.passed:
            print(f"warning: audit rejected solver-feasible row {seed_key}: "
                  f"{audit.failures[:2]}", file=sys.stderr)
        else:
            row.feasible = True
            row.total_power_w = alloc.total_w
            row.total_power_dbm = watt_to_dbm(alloc.total_w)
            row.info_power_w = float(alloc.info_w.sum())
            row.txfj_power_w = float(alloc.txfj_w.sum())
            row.rxfj_power_w = float(alloc.rxfj_w.sum())
            row.chosen_rx = tuple(float(v) for v in report.chosen_rx)
            row.min_secrecy_rate = min(
                achievable_secrecy_rate(k, channels, precoders, alloc,
                                        alpha=point.alpha)
                for k in range(channels.num_bobs))
            if config.regime == "unknown_ecsi":
                outage_rng = np.random.SeedSequence(
                    config.master_seed,
                    spawn_key=(point.rho_idx, realization, 0xA0D17))
                redraw = ("small_scale" if config.eve_stats_mode == "last_known"
                          else "config")
                row.empirical_outage = max(
                    empirical_outage(k, channels, precoders, alloc, solved,
                                     config.audit_draws,
                                     np.random.default_rng(outage_rng),
                                     redraw=redraw)
                    for k in range(channels.num_bobs))
    if config.dump_realizations:
        dump = {
            "schema": "secjam-realization-v1",
            "seed": seed_key,
            "scheme": point.scheme,
            "regime": config.regime,
            "alpha": point.alpha,
            "rate": point.rate,
            "outage_budget": config.outage_budget,
            "limits": {"alice_max_w": config.limits.alice_max_w,
                       "bob_max_w": config.limits.bob_max_w},
            "eve_stats_mode": config.eve_stats_mode,
            "channels": channel_set_to_dict(channels),
            "precoders": precoder_set_to_dict(precoders),
            "feasible": row.feasible,
            "chosen_rx": list(row.chosen_rx),
            "allocation": None if not row.feasible else {
                "info_w": report.allocation.info_w.tolist(),
                "txfj_w": report.allocation.txfj_w.tolist(),
                "rxfj_w": report.allocation.rxfj_w.tolist(),
            },
        }
    return row, dump


def _run_unscheduled(config: ExperimentConfig):
    points = _grid(config)
    tasks = [(config, point, r) for point in points
             for r in range(config.num_realizations)]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(_realization_task, tasks, chunksize=8))
    else:
        results = [_realization_task(t) for t in tasks]
    rows = [row for row, _ in results]
    dumps = [d for _, d in results if d is not None]
    return rows, dumps


def _run_scheduled(config: ExperimentConfig):
    rows = []
    for point in _grid(config):
        spec = SecrecySpec.uniform(config.topology.num_bobs, point.rate)
        topo = replace(config.topology, correlation=point.rho,
                       si_residual=point.alpha)
        result = run_scheduled_blocks(topo, config.constants, spec, config.limits,
                                      num_active=point.num_active,
                                      num_blocks=config.num_realizations,
                                      master_seed=config.master_seed,
                                      alpha=point.alpha,
                                      options=_search_options(config),
                                      seed_group=point.rho_idx)
        for outcome in result.outcomes:
            seed_key = f"{config.master_seed}:{point.rho_idx}:{outcome.block}"
            row = ResultRow(scheme=point.scheme, regime=config.regime,
                            rate=point.rate, alpha=point.alpha, rho=point.rho,
                            num_active=point.num_active, realization=outcome.block,
                            seed=seed_key, feasible=outcome.report.feasible)
            if outcome.report.feasible:
                alloc = outcome.report.allocation
                row.total_power_w = alloc.total_w
                row.total_power_dbm = watt_to_dbm(alloc.total_w)
                row.info_power_w = float(alloc.info_w.sum())
                row.txfj_power_w = float(alloc.txfj_w.sum())
                row.rxfj_power_w = float(alloc.rxfj_w.sum())
                row.chosen_rx = tuple(float(v) for v in outcome.report.chosen_rx)
                row.min_secrecy_rate = outcome.min_secrecy_rate
            rows.append(row)
    return rows, []


@dataclass
class ExperimentResult:
    rows: list
    summary: dict


def summarize(rows: list, config: ExperimentConfig) -> dict:
    groups: dict = {}
    for row in rows:
        key = (row.scheme, row.rate, row.alpha, row.rho, row.num_active)
        groups.setdefault(key, []).append(row)
    grid_stats = []
    for key in sorted(groups):
        bucket = groups[key]
        feasible = [r for r in bucket if r.feasible]
        stat = {
            "scheme": key[0], "rate": key[1], "alpha": key[2], "rho": key[3],
            "num_active": key[4], "n": len(bucket), "n_feasible": len(feasible),
            "n_excluded": len(bucket) - len(feasible),
            "infeasible_fraction": 1.0 - len(feasible) / len(bucket),
        }
        if feasible:
            totals = np.array([r.total_power_w for r in feasible])
            stat.update({
                "mean_power_w": float(totals.mean()),
                "median_power_w": float(np.median(totals)),
                "mean_power_dbm": watt_to_dbm(float(totals.mean())),
                "mean_info_w": float(np.mean([r.info_power_w for r in feasible])),
                "mean_txfj_w": float(np.mean([r.txfj_power_w for r in feasible])),
                "mean_rxfj_w": float(np.mean([r.rxfj_power_w for r in feasible])),
            })
            outages = [r.empirical_outage for r in feasible
                       if r.empirical_outage is not None]
            if outages:
                stat["max_empirical_outage"] = float(np.max(outages))
        grid_stats.append(stat)
    return {
        "schema": "secjam-summary-v1",
        "regime": config.regime,
        "master_seed": config.master_seed,
        "num_realizations": config.num_realizations,
        "rx_search": config.rx_search,
        "eve_placement": config.topology.eve_placement,
        "grid": grid_stats,
    }


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    validate_config(config)
    if config.t_values:
        rows, dumps = _run_scheduled(config)
    else:
        rows, dumps = _run_unscheduled(config)
    result = ExperimentResult(rows=rows, summary=summarize(rows, config))
    result.dumps = dumps
    return result


def emit_results(result: ExperimentResult, out_dir: str) -> None:
    """Write results.csv, summary.json, and any realization dumps."""
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, "results.csv")
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for row in result.rows:
            writer.writerow(row.to_csv())
    with open(os.path.join(out_dir, "summary.json"), "w") as fh:
        json.dump(result.summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    dumps = getattr(result, "dumps", [])
    if dumps:
        dump_dir = os.path.join(out_dir, "realizations")
        os.makedirs(dump_dir, exist_ok=True)
        for dump in dumps:
            name = dump["seed"].replace(":", "_")
            path = os.path.join(dump_dir, f"{dump['scheme']}_{name}.json")
            with open(path, "w") as fh:
                json.dump(dump, fh, sort_keys=True)


def parse_results_csv(path: str) -> list:
    """Read back an emitted results.csv into ResultRow objects."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for rec in reader:
            opt = lambda s: None if s == "" else float(s)
            rows.append(ResultRow(
                scheme=rec["scheme"], regime=rec["regime"],
                rate=float(rec["rate"]), alpha=float(rec["alpha"]),
                rho=float(rec["rho"]), num_active=int(rec["num_active"]),
                realization=int(rec["realization"]), seed=rec["seed"],
                feasible=rec["feasible"] == "true",
                total_power_w=opt(rec["total_power_w"]),
                total_power_dbm=opt(rec["total_power_dbm"]),
                info_power_w=opt(rec["info_power_w"]),
                txfj_power_w=opt(rec["txfj_power_w"]),
                rxfj_power_w=opt(rec["rxfj_power_w"]),
                chosen_rx=tuple(float(v) for v in rec["chosen_rx"].split(";")
                                if v != ""),
                min_secrecy_rate=opt(rec["min_secrecy_rate"]),
                empirical_outage=opt(rec["empirical_outage"]),
            ))
    return rows


# ---------------------------------------------------------------------------
# Config file loading (INI sections mirror the dataclasses).

def _parse_list(raw: str, cast):
    items = [s.strip() for s in raw.replace(",", " ").split()]
    return tuple(cast(s) for s in items if s)


def load_config(path: str) -> ExperimentConfig:
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise OSError(f"cannot read config file: {path}")

    def section(name):
        return parser[name] if parser.has_section(name) else {}

    try:
        phys = section("physical")
        constants = PhysicalConstants(
            antenna_gain=float(phys.get("antenna_gain", 4.0)),
            carrier_frequency_hz=float(phys.get("carrier_frequency_hz", 5.26e9)),
            speed_of_light=float(phys.get("speed_of_light", 3.0e8)),
            bandwidth_hz=float(phys.get("bandwidth_hz", 160e6)),
            noise_power_w=dbm_to_watt(float(phys.get("noise_dbm", -95.0))),
        )
        topo_s = section("topology")
        topology = TopologyConfig(
            num_tx_antennas=int(topo_s.get("num_tx_antennas", 8)),
            num_bobs=int(topo_s.get("num_bobs", 3)),
            num_eves=int(topo_s.get("num_eves", 3)),
            cell_radius_m=float(topo_s.get("cell_radius_m", 30.0)),
            eve_placement=topo_s.get("eve_placement", "independent"),
            eve_ring_min_m=float(topo_s.get("eve_ring_min_m", 0.1)),
            eve_ring_max_m=float(topo_s.get("eve_ring_max_m", 1.0)),
            min_alice_distance_m=float(topo_s.get("min_alice_distance_m", 1.0)),
        )
        lim = section("limits")
        limits = PowerLimits(
            alice_max_w=dbm_to_watt(float(lim.get("alice_max_dbm", 24.0))),
            bob_max_w=dbm_to_watt(float(lim.get("bob_max_dbm", 10.0))),
        )
        sec = section("secrecy")
        sweep = section("sweep")
        run = section("run")
        config = ExperimentConfig(
            constants=constants, topology=topology, limits=limits,
            regime=sweep.get("regime", "known_ecsi"),
            schemes=_parse_list(sweep.get("schemes", "cfj"), str),
            rates=_parse_list(sec.get("rates", "2"), float),
            alphas=_parse_list(sweep.get("alphas", "0"), float),
            rhos=_parse_list(sweep.get("rhos", "0"), float),
            t_values=_parse_list(sweep.get("t_values", ""), int),
            outage_budget=float(sec.get("outage_budget", 0.01)),
            num_realizations=int(run.get("realizations", 200)),
            master_seed=int(run.get("seed", 20160401)),
            out_dir=run.get("out_dir", "results"),
            rx_max=float(run.get("rx_max", 10.0)),
            rx_grid_points=int(run.get("rx_grid_points", 64)),
            rx_search=run.get("rx_search", "common"),
            eve_stats_mode=run.get("eve_stats_mode", "last_known"),
            audit_draws=int(run.get("audit_draws", 2000)),
            workers=int(run.get("workers", 1)),
            dump_realizations=run.get("dump_realizations", "false").lower()
                in ("1", "true", "yes"),
        )
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc
    validate_config(config)
    return config


# ---------------------------------------------------------------------------
# Figure presets: four placement variants per study, desk-scale by default.

_VARMAP = {
    "a": ("independent", 0.0),
    "b": ("near_bob", 0.0),
    "c": ("near_bob", 0.4),
    "d": ("near_bob", 0.9),
}


def _variant_topology(variant: str, **kwargs) -> tuple:
    placement, rho = _VARMAP[variant]
    return TopologyConfig(eve_placement=placement, **kwargs), rho


def fig2_configs(realizations: int = 200, seed: int = 20160401,
                 variants: str = "abcd", rates: tuple = (1, 2, 3, 4, 5),
                 workers: int = 1) -> list:
    """Known-CSI power comparison of zfbf / txfj_only / cfj (three alphas)."""
    configs = []
    for v in variants:
        topology, rho = _variant_topology(v)
        configs.append((f"fig2{v}", ExperimentConfig(
            topology=topology, regime="known_ecsi",
            schemes=("zfbf", "txfj_only", "cfj"),
            alphas=(0.0, 1e-8, 1e-6), rates=tuple(float(r) for r in rates),
            rhos=(rho,), num_realizations=realizations, master_seed=seed,
            workers=workers)))
    return configs


def fig3_configs(realizations: int = 200, seed: int = 20160401,
                 variants: str = "abcd", rates: tuple = (1, 2, 3, 4, 5),
                 workers: int = 1) -> list:
    """Statistical-CSI power comparison of txfj_only / cfj under outage caps.

    Runs in a 12 m cell with perfectly cancelled self-interference. Outage
    rows charge every information beam by its worst-case gain against the
    eavesdropper covariance, so at 30 m cell-edge path loss the required
    jamming power exceeds the access-point budget for almost every draw;
    the tighter cell keeps a meaningful fraction of realizations feasible.
    Nonzero alpha feeds receiver jamming back into the receivers' own SINR
    floors, which the outage rows then amplify, so alpha is pinned to zero
    rather than swept here.
    """
    configs = []
    for v in variants:
        topology, rho = _variant_topology(v, cell_radius_m=12.0)
        configs.append((f"fig3{v}", ExperimentConfig(
            topology=topology, regime="unknown_ecsi",
            schemes=("txfj_only", "cfj"),
            alphas=(0.0,), rates=tuple(float(r) for r in rates),
            rhos=(rho,), num_realizations=realizations, master_seed=seed,
            workers=workers)))
    return configs


def fig4_configs(blocks: int = 500, seed: int = 20160401, variants: str = "ab",
                 rates: tuple = (1, 2, 3), workers: int = 1) -> list:
    """Scheduling study: serve the closest T of four Bobs per block."""
    configs = []
    variant_map = {"a": ("independent", 0.0), "b": ("near_bob", 0.9)}
    for v in variants:
        placement, rho = variant_map[v]
        topology = TopologyConfig(num_bobs=4, num_eves=3, eve_placement=placement)
        configs.append((f"fig4{v}", ExperimentConfig(
            topology=topology, regime="known_ecsi", schemes=("cfj",),
            alphas=(0.0,), rates=tuple(float(r) for r in rates), rhos=(rho,),
            t_values=(1, 2, 3, 4), num_realizations=blocks, master_seed=seed,
            workers=workers)))
    return configs
