"""Minimum-power allocation under secrecy constraints.

For fixed precoders and fixed rate targets, every constraint is linear in
the transmit powers, so the whole problem is a linear program:

    minimize    sum of all powers
    subject to  Bob k's link supports R_k + Rx_k,
                every Eve (or her statistical outage bound) stays below Rx_k,
                the access-point and per-receiver budgets.

The randomization rates Rx_k are not LP variables; a line search over them
wraps the LP (grid pass, golden-section refinement, optional per-Bob
coordinate descent).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .channel import ChannelSet
from .config import PowerLimits
from .metrics import (EveStatistics, PowerAllocation, SecrecySpec,
                      outage_threshold)
from .precoding import PrecoderSet

# Squared beam gains below (ZF_RESIDUAL_RTOL * |h| * |v|)^2 are artifacts of
# finite-precision nulling and are treated as exact zeros.
ZF_RESIDUAL_RTOL = 1e-10

_LINPROG_OPTIONS = {
    "presolve": True,
    "primal_feasibility_tolerance": 1e-10,
    "dual_feasibility_tolerance": 1e-10,
}


@dataclass
class LinearProgram:
    """min c.x subject to rows.x <= rhs, 0 <= x <= upper_bounds."""

    objective: np.ndarray
    rows: np.ndarray
    rhs: np.ndarray
    upper_bounds: np.ndarray
    labels: list
    row_labels: list

    @property
    def num_vars(self) -> int:
        return self.objective.size

    @property
    def num_rows(self) -> int:
        return self.rhs.size

    def to_text(self) -> str:
        """Canonical plain-text dump: objective row, then constraint rows."""
        def lin(coeffs):
            terms = [f"{c:+.9e} {name}" for c, name in zip(coeffs, self.labels) if c != 0.0]
            return " ".join(terms) if terms else "0"
        lines = [f"minimize: {lin(self.objective)}", "subject to:"]
        for i in range(self.num_rows):
            lines.append(f"  {self.row_labels[i]}: {lin(self.rows[i])} <= {self.rhs[i]:.9e}")
        lines.append("bounds:")
        for j, name in enumerate(self.labels):
            lines.append(f"  0 <= {name} <= {self.upper_bounds[j]:.9e}")
        return "\n".join(lines)


@dataclass
class SolveReport:
    """Outcome of one allocation solve (or one line search over Rx)."""

    status: str                      # optimal | infeasible | unbounded | error
    allocation: PowerAllocation | None = None
    chosen_rx: np.ndarray | None = None
    objective_w: float | None = None
    x: np.ndarray | None = None      # raw solution in the program's layout
    certificate_row: int | None = None
    certificate_label: str | None = None
    max_residual: float = 0.0
    lp_solves: int = 1
    searched_points: int = 0
    search_stage: str = "fixed"

    @property
    def feasible(self) -> bool:
        return self.status == "optimal"


def _clamped_gains(h_rows: np.ndarray, directions: np.ndarray) -> np.ndarray:
    """|h_i . v_j|^2 with zero-forced residuals snapped to exact zero."""
    if h_rows.size == 0 or directions.size == 0:
        return np.zeros((h_rows.shape[0], directions.shape[0]))
    gains = np.abs(h_rows @ directions.T) ** 2
    floor = (ZF_RESIDUAL_RTOL * np.linalg.norm(h_rows, axis=1)) ** 2
    gains[gains < floor[:, None]] = 0.0
    return gains


def _variable_layout(scheme: str, num_bobs: int, num_txfj: int):
    labels = [f"info_{k}" for k in range(num_bobs)]
    if scheme in ("cfj", "txfj_only"):
        labels += [f"txfj_{m}" for m in range(num_txfj)]
    if scheme == "cfj":
        labels += [f"rxfj_{k}" for k in range(num_bobs)]
    return labels


def _require_rx(spec: SecrecySpec, num_bobs: int) -> np.ndarray:
    if spec.randomization_rates is None:
        raise ValueError("spec.randomization_rates must be set before building the LP")
    rx = np.asarray(spec.randomization_rates, dtype=float)
    if rx.shape != (num_bobs,):
        raise ValueError("randomization_rates must have one entry per Bob")
    if np.any(rx < 0.0):
        raise ValueError("randomization rates must be nonnegative")
    return rx


def _bob_rate_rows(channels: ChannelSet, precoders: PrecoderSet, rx: np.ndarray,
                   spec: SecrecySpec, labels, noise_w: float, alpha: float,
                   rows: list, rhs: list, row_labels: list) -> None:
    num_bobs = channels.num_bobs
    has_rxfj = any(name.startswith("rxfj") for name in labels)
    idx = {name: j for j, name in enumerate(labels)}
    for k in range(num_bobs):
        grow = 2.0 ** (float(spec.secrecy_rates[k]) + rx[k]) - 1.0
        row = np.zeros(len(labels))
        row[idx[f"info_{k}"]] = -np.abs(channels.h_ab[k] @ precoders.info[k]) ** 2
        if has_rxfj:
            for l in range(num_bobs):
                coeff = (alpha * np.abs(channels.h_bb[k, k]) ** 2 if l == k
                         else np.abs(channels.h_bb[l, k]) ** 2)
                row[idx[f"rxfj_{l}"]] = grow * coeff
        rows.append(row)
        rhs.append(-grow * noise_w)
        row_labels.append(f"bob_rate_{k}")


def _budget_rows(labels, limits: PowerLimits, num_bobs: int,
                 rows: list, rhs: list, row_labels: list) -> None:
    idx = {name: j for j, name in enumerate(labels)}
    alice = np.zeros(len(labels))
    for name in labels:
        if name.startswith(("info", "txfj")):
            alice[idx[name]] = 1.0
    rows.append(alice)
    rhs.append(limits.alice_max_w)
    row_labels.append("alice_budget")
    caps = limits.bob_caps(num_bobs)
    for k in range(num_bobs):
        name = f"rxfj_{k}"
        if name in idx:
            row = np.zeros(len(labels))
            row[idx[name]] = 1.0
            rows.append(row)
            rhs.append(float(caps[k]))
            row_labels.append(f"rxfj_cap_{k}")


def _upper_bounds(labels, limits: PowerLimits) -> np.ndarray:
    ub = np.empty(len(labels))
    for j, name in enumerate(labels):
        ub[j] = limits.bob_max_w if name.startswith("rxfj") else limits.alice_max_w
    return ub


def build_lp_known_ecsi(channels: ChannelSet, precoders: PrecoderSet,
                        spec: SecrecySpec, limits: PowerLimits,
                        noise_w: float | None = None,
                        alpha: float | None = None) -> LinearProgram:
    """Assemble the allocation LP when every eavesdropper channel is known.

    Rows: K Bob rate rows, K*L eavesdropper leakage rows, the access-point
    budget, and (when receivers jam) K per-receiver caps. A zero
    randomization rate is only legal for messages with zero leakage gain at
    every Eve, which zero-forcing guarantees by construction.
    """
    if noise_w is None:
        noise_w = channels.constants.noise_power_w
    if alpha is None:
        alpha = channels.topology.si_residual
    num_bobs, num_eves = channels.num_bobs, channels.num_eves
    rx = _require_rx(spec, num_bobs)
    labels = _variable_layout(precoders.scheme, num_bobs, precoders.num_txfj)
    idx = {name: j for j, name in enumerate(labels)}

    leak = _clamped_gains(channels.h_ae, precoders.info)     # (L, K)
    tx_gain = _clamped_gains(channels.h_ae, precoders.txfj)  # (L, M)
    for k in range(num_bobs):
        if rx[k] == 0.0 and num_eves and np.any(leak[:, k] > 0.0):
            raise ValueError(
                f"randomization rate for bob {k} must be positive: "
                "eavesdroppers observe its information beam")

    rows, rhs, row_labels = [], [], []
    _bob_rate_rows(channels, precoders, rx, spec, labels, noise_w, alpha,
                   rows, rhs, row_labels)
    for k in range(num_bobs):
        grow = 2.0 ** rx[k] - 1.0
        for i in range(num_eves):
            row = np.zeros(len(labels))
            row[idx[f"info_{k}"]] = leak[i, k]
            for l in range(num_bobs):
                if l != k:
                    row[idx[f"info_{l}"]] = -grow * leak[i, l]
            for m in range(precoders.num_txfj):
                if f"txfj_{m}" in idx:
                    row[idx[f"txfj_{m}"]] = -grow * tx_gain[i, m]
            for l in range(num_bobs):
                name = f"rxfj_{l}"
                if name in idx:
                    row[idx[name]] = -grow * np.abs(channels.h_be[l, i]) ** 2
            rows.append(row)
            rhs.append(grow * noise_w)
            row_labels.append(f"eve_leak_b{k}_e{i}")
    _budget_rows(labels, limits, num_bobs, rows, rhs, row_labels)
    return LinearProgram(objective=np.ones(len(labels)), rows=np.array(rows),
                         rhs=np.array(rhs), upper_bounds=_upper_bounds(labels, limits),
                         labels=labels, row_labels=row_labels)


def build_lp_unknown_ecsi(channels: ChannelSet, precoders: PrecoderSet,
                          spec: SecrecySpec, eve_stats: EveStatistics,
                          limits: PowerLimits, noise_w: float | None = None,
                          alpha: float | None = None) -> LinearProgram:
    """Assemble the allocation LP with statistical eavesdropper knowledge.

    The K*L leakage rows are replaced by K*L Markov outage rows: each Eve's
    expected leakage power may not exceed the per-Eve outage share
    1 - (1 - eps)^(1/L) of (2^Rx - 1) times her mean interference-plus-noise
    level. Randomization rates must be strictly positive because expected
    leakage never vanishes.
    """
    if noise_w is None:
        noise_w = channels.constants.noise_power_w
    if alpha is None:
        alpha = channels.topology.si_residual
    num_bobs, num_eves = channels.num_bobs, channels.num_eves
    rx = _require_rx(spec, num_bobs)
    if num_eves and np.any(rx <= 0.0):
        raise ValueError("randomization rates must be strictly positive when "
                         "eavesdropper channels are only known statistically")
    if num_eves and spec.outage_budgets is None:
        raise ValueError("spec.outage_budgets must be set for the outage bound")
    labels = _variable_layout(precoders.scheme, num_bobs, precoders.num_txfj)
    idx = {name: j for j, name in enumerate(labels)}

    # Expected squared beamforming gains against each assumed covariance.
    directions = np.vstack([precoders.info, precoders.txfj])
    quad = np.zeros((num_eves, directions.shape[0]))
    for i in range(num_eves):
        cov = eve_stats.covariances[i]
        quad[i] = np.real(np.einsum("jn,nm,jm->j", directions.conj(), cov, directions))

    rows, rhs, row_labels = [], [], []
    _bob_rate_rows(channels, precoders, rx, spec, labels, noise_w, alpha,
                   rows, rhs, row_labels)
    # Markov on the eavesdropper's SINR (a nonnegative variable):
    #   Pr{SINR >= 2^rx - 1} <= E[SINR] / (2^rx - 1)
    # with E[SINR] evaluated against mean interference. Requiring that to stay
    # below the per-Eve outage share gives, per (bob k, eve i),
    #   P_k q_ik <= cap_k (2^rx_k - 1) (cross + jam + rxjam + N_0),
    # linear in every power variable. Subtracting mean interference from the
    # leakage numerator instead (Markov on a signed variable) is NOT a valid
    # tail bound: optimal allocations then sit at eve SINR ~ threshold and
    # fresh-draw outage lands near 1/2 rather than below eps.
    for k in range(num_bobs):
        grow = 2.0 ** rx[k] - 1.0
        cap = outage_threshold(float(spec.outage_budgets[k]), num_eves) if num_eves else 0.0
        for i in range(num_eves):
            row = np.zeros(len(labels))
            row[idx[f"info_{k}"]] = quad[i, k]
            for l in range(num_bobs):
                if l != k:
                    row[idx[f"info_{l}"]] = -cap * grow * quad[i, l]
            for m in range(precoders.num_txfj):
                if f"txfj_{m}" in idx:
                    row[idx[f"txfj_{m}"]] = -cap * grow * quad[i, num_bobs + m]
            for l in range(num_bobs):
                name = f"rxfj_{l}"
                if name in idx:
                    row[idx[name]] = -cap * grow * eve_stats.bob_eve_gain_mean[l, i]
            rows.append(row)
            rhs.append(cap * grow * noise_w)
            row_labels.append(f"outage_b{k}_e{i}")
    _budget_rows(labels, limits, num_bobs, rows, rhs, row_labels)
    return LinearProgram(objective=np.ones(len(labels)), rows=np.array(rows),
                         rhs=np.array(rhs), upper_bounds=_upper_bounds(labels, limits),
                         labels=labels, row_labels=row_labels)


def _normalize_rows(lp: LinearProgram):
    scale = np.max(np.abs(lp.rows), axis=1)
    scale[scale == 0.0] = 1.0
    return lp.rows / scale[:, None], lp.rhs / scale


def _extract_allocation(lp: LinearProgram, x: np.ndarray) -> PowerAllocation:
    x = np.where(np.abs(x) < 1e-18, 0.0, x)
    info = np.array([x[j] for j, n in enumerate(lp.labels) if n.startswith("info")])
    txfj = np.array([x[j] for j, n in enumerate(lp.labels) if n.startswith("txfj")])
    rxfj = np.array([x[j] for j, n in enumerate(lp.labels) if n.startswith("rxfj")])
    if rxfj.size == 0:
        rxfj = np.zeros(info.size)
    return PowerAllocation(info_w=info, txfj_w=txfj, rxfj_w=rxfj,
                           objective_w=float(x.sum()), feasible=True)


def _infeasibility_certificate(rows_n, rhs_n, ub):
    """Row index whose violation survives even when total violation is minimized."""
    m, n = rows_n.shape
    c = np.concatenate([np.zeros(n), np.ones(m)])
    a_elastic = np.hstack([rows_n, -np.eye(m)])
    bounds = [(0.0, float(u)) for u in ub] + [(0.0, None)] * m
    res = linprog(c, A_ub=a_elastic, b_ub=rhs_n, bounds=bounds, method="highs")
    if res.status != 0:
        return None
    slack = res.x[n:]
    worst = int(np.argmax(slack))
    return worst if slack[worst] > 1e-12 else None


def solve_lp(lp: LinearProgram) -> SolveReport:
    """Solve to a vertex optimum with HiGHS on row-normalized data.

    Normalization divides each row by its largest coefficient magnitude so
    the wildly different scales of channel gains and budgets do not poison
    the solver tolerances. Infeasible programs come back with the index of a
    row that remains violated at the minimum-total-violation point.
    """
    rows_n, rhs_n = _normalize_rows(lp)
    bounds = [(0.0, float(u)) for u in lp.upper_bounds]
    res = linprog(lp.objective, A_ub=rows_n, b_ub=rhs_n, bounds=bounds,
                  method="highs", options=_LINPROG_OPTIONS)
    if res.status == 0:
        x = np.clip(res.x, 0.0, None)
        residual = float(np.max(rows_n @ x - rhs_n)) if lp.num_rows else 0.0
        alloc = _extract_allocation(lp, x)
        return SolveReport(status="optimal", allocation=alloc,
                           objective_w=float(res.fun), x=x,
                           max_residual=max(residual, 0.0))
    if res.status == 2:
        worst = _infeasibility_certificate(rows_n, rhs_n, lp.upper_bounds)
        return SolveReport(status="infeasible", certificate_row=worst,
                           certificate_label=(lp.row_labels[worst]
                                              if worst is not None else None),
                           lp_solves=2)
    if res.status == 3:
        return SolveReport(status="unbounded")
    return SolveReport(status="error")


@dataclass
class GridOracleResult:
    feasible: bool
    objective_w: float | None
    point: np.ndarray | None
    step_w: np.ndarray


def lp_grid_oracle(lp: LinearProgram, resolution: int = 41,
                   include_point: np.ndarray | None = None) -> GridOracleResult:
    """Dense-grid enumeration of small programs (at most 4 variables).

    Each variable ranges over `resolution` equispaced levels from zero to its
    upper bound; the best feasible grid point is returned (feasibility slack
    1e-8 on row-normalized data, matching the solver's contract). Passing
    include_point splices a candidate's coordinates into every axis, so the
    enumeration can certify that candidate against the whole grid while still
    evaluating feasibility and objective with its own code path.
    """
    n = lp.num_vars
    if n > 4:
        raise ValueError("grid oracle is limited to 4 variables")
    if resolution < 2:
        raise ValueError("resolution must be >= 2")
    rows_n, rhs_n = _normalize_rows(lp)
    axes = [np.linspace(0.0, float(u), resolution) for u in lp.upper_bounds]
    steps = np.array([ax[1] - ax[0] for ax in axes])
    if include_point is not None:
        for j in range(n):
            level = float(np.clip(include_point[j], 0.0, lp.upper_bounds[j]))
            axes[j] = np.unique(np.append(axes[j], level))
    if n == 1:
        rest = np.zeros((1, 0))
    else:
        mesh = np.meshgrid(*axes[1:], indexing="ij")
        rest = np.column_stack([m.ravel() for m in mesh])
    best_val, best_pt = np.inf, None
    for v0 in axes[0]:
        pts = np.column_stack([np.full(rest.shape[0], v0), rest])
        feas = np.all(pts @ rows_n.T <= rhs_n + 1e-8, axis=1)
        if not np.any(feas):
            continue
        vals = pts[feas] @ lp.objective
        j = int(np.argmin(vals))
        if vals[j] < best_val:
            best_val = float(vals[j])
            best_pt = pts[feas][j]
    if best_pt is None:
        return GridOracleResult(feasible=False, objective_w=None, point=None,
                                step_w=steps)
    return GridOracleResult(feasible=True, objective_w=best_val, point=best_pt,
                            step_w=steps)


@dataclass
class LineSearchOptions:
    """Controls for the randomization-rate search wrapping the LP."""

    rx_max: float = 10.0
    grid_points: int = 64
    golden_tol: float = 1e-3
    per_bob: bool = False
    improve_rtol: float = 1e-4
    max_passes: int = 8


_INVPHI = (np.sqrt(5.0) - 1.0) / 2.0


def _golden_section(f, lo: float, hi: float, tol: float) -> None:
    """Golden-section descent on f over [lo, hi]; f records its own best."""
    a, b = lo, hi
    x1 = b - _INVPHI * (b - a)
    x2 = a + _INVPHI * (b - a)
    f1, f2 = f(x1), f(x2)
    while b - a > tol:
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - _INVPHI * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _INVPHI * (b - a)
            f2 = f(x2)


def line_search_randomization(channels: ChannelSet, precoders: PrecoderSet,
                              spec: SecrecySpec, limits: PowerLimits,
                              regime: str = "known_ecsi",
                              eve_stats: EveStatistics | None = None,
                              noise_w: float | None = None,
                              alpha: float | None = None,
                              options: LineSearchOptions | None = None) -> SolveReport:
    """Pick randomization rates minimizing total power.

    Stage 1 searches a common scalar Rx on (0, rx_max]: a coarse grid pass,
    then golden-section refinement around the best bracket. Because every
    evaluation is remembered, a non-unimodal objective simply falls back to
    the grid minimum. Stage 2 (optional) runs per-Bob coordinate descent
    until a full pass improves the objective by less than improve_rtol.

    With no eavesdroppers, or with every leakage gain zero-forced away,
    randomization is pure overhead and Rx = 0 is returned directly.
    """
    if regime not in ("known_ecsi", "unknown_ecsi"):
        raise ValueError("regime must be 'known_ecsi' or 'unknown_ecsi'")
    if regime == "unknown_ecsi" and channels.num_eves and eve_stats is None:
        raise ValueError("eve_stats is required for the unknown-ECSI regime")
    opts = options or LineSearchOptions()
    num_bobs = channels.num_bobs
    state = {"solves": 0, "best": None, "best_val": np.inf}

    def solve_at(rx_vec: np.ndarray) -> SolveReport:
        candidate = spec.with_randomization(rx_vec)
        if regime == "known_ecsi":
            lp = build_lp_known_ecsi(channels, precoders, candidate, limits,
                                     noise_w=noise_w, alpha=alpha)
        else:
            lp = build_lp_unknown_ecsi(channels, precoders, candidate, eve_stats,
                                       limits, noise_w=noise_w, alpha=alpha)
        report = solve_lp(lp)
        state["solves"] += report.lp_solves
        report.chosen_rx = np.array(rx_vec, dtype=float)
        if report.feasible and report.objective_w < state["best_val"]:
            state["best"], state["best_val"] = report, report.objective_w
        return report

    leak = _clamped_gains(channels.h_ae, precoders.info)
    no_leakage = channels.num_eves == 0 or (regime == "known_ecsi"
                                            and not np.any(leak > 0.0))
    if no_leakage:
        report = solve_at(np.zeros(num_bobs))
        report.lp_solves = state["solves"]
        report.search_stage = "rx_zero"
        return report

    def f_common(rx: float) -> float:
        report = solve_at(np.full(num_bobs, rx))
        return report.objective_w if report.feasible else np.inf

    grid = np.linspace(opts.rx_max / opts.grid_points, opts.rx_max, opts.grid_points)
    values = np.array([f_common(rx) for rx in grid])
    stage = "common"
    if np.isfinite(values).any():
        best_idx = int(np.argmin(values))
        lo = grid[best_idx - 1] if best_idx > 0 else grid[0] * 1e-3
        hi = grid[best_idx + 1] if best_idx + 1 < grid.size else grid[-1]
        _golden_section(f_common, float(lo), float(hi), opts.golden_tol)

        if opts.per_bob and num_bobs > 1:
            stage = "per_bob"
            rx_vec = state["best"].chosen_rx.copy()
            for _ in range(opts.max_passes):
                pass_start = state["best_val"]
                for k in range(num_bobs):
                    def f_coord(rx_k: float, k=k) -> float:
                        trial = rx_vec.copy()
                        trial[k] = rx_k
                        report = solve_at(trial)
                        return report.objective_w if report.feasible else np.inf
                    _golden_section(f_coord, grid[0] * 1e-3, opts.rx_max,
                                    opts.golden_tol)
                    rx_vec = state["best"].chosen_rx.copy()
                if pass_start - state["best_val"] < opts.improve_rtol * pass_start:
                    break

    if state["best"] is None:
        return SolveReport(status="infeasible", lp_solves=state["solves"],
                           searched_points=grid.size, search_stage=stage)
    report = state["best"]
    report.lp_solves = state["solves"]
    report.searched_points = grid.size
    report.search_stage = stage
    return report
