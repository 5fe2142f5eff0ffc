"""Independent cross-checks of the allocation pipeline.

Three suites that avoid the production solve path wherever possible:

  * a single-receiver closed form (the one case with a pencil-and-paper
    optimum) checked against the LP solver;
  * dense grid enumeration of small random instances versus the solver;
  * the algebraic tie between a correlated eavesdropper's nulling and the
    anchor receiver's beamforming loss, checked on raw vectors.

The command line exposes them as `secjam oracle`; the test suite reuses them.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .allocation import build_lp_known_ecsi, lp_grid_oracle, solve_lp
from .channel import complex_normal, realize_channels
from .config import PhysicalConstants, PowerLimits, TopologyConfig
from .metrics import SecrecySpec
from .precoding import build_cfj_precoders, build_precoders, zf_mrc_precoder


@dataclass
class OracleCheck:
    name: str
    passed: bool
    detail: str


def closed_form_single_bob(num_instances: int = 20, seed: int = 7) -> list:
    """Single receiver, no eavesdroppers: the optimum spends
    (2^(R + Rx) - 1) * N_0 / |h v|^2 on information and nothing else."""
    rng = np.random.default_rng(seed)
    constants = PhysicalConstants()
    topology = TopologyConfig(num_bobs=1, num_eves=0, num_tx_antennas=4)
    limits = PowerLimits(alice_max_w=10.0, bob_max_w=0.01)
    checks = []
    for trial in range(num_instances):
        channels = realize_channels(topology, constants,
                                    np.random.SeedSequence(seed, spawn_key=(trial,)))
        precoders = build_cfj_precoders(channels)
        rate = float(rng.uniform(0.5, 6.0))
        rx = float(rng.uniform(0.0, 3.0))
        spec = SecrecySpec.uniform(1, rate, rx=rx)
        report = solve_lp(build_lp_known_ecsi(channels, precoders, spec, limits))
        gain = np.abs(channels.h_ab[0] @ precoders.info[0]) ** 2
        expected = (2.0 ** (rate + rx) - 1.0) * constants.noise_power_w / gain
        ok = (report.feasible
              and abs(report.objective_w - expected) <= 1e-9 * expected
              and float(report.allocation.txfj_w.sum()) == 0.0
              and float(report.allocation.rxfj_w.sum()) == 0.0)
        rel = (abs(report.objective_w - expected) / expected
               if report.feasible else float("inf"))
        checks.append(OracleCheck(
            name=f"closed_form[{trial}] R={rate:.2f} Rx={rx:.2f}",
            passed=ok, detail=f"relative error {rel:.3e}"))
    return checks


def grid_versus_solver(num_instances: int = 50, seed: int = 11,
                       resolution: int = 41) -> list:
    """Small random instances (at most 4 power variables) cross-checked two
    ways against dense grid enumeration:

      * soundness: no point of the plain grid may beat the solver's optimum
        (a lower grid objective would disprove optimality outright);
      * agreement: once the solver's own point is spliced into the grid axes,
        the enumeration must settle on the same objective — this both runs the
        point through the oracle's independent feasibility evaluation and
        confirms nothing on the grid improves on it.

    The plain-grid best can sit far above the optimum when the feasible set is
    a thin sliver between the secrecy rows (no lattice point lands inside), so
    only the spliced grid supports a two-sided comparison.
    """
    rng = np.random.default_rng(seed)
    constants = PhysicalConstants()
    checks = []
    for trial in range(num_instances):
        n_ant = int(rng.integers(2, 4))            # 2 or 3 antennas
        scheme = "cfj" if rng.uniform() < 0.7 else "txfj_only"
        topology = TopologyConfig(num_bobs=1, num_eves=1, num_tx_antennas=n_ant,
                                  cell_radius_m=20.0, si_residual=1e-8)
        channels = realize_channels(topology, constants,
                                    np.random.SeedSequence(seed, spawn_key=(trial,)))
        precoders = build_precoders(channels, scheme)
        spec = SecrecySpec.uniform(1, float(rng.uniform(0.5, 2.0)),
                                   rx=float(rng.uniform(0.5, 2.0)))
        limits = PowerLimits(alice_max_w=0.25, bob_max_w=0.01)
        lp = build_lp_known_ecsi(channels, precoders, spec, limits)
        report = solve_lp(lp)
        plain = lp_grid_oracle(lp, resolution=resolution)
        name = f"grid[{trial}] {scheme} n={lp.num_vars}"
        if not report.feasible:
            checks.append(OracleCheck(
                name=name, passed=not plain.feasible,
                detail="solver infeasible; oracle agrees" if not plain.feasible
                else "solver infeasible but grid found a point"))
            continue
        scale = max(1.0, abs(report.objective_w))
        sound = (not plain.feasible
                 or plain.objective_w - report.objective_w >= -1e-6 * scale)
        spliced = lp_grid_oracle(lp, resolution=resolution,
                                 include_point=report.x)
        if not spliced.feasible:
            checks.append(OracleCheck(
                name=name, passed=False,
                detail="solver point rejected by grid feasibility check"))
            continue
        gap = spliced.objective_w - report.objective_w
        ok = sound and abs(gap) <= 1e-6 * scale
        plain_part = (f"plain-grid gap {plain.objective_w - report.objective_w:.3e} W"
                      if plain.feasible else "plain grid empty")
        checks.append(OracleCheck(
            name=name, passed=ok,
            detail=f"spliced gap {gap:.3e} W; {plain_part}"))
    return checks


def correlation_identity(num_triples: int = 100, seed: int = 3,
                         n_ant: int = 8) -> list:
    """Nulling a correlated eavesdropper forces the anchor receiver's gain
    onto the fresh-fading component: g_ab . v = -sqrt(1 - rho^2)/rho g_ae . v
    whenever h_ae . v = 0 and rho > 0."""
    rng = np.random.default_rng(seed)
    rho_grid = np.arange(0.1, 0.95, 0.1)
    checks = []
    for trial in range(num_triples):
        rho = float(rho_grid[trial % rho_grid.size])
        g_ab = complex_normal(rng, n_ant)
        g_ae = complex_normal(rng, n_ant)
        h_ae = rho * g_ab + np.sqrt(1.0 - rho ** 2) * g_ae   # scale factor drops out
        v = zf_mrc_precoder(g_ab, h_ae[None, :])
        residual = abs(g_ab @ v + (np.sqrt(1.0 - rho ** 2) / rho) * (g_ae @ v))
        bound = 1e-10 * float(np.linalg.norm(v))
        checks.append(OracleCheck(
            name=f"identity[{trial}] rho={rho:.1f}",
            passed=bool(residual < bound),
            detail=f"residual {residual:.3e} vs bound {bound:.3e}"))
    return checks


def run_all(num_instances: int = 20) -> list:
    checks = []
    checks += closed_form_single_bob(num_instances=num_instances)
    checks += grid_versus_solver(num_instances=max(num_instances, 50))
    checks += correlation_identity(num_triples=100)
    return checks
