"""Serving a subset of receivers per block while treating the rest as insiders.

With K receivers but only T served per block, the closest T are picked, each
receiver is served a T/K fraction of the time, and served rates are scaled by
K/T so the long-run average still meets every receiver's target. Idle
receivers know their own channels, so they are modeled as eavesdroppers with
known CSI for the block; they stay silent (no receive jamming, no
self-interference) while idle.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .channel import ChannelSet, NodePositions, realize_channels
from .config import PhysicalConstants, PowerLimits, TopologyConfig
from .metrics import SecrecySpec, achievable_secrecy_rate
from .allocation import (LinearProgram, LineSearchOptions, SolveReport,
                         build_lp_known_ecsi, line_search_randomization)
from .precoding import build_cfj_precoders


@dataclass
class ScheduleDecision:
    """Which receivers a block serves, and the rate bookkeeping that implies."""

    active: np.ndarray              # sorted indices of served Bobs, length T
    idle: np.ndarray                # the complement, sorted
    service_probability: np.ndarray  # (K,), T/K for every Bob
    scaled_rates: np.ndarray | None  # (K,), (K/T) * R_k when rates were given

    @property
    def num_active(self) -> int:
        return self.active.size


def select_closest_bobs(positions: NodePositions, num_active: int,
                        rates=None) -> ScheduleDecision:
    """Serve the num_active Bobs nearest the access point (ties break toward
    the lower index). Service probability is uniform because placements are
    exchangeable across blocks."""
    num_bobs = len(positions.bobs)
    if not 1 <= num_active <= num_bobs:
        raise ValueError("num_active must lie in [1, num_bobs]")
    order = np.argsort(positions.bob_distances(), kind="stable")
    active = np.sort(order[:num_active])
    idle = np.sort(order[num_active:])
    prob = np.full(num_bobs, num_active / num_bobs)
    scaled = None
    if rates is not None:
        scaled = np.asarray(rates, dtype=float) * (num_bobs / num_active)
    return ScheduleDecision(active=active, idle=idle, service_probability=prob,
                            scaled_rates=scaled)


def reduce_to_schedule(channels: ChannelSet, decision: ScheduleDecision) -> ChannelSet:
    """Re-cast a realization with idle Bobs appended to the eavesdropper list.

    Serving everyone returns the input object unchanged, so a T = K schedule
    is byte-for-byte the unscheduled problem. Idle Bobs keep their known
    channel vectors; their links from active Bobs reuse the inter-receiver
    channels already drawn. Anchor bookkeeping is remapped into the reduced
    Bob indexing (idle anchors become -1); the reduced set is meant for
    known-CSI solving, where anchors are not consulted.
    """
    if decision.num_active == channels.num_bobs:
        return channels
    act = decision.active
    idle = decision.idle
    pos = channels.positions

    anchor_map = {int(old): new for new, old in enumerate(act)}
    remapped = np.array([anchor_map.get(int(a), -1) for a in pos.eve_anchor], dtype=int)
    positions = NodePositions(
        alice=pos.alice,
        bobs=pos.bobs[act],
        eves=np.vstack([pos.eves, pos.bobs[idle]]) if pos.eves.size else pos.bobs[idle],
        eve_anchor=np.concatenate([remapped, np.full(idle.size, -1, dtype=int)]),
    )
    topology = replace(channels.topology, num_bobs=int(decision.num_active),
                       num_eves=int(channels.num_eves + idle.size))
    return ChannelSet(
        h_ab=channels.h_ab[act],
        h_ae=np.vstack([channels.h_ae, channels.h_ab[idle]]),
        h_bb=channels.h_bb[np.ix_(act, act)],
        h_be=np.hstack([channels.h_be[act], channels.h_bb[np.ix_(act, idle)]]),
        g_ab=channels.g_ab[act],
        pl_ab=channels.pl_ab[act],
        pl_ae=np.concatenate([channels.pl_ae, channels.pl_ab[idle]]),
        pl_bb=channels.pl_bb[np.ix_(act, act)],
        pl_be=np.hstack([channels.pl_be[act], channels.pl_bb[np.ix_(act, idle)]]),
        positions=positions, topology=topology, constants=channels.constants,
    )


def _reduced_spec(spec: SecrecySpec, decision: ScheduleDecision) -> SecrecySpec:
    act = decision.active
    scaled = decision.scaled_rates
    if scaled is None:
        scaled = np.asarray(spec.secrecy_rates, dtype=float) * (
            decision.service_probability.size / decision.num_active)
    take = lambda a: None if a is None else np.asarray(a)[act]
    return SecrecySpec(secrecy_rates=np.asarray(scaled)[act],
                       randomization_rates=take(spec.randomization_rates),
                       outage_budgets=take(spec.outage_budgets),
                       correlations=take(spec.correlations))


def build_scheduled_problem(channels: ChannelSet, decision: ScheduleDecision,
                            spec: SecrecySpec, limits: PowerLimits,
                            noise_w: float | None = None,
                            alpha: float | None = None) -> LinearProgram:
    """Known-CSI allocation LP for one scheduled block: T Bob rows at the
    scaled rates and T * (L + K - T) leakage rows."""
    reduced = reduce_to_schedule(channels, decision)
    precoders = build_cfj_precoders(reduced)
    return build_lp_known_ecsi(reduced, precoders, _reduced_spec(spec, decision),
                               limits, noise_w=noise_w, alpha=alpha)


def long_run_rate(credited_rates: np.ndarray) -> np.ndarray:
    """Per-Bob average of the credited secrecy rates over all blocks."""
    credited = np.atleast_2d(np.asarray(credited_rates, dtype=float))
    return credited.mean(axis=0)


@dataclass
class BlockOutcome:
    block: int
    active: np.ndarray
    report: SolveReport
    credited_rates: np.ndarray       # (K,), zero for idle Bobs and failed blocks
    min_secrecy_rate: float | None


@dataclass
class ScheduleRunResult:
    outcomes: list
    credited_rates: np.ndarray       # (B, K)
    average_rates: np.ndarray        # (K,)
    feasible_blocks: int


def run_scheduled_blocks(topology: TopologyConfig, constants: PhysicalConstants,
                         spec: SecrecySpec, limits: PowerLimits, num_active: int,
                         num_blocks: int, master_seed: int,
                         alpha: float | None = None,
                         options: LineSearchOptions | None = None,
                         seed_group: int = 0) -> ScheduleRunResult:
    """Simulate i.i.d. blocks under the closest-T policy with CFJ transmission.

    Each block re-draws the whole topology, schedules, solves the scaled
    known-CSI problem (randomization rates searched per block), and credits
    every served Bob the scaled target rate when the block is feasible.
    Block b uses the seed stream (seed_group, b) of master_seed, so runs with
    different T values see identical channels.
    """
    num_bobs = topology.num_bobs
    credited = np.zeros((num_blocks, num_bobs))
    outcomes = []
    feasible_blocks = 0
    for b in range(num_blocks):
        seed = np.random.SeedSequence(master_seed, spawn_key=(seed_group, b))
        channels = realize_channels(topology, constants, seed)
        decision = select_closest_bobs(channels.positions, num_active,
                                       rates=spec.secrecy_rates)
        reduced = reduce_to_schedule(channels, decision)
        precoders = build_cfj_precoders(reduced)
        report = line_search_randomization(reduced, precoders,
                                           _reduced_spec(spec, decision), limits,
                                           regime="known_ecsi", alpha=alpha,
                                           options=options)
        min_rate = None
        if report.feasible:
            feasible_blocks += 1
            credited[b, decision.active] = decision.scaled_rates[decision.active]
            min_rate = min(
                achievable_secrecy_rate(t, reduced, precoders, report.allocation,
                                        alpha=alpha)
                for t in range(decision.num_active))
        outcomes.append(BlockOutcome(block=b, active=decision.active, report=report,
                                     credited_rates=credited[b].copy(),
                                     min_secrecy_rate=min_rate))
    return ScheduleRunResult(outcomes=outcomes, credited_rates=credited,
                             average_rates=long_run_rate(credited),
                             feasible_blocks=feasible_blocks)
