"""Secrecy figures of merit: SINRs, wiretap rates, outage bounds, audits.

Wiretap coding splits each message's rate budget into the secrecy rate R_k
delivered to Bob k and a randomization rate Rx_k spent confusing the
eavesdroppers. Reliable secure decoding needs the Bob link to support
R_k + Rx_k while every eavesdropper observes at most Rx_k:

    log2(1 + SINR_Bob_k)  >= R_k + Rx_k
    log2(1 + SINR_Eve_ki) <= Rx_k        for every Eve i.

When eavesdropper channels are only known statistically, the leakage
condition is replaced by a Markov-inequality bound on the outage
probability of the event {log2(1 + SINR_Eve_ki) >= Rx_k}.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .channel import (ChannelSet, as_generator, complex_normal, friis_path_loss,
                      _sample_annulus)
from .precoding import PrecoderSet


@dataclass
class SecrecySpec:
    """Per-Bob targets: secrecy rates, randomization rates, outage budgets,
    and the assumed Bob-Eve correlation used for statistical modeling.

    randomization_rates may be None while the rates are still being searched.
    """

    secrecy_rates: np.ndarray
    randomization_rates: np.ndarray | None = None
    outage_budgets: np.ndarray | None = None
    correlations: np.ndarray | None = None

    @classmethod
    def uniform(cls, num_bobs: int, rate: float, rx: float | None = None,
                eps: float | None = None, rho: float | None = None) -> "SecrecySpec":
        return cls(
            secrecy_rates=np.full(num_bobs, float(rate)),
            randomization_rates=None if rx is None else np.full(num_bobs, float(rx)),
            outage_budgets=None if eps is None else np.full(num_bobs, float(eps)),
            correlations=None if rho is None else np.full(num_bobs, float(rho)),
        )

    def with_randomization(self, rx) -> "SecrecySpec":
        rx = np.broadcast_to(np.asarray(rx, dtype=float),
                             self.secrecy_rates.shape).copy()
        return replace(self, randomization_rates=rx)


@dataclass
class PowerAllocation:
    """Transmit powers in watts: per-Bob information, per-direction transmit
    jamming, per-Bob receive jamming."""

    info_w: np.ndarray
    txfj_w: np.ndarray
    rxfj_w: np.ndarray
    objective_w: float
    feasible: bool

    @property
    def total_w(self) -> float:
        return float(self.info_w.sum() + self.txfj_w.sum() + self.rxfj_w.sum())


@dataclass
class EveStatistics:
    """Second-order eavesdropper model used when their channels are unknown.

    covariances[i] is the assumed covariance of Eve i's channel vector
    (conditioned on her anchor's known fading); bob_eve_gain_mean[k, i] is
    the expected squared magnitude of the Bob k to Eve i jamming link.
    """

    covariances: np.ndarray      # (L, N_A, N_A) complex Hermitian PSD
    bob_eve_gain_mean: np.ndarray  # (K, L) nonnegative


def mutual_information(sinr: float) -> float:
    """Spectral efficiency of a Gaussian channel at the given SINR."""
    return float(np.log2(1.0 + sinr))


def sinr_bob(k: int, channels: ChannelSet, precoders: PrecoderSet,
             alloc: PowerAllocation, alpha: float | None = None,
             noise_w: float | None = None) -> float:
    """Post-cancellation SINR at Bob k.

    The numerator is his own information beam; interference is the residual
    of his own jamming after self-interference cancellation (fraction alpha)
    plus the other Bobs' jamming leaking across the cell. Zero-forced
    information beams of other Bobs do not appear.
    """
    if alpha is None:
        alpha = channels.topology.si_residual
    if noise_w is None:
        noise_w = channels.constants.noise_power_w
    signal = alloc.info_w[k] * np.abs(channels.h_ab[k] @ precoders.info[k]) ** 2
    interference = alpha * alloc.rxfj_w[k] * np.abs(channels.h_bb[k, k]) ** 2
    for l in range(channels.num_bobs):
        if l != k:
            interference += alloc.rxfj_w[l] * np.abs(channels.h_bb[l, k]) ** 2
    return float(signal / (interference + noise_w))


def sinr_eve(k: int, i: int, channels: ChannelSet, precoders: PrecoderSet,
             alloc: PowerAllocation, noise_w: float | None = None) -> float:
    """SINR of Eve i when decoding Bob k's message.

    She suffers the other Bobs' information beams, the whole transmit-jamming
    subspace, and every receiver's jamming transmission.
    """
    if noise_w is None:
        noise_w = channels.constants.noise_power_w
    h = channels.h_ae[i]
    signal = alloc.info_w[k] * np.abs(h @ precoders.info[k]) ** 2
    cross_info = sum(alloc.info_w[l] * np.abs(h @ precoders.info[l]) ** 2
                     for l in range(channels.num_bobs) if l != k)
    tx_jam = sum(alloc.txfj_w[m] * np.abs(h @ precoders.txfj[m]) ** 2
                 for m in range(precoders.num_txfj))
    rx_jam = sum(alloc.rxfj_w[l] * np.abs(channels.h_be[l, i]) ** 2
                 for l in range(channels.num_bobs))
    return float(signal / (cross_info + tx_jam + rx_jam + noise_w))


def achievable_secrecy_rate(k: int, channels: ChannelSet, precoders: PrecoderSet,
                            alloc: PowerAllocation, alpha: float | None = None,
                            noise_w: float | None = None) -> float:
    """Bob k's rate minus the best eavesdropper's rate, floored at zero."""
    bob_rate = mutual_information(sinr_bob(k, channels, precoders, alloc,
                                           alpha=alpha, noise_w=noise_w))
    if channels.num_eves == 0:
        return bob_rate
    eve_rate = max(mutual_information(sinr_eve(k, i, channels, precoders, alloc,
                                               noise_w=noise_w))
                   for i in range(channels.num_eves))
    return max(bob_rate - eve_rate, 0.0)


def estimate_eve_covariance(g_ab_anchor: np.ndarray, rho: float,
                            expected_path_loss: float) -> np.ndarray:
    """Assumed covariance of an Eve channel correlated with a known anchor.

    E[h^H h] = E[D] * (rho^2 g^H g + (1 - rho^2) I): a rank-one ridge along
    the anchor's fading direction plus an isotropic remainder. rho = 0 gives
    a scaled identity, rho = 1 the pure rank-one matrix.
    """
    if not 0.0 <= rho <= 1.0:
        raise ValueError("correlation must lie in [0, 1]")
    if expected_path_loss <= 0.0:
        raise ValueError("expected_path_loss must be positive")
    g = np.asarray(g_ab_anchor).ravel()
    ridge = np.outer(g.conj(), g)
    return expected_path_loss * (rho ** 2 * ridge
                                 + (1.0 - rho ** 2) * np.eye(g.size, dtype=complex))


def _annulus_mean_path_loss(center: np.ndarray, alice: np.ndarray, r_min: float,
                            r_max: float, constants, n_r: int = 512,
                            n_theta: int = 64) -> float:
    """Area-weighted quadrature of the attenuation over a ring around `center`.

    Midpoint rule on equal-area shells; the cubic attenuation is steep near
    the inner radius, so the radial resolution has to stay high (512 shells
    keep the relative error near 1e-3 for the default 0.1-1 m ring).
    """
    u = (np.arange(n_r) + 0.5) / n_r
    radii = np.sqrt(r_min ** 2 + u * (r_max ** 2 - r_min ** 2))
    angles = 2.0 * np.pi * (np.arange(n_theta) + 0.5) / n_theta
    px = center[0] + radii[:, None] * np.cos(angles)[None, :]
    py = center[1] + radii[:, None] * np.sin(angles)[None, :]
    dists = np.hypot(px - alice[0], py - alice[1])
    dists = np.maximum(dists, 1e-6)
    return float(np.mean(friis_path_loss(dists, constants)))


def build_eve_statistics(channels: ChannelSet, spec: SecrecySpec,
                         path_loss_mode: str = "last_known") -> EveStatistics:
    """Assemble the statistical eavesdropper model from a realization.

    path_loss_mode "last_known" evaluates expected attenuations at the
    positions of the realization (the defender's most recent fix on each
    Eve); "placement_mean" averages the attenuation over the placement law
    instead (the ring around the anchor for near-Bob Eves).
    """
    if path_loss_mode not in ("last_known", "placement_mean"):
        raise ValueError("path_loss_mode must be 'last_known' or 'placement_mean'")
    topo = channels.topology
    num_bobs, num_eves = channels.num_bobs, channels.num_eves
    n_ant = channels.num_tx_antennas
    rhos = (spec.correlations if spec.correlations is not None
            else np.full(num_bobs, topo.correlation))

    covariances = np.zeros((num_eves, n_ant, n_ant), dtype=complex)
    gain_mean = np.array(channels.pl_be, dtype=float)
    for i in range(num_eves):
        anchor = int(channels.positions.eve_anchor[i])
        expected_pl = float(channels.pl_ae[i])
        if path_loss_mode == "placement_mean" and anchor >= 0:
            expected_pl = _annulus_mean_path_loss(
                channels.positions.bobs[anchor], channels.positions.alice,
                topo.eve_ring_min_m, topo.eve_ring_max_m, channels.constants)
            for k in range(num_bobs):
                gain_mean[k, i] = _annulus_mean_path_loss(
                    channels.positions.bobs[anchor], channels.positions.bobs[k],
                    topo.eve_ring_min_m, topo.eve_ring_max_m, channels.constants)
        if anchor >= 0:
            covariances[i] = estimate_eve_covariance(
                channels.g_ab[anchor], float(rhos[anchor]), expected_pl)
        else:
            covariances[i] = expected_pl * np.eye(n_ant, dtype=complex)
    return EveStatistics(covariances=covariances, bob_eve_gain_mean=gain_mean)


def outage_threshold(eps: float, num_eves: int) -> float:
    """Per-Eve outage cap 1 - (1 - eps)^(1/L) that keeps the probability of
    any of L independent Eves leaking below eps."""
    if not 0.0 < eps < 1.0:
        raise ValueError("outage budget must lie in (0, 1)")
    if num_eves < 1:
        raise ValueError("num_eves must be >= 1")
    return 1.0 - (1.0 - eps) ** (1.0 / num_eves)


def markov_outage_lhs(k: int, i: int, precoders: PrecoderSet,
                      alloc: PowerAllocation, eve_stats: EveStatistics,
                      rx: float, noise_w: float) -> float:
    """Markov bound on Pr{Eve i decodes Bob k's message at rate >= rx}.

    The eavesdropper's SINR is nonnegative, so Markov's inequality bounds the
    outage probability by E[SINR] / (2^rx - 1); with the numerator and the
    interference evaluated against the assumed covariance K_i this is

        P_k v_k^H K_i v_k / [(2^rx - 1) (cross + jam + rxjam + N_0)].

    Feasible allocations keep this below the per-Eve outage share. The value
    is always nonnegative; it understates the exact Markov bound when the
    realized interference fluctuates, but at outage budgets of a few percent
    the remaining margin is orders of magnitude.
    """
    if rx <= 0.0:
        raise ValueError("randomization rate must be positive for the outage bound")
    cov = eve_stats.covariances[i]
    quad = lambda v: float(np.real(v.conj() @ cov @ v))
    grow = 2.0 ** rx - 1.0
    signal = alloc.info_w[k] * quad(precoders.info[k])
    cross = sum(alloc.info_w[l] * quad(precoders.info[l])
                for l in range(len(alloc.info_w)) if l != k)
    tx_jam = sum(alloc.txfj_w[m] * quad(precoders.txfj[m])
                 for m in range(precoders.num_txfj))
    rx_jam = sum(alloc.rxfj_w[l] * eve_stats.bob_eve_gain_mean[l, i]
                 for l in range(len(alloc.rxfj_w)))
    return signal / (grow * (cross + tx_jam + rx_jam + noise_w))


def _redraw_eve_links(channels: ChannelSet, num_draws: int, eve_index: int,
                      rng, redraw: str):
    """Fresh (pl_ae, h_ae, pl_be rows) samples for one Eve.

    redraw "config": new position per the placement law (ring around the
    fixed anchor, or the whole cell) plus fresh fading; "small_scale": fading
    only; "none": the stored realization, replicated.
    """
    topo = channels.topology
    alice = channels.positions.alice
    anchor = int(channels.positions.eve_anchor[eve_index])
    n_ant = channels.num_tx_antennas
    num_bobs = channels.num_bobs

    if redraw == "none":
        h = np.broadcast_to(channels.h_ae[eve_index], (num_draws, n_ant))
        gains_be = np.broadcast_to(
            np.abs(channels.h_be[:, eve_index]) ** 2, (num_draws, num_bobs)).T
        return h, gains_be

    if redraw == "config":
        if anchor >= 0:
            center = channels.positions.bobs[anchor]
            pts = _sample_annulus(rng, num_draws, topo.eve_ring_min_m,
                                  topo.eve_ring_max_m, center)
            dist = np.linalg.norm(pts - alice, axis=1)
            bad = (dist < topo.min_alice_distance_m) | (dist > topo.cell_radius_m)
            while np.any(bad):
                pts[bad] = _sample_annulus(rng, int(bad.sum()), topo.eve_ring_min_m,
                                           topo.eve_ring_max_m, center)
                dist = np.linalg.norm(pts - alice, axis=1)
                bad = (dist < topo.min_alice_distance_m) | (dist > topo.cell_radius_m)
        else:
            pts = _sample_annulus(rng, num_draws, topo.min_alice_distance_m,
                                  topo.cell_radius_m, alice)
    elif redraw == "small_scale":
        pts = np.broadcast_to(channels.positions.eves[eve_index], (num_draws, 2))
    else:
        raise ValueError("redraw must be 'config', 'small_scale', or 'none'")

    pl = friis_path_loss(np.linalg.norm(pts - alice, axis=1), constants=channels.constants)
    fresh = complex_normal(rng, (num_draws, n_ant))
    if anchor >= 0 and topo.correlation > 0.0:
        rho = topo.correlation
        mixed = rho * channels.g_ab[anchor][None, :] + np.sqrt(1.0 - rho ** 2) * fresh
    else:
        mixed = fresh
    h = np.sqrt(pl)[:, None] * mixed

    gains_be = np.zeros((num_bobs, num_draws))
    for k in range(num_bobs):
        d = np.linalg.norm(pts - channels.positions.bobs[k], axis=1)
        d = np.maximum(d, 1e-6)
        pl_be = friis_path_loss(d, constants=channels.constants)
        gains_be[k] = pl_be * np.abs(complex_normal(rng, num_draws)) ** 2
    return h, gains_be


def empirical_outage(k: int, channels: ChannelSet, precoders: PrecoderSet,
                     alloc: PowerAllocation, spec: SecrecySpec, num_draws: int,
                     rng, redraw: str = "small_scale",
                     noise_w: float | None = None) -> float:
    """Monte Carlo estimate of Bob k's leakage outage probability.

    Fraction of fresh Eve channel draws in which at least one Eve's mutual
    information on message k reaches the randomization rate Rx_k. Precoders
    and powers stay fixed; only the eavesdropper links redraw. The default
    "small_scale" redraws fading at the stored positions — the distribution
    the last-known-position covariance model actually describes, and the one
    the outage rows are calibrated against. "config" additionally moves each
    Eve per the placement law; position churn swings the received jamming by
    orders of magnitude, so measurements under it can exceed the outage
    budget and are diagnostics, not a bound check.
    """
    if channels.num_eves == 0:
        return 0.0
    if spec.randomization_rates is None:
        raise ValueError("spec.randomization_rates must be set")
    rng = as_generator(rng)
    if noise_w is None:
        noise_w = channels.constants.noise_power_w
    rx = float(spec.randomization_rates[k])
    sinr_threshold = 2.0 ** rx - 1.0

    directions = np.vstack([precoders.info, precoders.txfj])  # (K + M, N_A)
    powers = np.concatenate([alloc.info_w, alloc.txfj_w])
    outage = np.zeros(num_draws, dtype=bool)
    for i in range(channels.num_eves):
        h, gains_be = _redraw_eve_links(channels, num_draws, i, rng, redraw)
        beam_gains = np.abs(h @ directions.T) ** 2          # (draws, K + M)
        received = beam_gains * powers[None, :]
        signal = received[:, k]
        interference = received.sum(axis=1) - signal
        interference += alloc.rxfj_w @ gains_be
        outage |= signal >= sinr_threshold * (interference + noise_w)
    return float(np.mean(outage))


@dataclass
class AuditResult:
    passed: bool
    failures: list = field(default_factory=list)


def audit_known_ecsi(channels: ChannelSet, precoders: PrecoderSet,
                     alloc: PowerAllocation, spec: SecrecySpec, limits,
                     alpha: float | None = None, noise_w: float | None = None,
                     tol: float = 1e-9) -> AuditResult:
    """Verify a solution against the wiretap-coding conditions and budgets."""
    failures = []
    rx = spec.randomization_rates
    for k in range(channels.num_bobs):
        bob_info = mutual_information(sinr_bob(k, channels, precoders, alloc,
                                               alpha=alpha, noise_w=noise_w))
        need = float(spec.secrecy_rates[k] + rx[k])
        if bob_info < need - tol:
            failures.append(f"bob {k}: link rate {bob_info:.6f} < {need:.6f}")
        for i in range(channels.num_eves):
            leak = mutual_information(sinr_eve(k, i, channels, precoders, alloc,
                                               noise_w=noise_w))
            if leak > rx[k] + tol:
                failures.append(f"eve {i} on message {k}: leak {leak:.6f} > {rx[k]:.6f}")
    _audit_budgets(alloc, limits, channels.num_bobs, failures, tol)
    return AuditResult(passed=not failures, failures=failures)


def audit_unknown_ecsi(channels: ChannelSet, precoders: PrecoderSet,
                       alloc: PowerAllocation, spec: SecrecySpec,
                       eve_stats: EveStatistics, limits,
                       alpha: float | None = None, noise_w: float | None = None,
                       tol: float = 1e-9) -> AuditResult:
    """Verify Bob-side rates, budgets, and the Markov outage rows."""
    failures = []
    if noise_w is None:
        noise_w = channels.constants.noise_power_w
    rx = spec.randomization_rates
    for k in range(channels.num_bobs):
        bob_info = mutual_information(sinr_bob(k, channels, precoders, alloc,
                                               alpha=alpha, noise_w=noise_w))
        need = float(spec.secrecy_rates[k] + rx[k])
        if bob_info < need - tol:
            failures.append(f"bob {k}: link rate {bob_info:.6f} < {need:.6f}")
        if channels.num_eves:
            cap = outage_threshold(float(spec.outage_budgets[k]), channels.num_eves)
            for i in range(channels.num_eves):
                lhs = markov_outage_lhs(k, i, precoders, alloc, eve_stats,
                                        float(rx[k]), noise_w)
                if lhs > cap + tol:
                    failures.append(
                        f"outage bound on (bob {k}, eve {i}): {lhs:.6g} > {cap:.6g}")
    _audit_budgets(alloc, limits, channels.num_bobs, failures, tol)
    return AuditResult(passed=not failures, failures=failures)


def _audit_budgets(alloc: PowerAllocation, limits, num_bobs: int,
                   failures: list, tol: float) -> None:
    if np.any(alloc.info_w < -tol) or np.any(alloc.txfj_w < -tol) or np.any(alloc.rxfj_w < -tol):
        failures.append("negative power in allocation")
    alice_spend = float(alloc.info_w.sum() + alloc.txfj_w.sum())
    if alice_spend > limits.alice_max_w * (1.0 + tol) + tol:
        failures.append(f"alice budget exceeded: {alice_spend:.6g} > {limits.alice_max_w:.6g}")
    caps = limits.bob_caps(num_bobs)
    for k in range(num_bobs):
        if alloc.rxfj_w[k] > caps[k] * (1.0 + tol) + tol:
            failures.append(f"bob {k} jamming cap exceeded")
