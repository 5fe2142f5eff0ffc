"""Network geometry and channel realization sampling.

Every link combines a deterministic distance-dependent attenuation with
Rayleigh small-scale fading:

    h_ij = sqrt(D_ij) * g_ij,        g_ij ~ CN(0, I),

where the attenuation follows a cubic free-space law

    D_ij = G * (c / (4 * pi * f * d_ij))**3

with combined antenna gain G, carrier frequency f, and distance d_ij. An
eavesdropper parked close to a receiver sees a channel correlated with his:

    h_AE = sqrt(D_AE) * (rho * g_AB + sqrt(1 - rho^2) * g_AE),

with g_AE independent of the anchor's g_AB.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from numpy.random import Generator

from .config import PhysicalConstants, TopologyConfig

_SQRT_HALF = np.sqrt(0.5)
_MAX_REJECTION_TRIES = 100_000


def as_generator(seed) -> Generator:
    """Pass through numpy Generators, otherwise build one from a seed."""
    if isinstance(seed, Generator):
        return seed
    return np.random.default_rng(seed)


def complex_normal(rng: Generator, shape) -> np.ndarray:
    """Draw CN(0, 1) entries (unit variance split evenly across re/im)."""
    re = rng.standard_normal(shape)
    im = rng.standard_normal(shape)
    return _SQRT_HALF * (re + 1j * im)


def friis_path_loss(distance_m, constants: PhysicalConstants):
    """Cubic free-space attenuation factor at the given distance(s) in meters."""
    d = np.asarray(distance_m, dtype=float)
    if np.any(d <= 0.0):
        raise ValueError("distance must be positive")
    wavelength_term = constants.speed_of_light / (4.0 * np.pi * constants.carrier_frequency_hz * d)
    out = constants.antenna_gain * wavelength_term ** 3
    if np.ndim(distance_m) == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class NodePositions:
    """Planar coordinates of every node; Alice sits at the origin by default.

    eve_anchor[i] is the index of the Bob Eve i was dropped next to, or -1
    when she was placed independently.
    """

    alice: np.ndarray
    bobs: np.ndarray
    eves: np.ndarray
    eve_anchor: np.ndarray

    def bob_distances(self) -> np.ndarray:
        return np.linalg.norm(self.bobs - self.alice, axis=1)

    def eve_distances(self) -> np.ndarray:
        if len(self.eves) == 0:
            return np.zeros(0)
        return np.linalg.norm(self.eves - self.alice, axis=1)


def _sample_annulus(rng: Generator, n: int, r_min: float, r_max: float,
                    center: np.ndarray) -> np.ndarray:
    """Area-uniform points with radius in [r_min, r_max] around center."""
    u = rng.uniform(size=n)
    radii = np.sqrt(r_min ** 2 + u * (r_max ** 2 - r_min ** 2))
    angles = rng.uniform(0.0, 2.0 * np.pi, size=n)
    return center + np.column_stack((radii * np.cos(angles), radii * np.sin(angles)))


def _sample_near_bob(rng: Generator, anchor_pos: np.ndarray,
                     config: TopologyConfig, alice: np.ndarray) -> np.ndarray:
    """One annulus point around a Bob, rejected until it also lies in the cell."""
    for _ in range(_MAX_REJECTION_TRIES):
        point = _sample_annulus(rng, 1, config.eve_ring_min_m, config.eve_ring_max_m,
                                anchor_pos)[0]
        dist = float(np.linalg.norm(point - alice))
        if config.min_alice_distance_m <= dist <= config.cell_radius_m:
            return point
    raise RuntimeError("annulus placement rejection did not terminate")


def sample_topology(config: TopologyConfig, rng) -> NodePositions:
    """Drop Alice at the origin and scatter Bobs and Eves per the config.

    Bobs (and independently placed Eves) are area-uniform over the cell disc,
    excluding a small guard disc around Alice. Near-Bob Eves pick an anchor
    Bob uniformly at random and land area-uniformly in the configured ring
    around him, re-drawn until they also respect the cell boundary and the
    guard disc.
    """
    rng = as_generator(rng)
    alice = np.zeros(2)
    bobs = _sample_annulus(rng, config.num_bobs, config.min_alice_distance_m,
                           config.cell_radius_m, alice)
    if config.num_eves == 0:
        return NodePositions(alice=alice, bobs=bobs, eves=np.zeros((0, 2)),
                             eve_anchor=np.zeros(0, dtype=int))
    if config.eve_placement == "near_bob":
        anchors = rng.integers(0, config.num_bobs, size=config.num_eves)
        eves = np.array([_sample_near_bob(rng, bobs[a], config, alice) for a in anchors])
    else:
        anchors = np.full(config.num_eves, -1, dtype=int)
        eves = _sample_annulus(rng, config.num_eves, config.min_alice_distance_m,
                               config.cell_radius_m, alice)
    return NodePositions(alice=alice, bobs=bobs, eves=eves, eve_anchor=anchors)


def correlated_eve_channel(g_ab_anchor: np.ndarray, path_loss: float, rho: float,
                           rng) -> np.ndarray:
    """Eavesdropper channel vector mixing the anchor's fading with fresh fading."""
    if not 0.0 <= rho <= 1.0:
        raise ValueError("correlation must lie in [0, 1]")
    rng = as_generator(rng)
    g_fresh = complex_normal(rng, g_ab_anchor.shape)
    mixed = rho * g_ab_anchor + np.sqrt(1.0 - rho ** 2) * g_fresh
    return np.sqrt(path_loss) * mixed


@dataclass
class ChannelSet:
    """One realization of every channel in the cell.

    Alice-side channels are row vectors of length num_tx_antennas; receiver
    cross-links are scalars. h_bb[l, k] is the channel from Bob l's jamming
    antenna to Bob k; its diagonal holds the self-loop coefficient (not
    distance-faded). The small-scale Bob vectors g_ab are retained because
    statistical eavesdropper models condition on them.
    """

    h_ab: np.ndarray        # (K, N_A) complex
    h_ae: np.ndarray        # (L, N_A) complex
    h_bb: np.ndarray        # (K, K) complex
    h_be: np.ndarray        # (K, L) complex
    g_ab: np.ndarray        # (K, N_A) complex
    pl_ab: np.ndarray       # (K,) attenuation factors
    pl_ae: np.ndarray       # (L,)
    pl_bb: np.ndarray       # (K, K), unit diagonal by convention
    pl_be: np.ndarray       # (K, L)
    positions: NodePositions
    topology: TopologyConfig
    constants: PhysicalConstants

    @property
    def num_bobs(self) -> int:
        return self.h_ab.shape[0]

    @property
    def num_eves(self) -> int:
        return self.h_ae.shape[0]

    @property
    def num_tx_antennas(self) -> int:
        return self.h_ab.shape[1]


def assemble_channel_set(positions: NodePositions, config: TopologyConfig,
                         constants: PhysicalConstants, rng) -> ChannelSet:
    """Draw small-scale fading for every link implied by the node positions."""
    rng = as_generator(rng)
    num_bobs, num_eves = len(positions.bobs), len(positions.eves)
    n_ant = config.num_tx_antennas

    pl_ab = friis_path_loss(positions.bob_distances(), constants)
    g_ab = complex_normal(rng, (num_bobs, n_ant))
    h_ab = np.sqrt(pl_ab)[:, None] * g_ab

    pl_ae = (friis_path_loss(positions.eve_distances(), constants)
             if num_eves else np.zeros(0))
    h_ae = np.zeros((num_eves, n_ant), dtype=complex)
    for i in range(num_eves):
        anchor = int(positions.eve_anchor[i])
        if anchor >= 0:
            h_ae[i] = correlated_eve_channel(g_ab[anchor], pl_ae[i],
                                             config.correlation, rng)
        else:
            h_ae[i] = np.sqrt(pl_ae[i]) * complex_normal(rng, n_ant)

    # Inter-receiver links are reciprocal: one fading draw per unordered pair.
    pl_bb = np.ones((num_bobs, num_bobs))
    h_bb = np.full((num_bobs, num_bobs), config.si_channel_gain, dtype=complex)
    for l in range(num_bobs):
        for k in range(l + 1, num_bobs):
            dist = float(np.linalg.norm(positions.bobs[l] - positions.bobs[k]))
            pl = friis_path_loss(dist, constants)
            coeff = np.sqrt(pl) * complex_normal(rng, ())
            pl_bb[l, k] = pl_bb[k, l] = pl
            h_bb[l, k] = h_bb[k, l] = coeff

    pl_be = np.zeros((num_bobs, num_eves))
    h_be = np.zeros((num_bobs, num_eves), dtype=complex)
    for k in range(num_bobs):
        for i in range(num_eves):
            dist = float(np.linalg.norm(positions.bobs[k] - positions.eves[i]))
            pl_be[k, i] = friis_path_loss(dist, constants)
            h_be[k, i] = np.sqrt(pl_be[k, i]) * complex_normal(rng, ())

    return ChannelSet(h_ab=h_ab, h_ae=h_ae, h_bb=h_bb, h_be=h_be, g_ab=g_ab,
                      pl_ab=pl_ab, pl_ae=pl_ae, pl_bb=pl_bb, pl_be=pl_be,
                      positions=positions, topology=config, constants=constants)


def realize_channels(config: TopologyConfig, constants: PhysicalConstants,
                     seed) -> ChannelSet:
    """Sample one full realization (geometry plus fading) from a single seed."""
    rng = as_generator(seed)
    positions = sample_topology(config, rng)
    return assemble_channel_set(positions, config, constants, rng)


# ---------------------------------------------------------------------------
# Serialization: complex arrays travel as nested [re, im] pairs.

def _encode_complex(a: np.ndarray):
    return np.stack((a.real, a.imag), axis=-1).tolist()


def _decode_complex(data) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.size == 0:
        # tolist() flattened an empty array; callers reshape to the true dims.
        return np.zeros(0, dtype=complex)
    return arr[..., 0] + 1j * arr[..., 1]


def channel_set_to_dict(channels: ChannelSet) -> dict:
    """JSON-ready dictionary capturing the realization and its generating config."""
    topo = channels.topology
    consts = channels.constants
    return {
        "schema": "secjam-channels-v1",
        "topology": {
            "num_tx_antennas": topo.num_tx_antennas,
            "num_bobs": topo.num_bobs,
            "num_eves": topo.num_eves,
            "cell_radius_m": topo.cell_radius_m,
            "eve_placement": topo.eve_placement,
            "eve_ring_min_m": topo.eve_ring_min_m,
            "eve_ring_max_m": topo.eve_ring_max_m,
            "correlation": topo.correlation,
            "si_residual": topo.si_residual,
            "si_channel_gain": [topo.si_channel_gain.real, topo.si_channel_gain.imag],
            "min_alice_distance_m": topo.min_alice_distance_m,
        },
        "constants": {
            "antenna_gain": consts.antenna_gain,
            "carrier_frequency_hz": consts.carrier_frequency_hz,
            "speed_of_light": consts.speed_of_light,
            "bandwidth_hz": consts.bandwidth_hz,
            "noise_power_w": consts.noise_power_w,
        },
        "positions": {
            "alice": channels.positions.alice.tolist(),
            "bobs": channels.positions.bobs.tolist(),
            "eves": channels.positions.eves.tolist(),
            "eve_anchor": channels.positions.eve_anchor.tolist(),
        },
        "h_ab": _encode_complex(channels.h_ab),
        "h_ae": _encode_complex(channels.h_ae),
        "h_bb": _encode_complex(channels.h_bb),
        "h_be": _encode_complex(channels.h_be),
        "g_ab": _encode_complex(channels.g_ab),
        "pl_ab": channels.pl_ab.tolist(),
        "pl_ae": channels.pl_ae.tolist(),
        "pl_bb": channels.pl_bb.tolist(),
        "pl_be": channels.pl_be.tolist(),
    }


def channel_set_from_dict(data: dict) -> ChannelSet:
    """Inverse of channel_set_to_dict."""
    topo_d = dict(data["topology"])
    si = topo_d.pop("si_channel_gain")
    topology = TopologyConfig(si_channel_gain=complex(si[0], si[1]), **topo_d)
    constants = PhysicalConstants(**data["constants"])
    pos_d = data["positions"]
    num_eves = topology.num_eves
    positions = NodePositions(
        alice=np.asarray(pos_d["alice"], dtype=float),
        bobs=np.asarray(pos_d["bobs"], dtype=float),
        eves=np.asarray(pos_d["eves"], dtype=float).reshape(num_eves, 2),
        eve_anchor=np.asarray(pos_d["eve_anchor"], dtype=int),
    )
    n_ant = topology.num_tx_antennas
    return ChannelSet(
        h_ab=_decode_complex(data["h_ab"]),
        h_ae=_decode_complex(data["h_ae"]).reshape(num_eves, n_ant),
        h_bb=_decode_complex(data["h_bb"]),
        h_be=_decode_complex(data["h_be"]).reshape(topology.num_bobs, num_eves),
        g_ab=_decode_complex(data["g_ab"]),
        pl_ab=np.asarray(data["pl_ab"], dtype=float),
        pl_ae=np.asarray(data["pl_ae"], dtype=float),
        pl_bb=np.asarray(data["pl_bb"], dtype=float),
        pl_be=np.asarray(data["pl_be"], dtype=float).reshape(topology.num_bobs, num_eves),
        positions=positions, topology=topology, constants=constants,
    )
