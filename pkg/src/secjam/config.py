"""System constants, network topology description, and unit helpers.

Powers cross the API boundary in dBm (the usual link-budget convention) and
are converted to watts exactly once, here. Everything downstream is linear.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


def dbm_to_watt(dbm: float) -> float:
    """Convert a power level in dBm to watts."""
    return 10.0 ** (dbm / 10.0) / 1000.0


def watt_to_dbm(watt: float) -> float:
    """Convert a power in watts to dBm. Requires a strictly positive input."""
    if watt <= 0.0:
        raise ValueError("power must be positive to express in dBm")
    return 10.0 * math.log10(watt * 1000.0)


@dataclass(frozen=True)
class PhysicalConstants:
    """Carrier and noise parameters shared by every link in the cell.

    Defaults correspond to an indoor 802.11ac-style deployment: 5260 MHz
    carrier, 160 MHz channelization, -95 dBm noise floor, and a combined
    antenna gain of 4 in the cubic free-space attenuation law.
    """

    antenna_gain: float = 4.0
    carrier_frequency_hz: float = 5.26e9
    speed_of_light: float = 3.0e8
    bandwidth_hz: float = 160e6
    noise_power_w: float = dbm_to_watt(-95.0)

    def __post_init__(self) -> None:
        for name in ("antenna_gain", "carrier_frequency_hz", "speed_of_light",
                     "bandwidth_hz", "noise_power_w"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class TopologyConfig:
    """Cell geometry and node population.

    num_tx_antennas   transmit antennas at the access point (Alice)
    num_bobs          legitimate full-duplex receivers
    num_eves          eavesdroppers
    cell_radius_m     disc radius nodes are dropped in
    eve_placement     "independent" (uniform over the cell) or "near_bob"
                      (annulus of [eve_ring_min_m, eve_ring_max_m] around a
                      uniformly chosen anchor Bob)
    correlation       rho in [0, 1] mixing each Eve's small-scale vector with
                      her anchor Bob's; only meaningful for near_bob placement
    si_residual       alpha in [0, 1], fraction of a Bob's own jamming power
                      that survives self-interference cancellation
    si_channel_gain   the self-loop channel coefficient (unit by convention)
    min_alice_distance_m  closest any node may sit to Alice, keeping the
                      attenuation factor bounded
    """

    num_tx_antennas: int = 8
    num_bobs: int = 3
    num_eves: int = 3
    cell_radius_m: float = 30.0
    eve_placement: str = "independent"
    eve_ring_min_m: float = 0.1
    eve_ring_max_m: float = 1.0
    correlation: float = 0.0
    si_residual: float = 0.0
    si_channel_gain: complex = 1.0 + 0.0j
    min_alice_distance_m: float = 1.0

    def __post_init__(self) -> None:
        if self.num_tx_antennas < 1:
            raise ValueError("num_tx_antennas must be >= 1")
        if self.num_bobs < 1:
            raise ValueError("num_bobs must be >= 1")
        if self.num_eves < 0:
            raise ValueError("num_eves must be >= 0")
        if self.num_tx_antennas <= self.num_bobs:
            raise ValueError("num_tx_antennas must exceed num_bobs so the "
                             "information precoders have a null space to live in")
        if self.cell_radius_m <= 0.0:
            raise ValueError("cell_radius_m must be positive")
        if self.eve_placement not in ("independent", "near_bob"):
            raise ValueError("eve_placement must be 'independent' or 'near_bob'")
        if not 0.0 < self.eve_ring_min_m < self.eve_ring_max_m:
            raise ValueError("eve ring radii must satisfy 0 < min < max")
        if self.eve_ring_max_m > self.cell_radius_m:
            raise ValueError("eve_ring_max_m cannot exceed cell_radius_m")
        if not 0.0 <= self.correlation <= 1.0:
            raise ValueError("correlation must lie in [0, 1]")
        if not 0.0 <= self.si_residual <= 1.0:
            raise ValueError("si_residual must lie in [0, 1]")
        if not 0.0 < self.min_alice_distance_m < self.cell_radius_m:
            raise ValueError("min_alice_distance_m must lie in (0, cell_radius_m)")


@dataclass(frozen=True)
class PowerLimits:
    """Transmit power budgets in watts.

    alice_max_w caps the sum of information and transmit-jamming power at the
    access point; bob_max_w caps each receiver's own jamming transmission.
    """

    alice_max_w: float = dbm_to_watt(24.0)
    bob_max_w: float = dbm_to_watt(10.0)

    def __post_init__(self) -> None:
        if self.alice_max_w <= 0.0:
            raise ValueError("alice_max_w must be positive")
        if self.bob_max_w < 0.0:
            raise ValueError("bob_max_w must be nonnegative")

    def bob_caps(self, num_bobs: int) -> np.ndarray:
        return np.full(num_bobs, self.bob_max_w)
