"""Geometry sampling, fading draws, attenuation law, and serialization."""
import json

import numpy as np
import pytest

from secjam.channel import (ChannelSet, NodePositions, _sample_annulus,
                            assemble_channel_set, channel_set_from_dict,
                            channel_set_to_dict, complex_normal,
                            correlated_eve_channel, friis_path_loss,
                            realize_channels, sample_topology)
from secjam.config import PhysicalConstants, TopologyConfig


def test_friis_frozen_value_at_one_meter(constants):
    # 4 * (3e8 / (4 pi 5.26e9 * 1))^3, evaluated once by hand and pinned.
    assert friis_path_loss(1.0, constants) == pytest.approx(3.7397014346923687e-07,
                                                            rel=1e-12)


def test_friis_cubic_distance_scaling(constants):
    d = np.array([1.0, 2.0, 4.0, 10.0])
    pl = friis_path_loss(d, constants)
    assert pl.shape == (4,)
    assert pl[1] == pytest.approx(pl[0] / 8.0, rel=1e-12)
    assert pl[3] == pytest.approx(pl[0] / 1000.0, rel=1e-12)
    # scalar input returns a plain float
    assert isinstance(friis_path_loss(5.0, constants), float)


def test_friis_rejects_nonpositive_distance(constants):
    with pytest.raises(ValueError):
        friis_path_loss(0.0, constants)
    with pytest.raises(ValueError):
        friis_path_loss(np.array([1.0, -2.0]), constants)


def test_complex_normal_moments():
    """CN(0,1): unit total variance split evenly between re and im parts."""
    rng = np.random.default_rng(1)
    z = complex_normal(rng, 200_000)
    assert abs(z.mean()) < 0.01
    assert np.mean(np.abs(z) ** 2) == pytest.approx(1.0, abs=0.02)
    assert np.var(z.real) == pytest.approx(0.5, abs=0.01)
    assert np.var(z.imag) == pytest.approx(0.5, abs=0.01)
    assert complex_normal(rng, (3, 4)).shape == (3, 4)


def test_annulus_sampling_is_area_uniform():
    rng = np.random.default_rng(2)
    center = np.array([5.0, -3.0])
    pts = _sample_annulus(rng, 20_000, 1.0, 30.0, center)
    r = np.linalg.norm(pts - center, axis=1)
    assert np.all((r >= 1.0) & (r <= 30.0))
    # area-uniform mean radius = (2/3)(R^3 - r^3)/(R^2 - r^2) = 20.0215...
    assert r.mean() == pytest.approx(20.021505376344084, abs=0.2)
    # isotropy: the sample centroid sits at the ring's center
    assert np.allclose(pts.mean(axis=0), center, atol=0.3)


def test_sample_topology_independent_placement():
    topo = TopologyConfig()
    pos = sample_topology(topo, np.random.default_rng(3))
    assert pos.alice.shape == (2,) and np.all(pos.alice == 0.0)
    db = pos.bob_distances()
    de = pos.eve_distances()
    assert np.all((db >= topo.min_alice_distance_m) & (db <= topo.cell_radius_m))
    assert np.all((de >= topo.min_alice_distance_m) & (de <= topo.cell_radius_m))
    assert np.all(pos.eve_anchor == -1)


def test_sample_topology_near_bob_placement():
    topo = TopologyConfig(eve_placement="near_bob", num_eves=6)
    pos = sample_topology(topo, np.random.default_rng(4))
    assert pos.eve_anchor.shape == (6,)
    assert np.all((pos.eve_anchor >= 0) & (pos.eve_anchor < topo.num_bobs))
    for i, anchor in enumerate(pos.eve_anchor):
        ring = np.linalg.norm(pos.eves[i] - pos.bobs[anchor])
        assert topo.eve_ring_min_m <= ring <= topo.eve_ring_max_m
        dist = np.linalg.norm(pos.eves[i])
        assert topo.min_alice_distance_m <= dist <= topo.cell_radius_m


def test_no_eves_topology():
    topo = TopologyConfig(num_eves=0)
    pos = sample_topology(topo, np.random.default_rng(5))
    assert pos.eves.shape == (0, 2)
    assert pos.eve_distances().shape == (0,)


def test_correlated_eve_channel_endpoints():
    rng = np.random.default_rng(6)
    g = complex_normal(rng, 8)
    pl = 2.5e-9
    # rho = 1 reproduces the anchor's fading exactly (scaled by sqrt(pl))
    h = correlated_eve_channel(g, pl, 1.0, np.random.default_rng(7))
    assert np.allclose(h, np.sqrt(pl) * g, atol=1e-15)
    with pytest.raises(ValueError):
        correlated_eve_channel(g, pl, 1.2, rng)


def test_correlated_eve_channel_mixing_coefficient():
    """The regression of the mixed vector on the anchor recovers rho."""
    rng = np.random.default_rng(8)
    g = complex_normal(rng, 8)
    for rho in (0.0, 0.4, 0.9):
        draws = np.array([correlated_eve_channel(g, 1.0, rho,
                                                 np.random.default_rng((9, d)))
                          for d in range(4000)])
        est = np.mean(draws @ g.conj()) / np.linalg.norm(g) ** 2
        assert est.real == pytest.approx(rho, abs=0.03)
        assert abs(est.imag) < 0.03


def test_realize_channels_shapes_and_determinism(constants):
    topo = TopologyConfig()
    a = realize_channels(topo, constants, np.random.SeedSequence(10))
    b = realize_channels(topo, constants, np.random.SeedSequence(10))
    n, k, l = topo.num_tx_antennas, topo.num_bobs, topo.num_eves
    assert a.h_ab.shape == (k, n) and a.h_ae.shape == (l, n)
    assert a.h_bb.shape == (k, k) and a.h_be.shape == (k, l)
    assert a.pl_ab.shape == (k,) and a.pl_be.shape == (k, l)
    for name in ("h_ab", "h_ae", "h_bb", "h_be", "g_ab"):
        assert np.array_equal(getattr(a, name), getattr(b, name)), name
    assert np.array_equal(a.positions.bobs, b.positions.bobs)


def test_channel_set_internal_consistency(channels_k3l3, constants):
    ch = channels_k3l3
    # attenuations match the geometry they were drawn from
    assert np.allclose(ch.pl_ab, friis_path_loss(ch.positions.bob_distances(),
                                                 constants), rtol=1e-12)
    assert np.allclose(ch.h_ab, np.sqrt(ch.pl_ab)[:, None] * ch.g_ab)
    # inter-receiver links are reciprocal, self-loops carry the unit gain
    assert np.array_equal(ch.h_bb, ch.h_bb.T)
    assert np.allclose(np.diag(ch.h_bb), ch.topology.si_channel_gain)
    assert np.allclose(np.diag(ch.pl_bb), 1.0)


def test_correlated_realization_uses_anchor_fading(constants):
    """With rho = 1, an anchored Eve's channel is her anchor's fading rescaled."""
    topo = TopologyConfig(eve_placement="near_bob", correlation=1.0)
    ch = realize_channels(topo, constants, np.random.SeedSequence(11))
    for i in range(ch.num_eves):
        anchor = int(ch.positions.eve_anchor[i])
        expected = np.sqrt(ch.pl_ae[i]) * ch.g_ab[anchor]
        assert np.allclose(ch.h_ae[i], expected, atol=1e-15)


def test_serialization_roundtrip(channels_near):
    data = channel_set_to_dict(channels_near)
    assert data["schema"] == "secjam-channels-v1"
    restored = channel_set_from_dict(json.loads(json.dumps(data)))
    for name in ("h_ab", "h_ae", "h_bb", "h_be", "g_ab",
                 "pl_ab", "pl_ae", "pl_bb", "pl_be"):
        assert np.allclose(getattr(restored, name), getattr(channels_near, name),
                           atol=0.0, rtol=0.0), name
    assert restored.topology == channels_near.topology
    assert restored.constants == channels_near.constants
    assert np.array_equal(restored.positions.eve_anchor,
                          channels_near.positions.eve_anchor)


def test_serialization_roundtrip_no_eves(constants):
    ch = realize_channels(TopologyConfig(num_eves=0), constants,
                          np.random.SeedSequence(12))
    restored = channel_set_from_dict(channel_set_to_dict(ch))
    assert restored.h_ae.shape == (0, ch.num_tx_antennas)
    assert restored.h_be.shape == (ch.num_bobs, 0)
