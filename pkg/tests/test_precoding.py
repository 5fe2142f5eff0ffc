"""Null-space algebra and precoder construction."""
import json
from dataclasses import replace

import numpy as np
import pytest

from secjam.channel import complex_normal, realize_channels
from secjam.config import PhysicalConstants, TopologyConfig
from secjam.precoding import (EmptyNullSpaceError, OrthogonalChannelError,
                              SchemeInfeasibleError, build_cfj_precoders,
                              build_precoders, build_zfbf_precoders,
                              null_space_basis, precoder_set_from_dict,
                              precoder_set_to_dict, zf_mrc_precoder)


def test_null_space_basis_orthonormal_and_nulling():
    rng = np.random.default_rng(13)
    mat = complex_normal(rng, (3, 8))
    basis = null_space_basis(mat)
    assert basis.shape == (8, 5)
    assert np.allclose(basis.conj().T @ basis, np.eye(5), atol=1e-12)
    assert np.max(np.abs(mat @ basis)) < 1e-12 * np.linalg.norm(mat)


def test_null_space_counts_rank_not_rows():
    rng = np.random.default_rng(14)
    v = complex_normal(rng, 8)
    basis = null_space_basis(np.vstack([v, v]))  # one direction, stacked twice
    assert basis.shape == (8, 7)


def test_null_space_edge_cases():
    rng = np.random.default_rng(15)
    with pytest.raises(EmptyNullSpaceError):
        null_space_basis(complex_normal(rng, (8, 8)))
    # a constraint-free space is its own null space
    assert np.allclose(null_space_basis(np.zeros((0, 5))), np.eye(5))


def test_zf_mrc_nulls_and_normalizes():
    rng = np.random.default_rng(16)
    h_nulled = complex_normal(rng, (4, 8))
    h_target = complex_normal(rng, 8)
    w = zf_mrc_precoder(h_target, h_nulled)
    assert np.linalg.norm(w) == pytest.approx(1.0, abs=1e-12)
    assert np.max(np.abs(h_nulled @ w)) < 1e-12 * np.linalg.norm(h_nulled)


def test_zf_mrc_maximizes_gain_over_the_null_space():
    """Matched filtering in the feasible subspace beats every other unit
    vector that satisfies the same nulling constraints."""
    rng = np.random.default_rng(17)
    h_nulled = complex_normal(rng, (4, 8))
    h_target = complex_normal(rng, 8)
    w = zf_mrc_precoder(h_target, h_nulled)
    best = np.abs(h_target @ w)
    basis = null_space_basis(h_nulled)
    for _ in range(200):
        coef = complex_normal(rng, basis.shape[1])
        probe = basis @ (coef / np.linalg.norm(coef))
        assert np.abs(h_target @ probe) <= best + 1e-12


def test_zf_mrc_without_constraints_is_matched_filter():
    rng = np.random.default_rng(18)
    h = complex_normal(rng, 6)
    w = zf_mrc_precoder(h, None)
    assert np.allclose(w, h.conj() / np.linalg.norm(h), atol=1e-12)
    assert np.abs(h @ w) == pytest.approx(np.linalg.norm(h), rel=1e-12)


def test_zf_mrc_rejects_orthogonal_target():
    rng = np.random.default_rng(19)
    h_nulled = complex_normal(rng, (3, 8))
    with pytest.raises(OrthogonalChannelError):
        zf_mrc_precoder(h_nulled[0], h_nulled)


def test_zfbf_nulls_every_other_receiver_and_eavesdropper(channels_k3l3):
    ch = channels_k3l3
    p = build_zfbf_precoders(ch)
    assert p.scheme == "zfbf"
    assert p.num_txfj == 0
    scale = np.linalg.norm(ch.h_ab, axis=1).max()
    for k in range(ch.num_bobs):
        assert np.linalg.norm(p.info[k]) == pytest.approx(1.0, abs=1e-12)
        for l in range(ch.num_bobs):
            if l != k:
                assert abs(ch.h_ab[l] @ p.info[k]) < 1e-10 * scale
        for i in range(ch.num_eves):
            assert abs(ch.h_ae[i] @ p.info[k]) < 1e-10 * scale


def test_zfbf_needs_enough_antennas(constants):
    topo = TopologyConfig(num_tx_antennas=5, num_bobs=3, num_eves=3)
    ch = realize_channels(topo, constants, np.random.SeedSequence(21))
    with pytest.raises(SchemeInfeasibleError):
        build_zfbf_precoders(ch)


def test_cfj_geometry(channels_k3l3, cfj_k3l3):
    ch, p = channels_k3l3, cfj_k3l3
    assert p.scheme == "cfj"
    assert not p.rank_deficient
    # jamming basis spans the null space of the stacked Bob channels
    assert p.num_txfj == ch.num_tx_antennas - ch.num_bobs
    assert np.allclose(p.txfj @ p.txfj.conj().T, np.eye(p.num_txfj), atol=1e-12)
    assert np.max(np.abs(ch.h_ab @ p.txfj.T)) < 1e-12 * np.linalg.norm(ch.h_ab)
    # information beams are nulled at the other receivers only
    scale = np.linalg.norm(ch.h_ab, axis=1).max()
    for k in range(ch.num_bobs):
        for l in range(ch.num_bobs):
            if l != k:
                assert abs(ch.h_ab[l] @ p.info[k]) < 1e-10 * scale
    # ... so the eavesdroppers still observe them
    assert np.max(np.abs(ch.h_ae @ p.info.T)) > 1e-6 * np.max(np.abs(ch.h_ae))


def test_cfj_needs_more_antennas_than_receivers(channels_k3l3):
    rng = np.random.default_rng(22)
    crowded = replace(channels_k3l3, h_ab=complex_normal(rng, (8, 8)))
    with pytest.raises(SchemeInfeasibleError):
        build_cfj_precoders(crowded)


def test_cfj_rank_deficiency_flag(channels_k3l3):
    """A receiver channel that is numerically a combination of the others
    collapses the stacked rank: the jamming space grows and gets flagged."""
    rng = np.random.default_rng(23)
    base = complex_normal(rng, (2, 8))
    third = base[0] + base[1] + 1e-8 * complex_normal(rng, 8)
    ch = replace(channels_k3l3, h_ab=np.vstack([base, third]))
    # at the default tolerance the 1e-8 direction still counts as rank
    assert build_cfj_precoders(ch).num_txfj == 5
    assert not build_cfj_precoders(ch).rank_deficient
    # a coarser tolerance treats the stack as rank 2
    p = build_cfj_precoders(ch, tol=1e-6)
    assert p.num_txfj == 6
    assert p.rank_deficient


def test_build_precoders_dispatch(channels_k3l3):
    cfj = build_precoders(channels_k3l3, "cfj")
    txo = build_precoders(channels_k3l3, "txfj_only")
    assert txo.scheme == "txfj_only"
    assert np.array_equal(txo.info, cfj.info)
    assert np.array_equal(txo.txfj, cfj.txfj)
    assert build_precoders(channels_k3l3, "zfbf").scheme == "zfbf"
    with pytest.raises(ValueError):
        build_precoders(channels_k3l3, "beamhop")


@pytest.mark.parametrize("scheme", ["zfbf", "cfj"])
def test_precoder_serialization_roundtrip(channels_k3l3, scheme):
    p = build_precoders(channels_k3l3, scheme)
    data = json.loads(json.dumps(precoder_set_to_dict(p)))
    restored = precoder_set_from_dict(data)
    assert restored.scheme == p.scheme
    assert restored.rank_deficient == p.rank_deficient
    assert np.allclose(restored.info, p.info, atol=0.0, rtol=0.0)
    assert restored.txfj.shape == p.txfj.shape
    assert np.allclose(restored.txfj, p.txfj, atol=0.0, rtol=0.0)
