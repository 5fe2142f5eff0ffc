"""Beamforming vector construction for the information and jamming signals.

All precoders are unit-norm columns living in SVD-computed null spaces:

  * zero-forcing with maximum ratio combining: project the target channel
    onto the null space of the stacked interference channels and renormalize,
    which maximizes the target gain among all zero-forcing unit vectors;
  * transmit-jamming bases: an orthonormal basis of the null space of the
    stacked receiver channels, so jamming is invisible to every receiver.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .channel import ChannelSet

SCHEMES = ("zfbf", "txfj_only", "cfj")


class SchemeInfeasibleError(ValueError):
    """Raised when the antenna count cannot support the requested scheme."""


class EmptyNullSpaceError(ValueError):
    """Raised when a matrix has no null space to beamform into."""


class OrthogonalChannelError(ValueError):
    """Raised when the target channel lies entirely in the nulled subspace."""


def rank_tolerance(singular_values: np.ndarray, shape) -> float:
    """Default threshold below which singular values count as zero."""
    if singular_values.size == 0:
        return 0.0
    return max(shape) * float(singular_values[0]) * 1e-12


def null_space_basis(matrix: np.ndarray, tol: float | None = None) -> np.ndarray:
    """Orthonormal basis (columns) of the right null space of `matrix`.

    The rank is the number of singular values above `tol`; by default
    max(m, n) * sigma_max * 1e-12. A matrix with no null space raises
    EmptyNullSpaceError. An empty (0, n) matrix has the full space as its
    null space.
    """
    matrix = np.atleast_2d(np.asarray(matrix))
    m, n = matrix.shape
    if m == 0:
        return np.eye(n, dtype=complex)
    _, s, vh = np.linalg.svd(matrix)
    if tol is None:
        tol = rank_tolerance(s, (m, n))
    rank = int(np.sum(s > tol))
    if rank >= n:
        raise EmptyNullSpaceError(
            f"matrix of shape ({m}, {n}) with rank {rank} has no null space")
    return vh[rank:, :].conj().T


def zf_mrc_precoder(h_target: np.ndarray, h_nulled: np.ndarray | None,
                    tol: float | None = None) -> np.ndarray:
    """Unit-norm precoder nulled at `h_nulled` rows, max-gain at `h_target`.

    With null-space basis V, the vector is V (h V)^H / |h V|: the projection
    of the target channel onto the feasible subspace, matched-filter style.
    """
    h_target = np.asarray(h_target).ravel()
    if h_nulled is None or np.asarray(h_nulled).size == 0:
        basis = np.eye(h_target.size, dtype=complex)
    else:
        basis = null_space_basis(h_nulled, tol=tol)
    projected = h_target @ basis
    gain = float(np.linalg.norm(projected))
    if gain <= 1e-12 * float(np.linalg.norm(h_target)):
        raise OrthogonalChannelError(
            "target channel is orthogonal to the feasible subspace")
    return basis @ (projected.conj() / gain)


@dataclass
class PrecoderSet:
    """Information precoders (one row per Bob) plus transmit-jamming basis rows.

    num_txfj is the jamming-space dimension M (zero when the scheme sends no
    transmit jamming). rank_deficient flags realizations whose stacked Bob
    channels lost rank, which inflates M beyond the nominal N_A - K.
    """

    info: np.ndarray        # (K, N_A) complex, unit-norm rows
    txfj: np.ndarray        # (M, N_A) complex, orthonormal rows
    scheme: str
    rank_deficient: bool = False

    @property
    def num_txfj(self) -> int:
        return self.txfj.shape[0]


def build_zfbf_precoders(channels: ChannelSet, tol: float | None = None) -> PrecoderSet:
    """Zero-forcing beamforming: each Bob's precoder is nulled at every other
    Bob and at every eavesdropper, so no jamming is needed and no
    randomization rate is required. Needs N_A > K + L - 1 antennas."""
    num_bobs, num_eves = channels.num_bobs, channels.num_eves
    n_ant = channels.num_tx_antennas
    if n_ant <= num_bobs + num_eves - 1:
        raise SchemeInfeasibleError(
            f"zfbf needs num_tx_antennas > K + L - 1 = {num_bobs + num_eves - 1}, "
            f"got {n_ant}")
    info = np.zeros((num_bobs, n_ant), dtype=complex)
    for k in range(num_bobs):
        others = [channels.h_ab[l] for l in range(num_bobs) if l != k]
        stacked = np.vstack(others + [channels.h_ae]) if num_eves else (
            np.vstack(others) if others else np.zeros((0, n_ant), dtype=complex))
        info[k] = zf_mrc_precoder(channels.h_ab[k], stacked, tol=tol)
    return PrecoderSet(info=info, txfj=np.zeros((0, n_ant), dtype=complex),
                       scheme="zfbf")


def build_cfj_precoders(channels: ChannelSet, tol: float | None = None) -> PrecoderSet:
    """Cooperative-jamming precoders: information beams are nulled only at the
    other Bobs, and the transmit-jamming basis spans the null space of the
    stacked Bob channels (dimension M = N_A - rank). Needs N_A > K."""
    num_bobs = channels.num_bobs
    n_ant = channels.num_tx_antennas
    if n_ant <= num_bobs:
        raise SchemeInfeasibleError(
            f"cfj needs num_tx_antennas > K = {num_bobs}, got {n_ant}")
    info = np.zeros((num_bobs, n_ant), dtype=complex)
    for k in range(num_bobs):
        others = [channels.h_ab[l] for l in range(num_bobs) if l != k]
        stacked = np.vstack(others) if others else np.zeros((0, n_ant), dtype=complex)
        info[k] = zf_mrc_precoder(channels.h_ab[k], stacked, tol=tol)
    txfj = null_space_basis(channels.h_ab, tol=tol).T
    rank = n_ant - txfj.shape[0]
    return PrecoderSet(info=info, txfj=txfj, scheme="cfj",
                       rank_deficient=rank < num_bobs)


def build_precoders(channels: ChannelSet, scheme: str,
                    tol: float | None = None) -> PrecoderSet:
    """Dispatch on scheme name. txfj_only shares the cfj geometry; the
    difference is purely that its receivers never jam, which the power
    allocation enforces by omitting their power variables."""
    if scheme == "zfbf":
        return build_zfbf_precoders(channels, tol=tol)
    if scheme == "cfj":
        return build_cfj_precoders(channels, tol=tol)
    if scheme == "txfj_only":
        return replace(build_cfj_precoders(channels, tol=tol), scheme="txfj_only")
    raise ValueError(f"unknown scheme '{scheme}'; expected one of {SCHEMES}")


def precoder_set_to_dict(precoders: PrecoderSet) -> dict:
    from .channel import _encode_complex
    return {
        "schema": "secjam-precoders-v1",
        "scheme": precoders.scheme,
        "rank_deficient": precoders.rank_deficient,
        "info": _encode_complex(precoders.info),
        "txfj": _encode_complex(precoders.txfj),
    }


def precoder_set_from_dict(data: dict) -> PrecoderSet:
    from .channel import _decode_complex
    info = _decode_complex(data["info"])
    txfj = np.asarray(data["txfj"], dtype=float)
    if txfj.size == 0:
        txfj_c = np.zeros((0, info.shape[1]), dtype=complex)
    else:
        txfj_c = _decode_complex(data["txfj"])
    return PrecoderSet(info=info, txfj=txfj_c, scheme=data["scheme"],
                       rank_deficient=bool(data["rank_deficient"]))
