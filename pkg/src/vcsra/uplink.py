"""Per-realization uplink SINR and instantaneous rate evaluation.

Both receivers reduce to the same normalized quadratic form: with
beamformer row b_i^T, the signal and interference powers are
``(rho/M) |b_i^T h|^2`` and the post-beamforming noise is 1. For conjugate
rows (raw h^H) that is exactly the conjugate-beamforming SINR with its
M-normalized noise; for zero-forcing rows (norm sqrt(M)) it is exactly the
zero-forcing SINR with signal ``rho ||a_i||^-2``, nulled intra-group terms,
and RA leakage ``rho |a_i^T h / ||a_i|| |^2``.

RA UEs are evaluated with perfect CSI after admission (the pilot-detection
step is abstracted away), in one of two receiver modes:

* ``projected`` -- beamform on the channels projected onto the orthogonal
  complement of the assigned span, which nulls assigned-UE interference
  exactly;
* ``direct`` -- beamform on the raw RA channels, so assigned-UE
  interference enters symmetrically to the RA term seen by assigned UEs.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .beamforming import CONJUGATE, ZERO_FORCING, make_beamformers, project_out
from .errors import DomainError
from .numerics import as_complex_matrix

PROJECTED = "projected"
DIRECT = "direct"


@dataclass(frozen=True)
class UplinkConfig:
    """Common uplink SNR (perfect power control) and RA receiver mode."""

    uplink_snr_db: float
    ra_receiver_mode: str = DIRECT

    def __post_init__(self) -> None:
        if self.ra_receiver_mode not in (PROJECTED, DIRECT):
            raise DomainError(f"unknown RA receiver mode {self.ra_receiver_mode!r}")


@dataclass(frozen=True)
class SinrBreakdown:
    """Signal and interference powers after noise normalization (noise = 1)."""

    signal: float
    intra_assigned_interference: float
    ra_interference: float
    noise: float
    sinr: float


def _components(rows: np.ndarray, h_group: np.ndarray, h_other: np.ndarray, snr: float):
    """(signal, same-group, other-group) powers, each (rho/M)|b^T h|^2."""
    m = rows.shape[1]
    gram = rows @ h_group
    diag = np.abs(np.diag(gram)) ** 2
    same = np.sum(np.abs(gram) ** 2, axis=1) - diag
    cross = (
        np.sum(np.abs(rows @ h_other) ** 2, axis=1)
        if h_other.shape[1]
        else np.zeros(rows.shape[0])
    )
    scale = snr / m
    return scale * diag, scale * same, scale * cross


def _breakdowns(sig, from_assigned, from_ra):
    out = []
    for s, a, r in zip(sig, from_assigned, from_ra):
        out.append(SinrBreakdown(float(s), float(a), float(r), 1.0, float(s / (1.0 + a + r))))
    return out


def assigned_sinr_cb(h_assigned, h_ra, uplink_snr: float):
    """Conjugate-beamforming SINR breakdown for each assigned UE."""
    h_a = as_complex_matrix(h_assigned)
    h_r = as_complex_matrix(h_ra) if np.size(h_ra) else np.zeros((h_a.shape[0], 0), dtype=np.complex128)
    rows = h_a.conj().T
    sig, same, cross = _components(rows, h_a, h_r, uplink_snr)
    return _breakdowns(sig, same, cross)


def assigned_sinr_zf(h_assigned, h_ra, uplink_snr: float):
    """Zero-forcing SINR breakdown for each assigned UE."""
    h_a = as_complex_matrix(h_assigned)
    h_r = as_complex_matrix(h_ra) if np.size(h_ra) else np.zeros((h_a.shape[0], 0), dtype=np.complex128)
    rows = make_beamformers(h_a, ZERO_FORCING).rows
    sig, same, cross = _components(rows, h_a, h_r, uplink_snr)
    return _breakdowns(sig, same, cross)


def ra_sinr(h_assigned, h_ra, uplink_snr: float, mode: str = DIRECT, kind: str = CONJUGATE):
    """SINR breakdown for each RA UE under the chosen receiver mode.

    ``ra_interference`` carries the RA-to-RA term and
    ``intra_assigned_interference`` the assigned-to-RA term (exactly zero
    in projected mode, up to numerical zero).
    """
    h_a = as_complex_matrix(h_assigned)
    h_r = as_complex_matrix(h_ra)
    if h_r.shape[1] == 0:
        return []
    if mode == PROJECTED:
        h_group = project_out(h_a, h_r)
        h_other = project_out(h_a, h_a)  # numerically zero columns
    elif mode == DIRECT:
        h_group, h_other = h_r, h_a
    else:
        raise DomainError(f"unknown RA receiver mode {mode!r}")
    rows = make_beamformers(h_group, kind).rows
    sig, same, cross = _components(rows, h_group, h_other, uplink_snr)
    return _breakdowns(sig, cross, same)


def sinr_values(breakdowns) -> np.ndarray:
    return np.array([b.sinr for b in breakdowns])


def instantaneous_rate(sinr):
    """Spectral efficiency log2(1 + sinr) in bits/s/Hz."""
    arr = np.asarray(sinr, dtype=float)
    if np.any(arr < 0):
        raise DomainError("SINR must be nonnegative")
    out = np.log2(1.0 + arr)
    return float(out) if np.isscalar(sinr) or arr.ndim == 0 else out
