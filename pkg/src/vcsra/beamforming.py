"""Conjugate (maximum-ratio) and zero-forcing beamformers for the assigned
UEs, plus the orthogonal-complement projector used to recover RA signals.

Conventions, preserved exactly because downstream SINR expressions depend
on them: conjugate rows are the raw conjugated channels (not normalized),
while zero-forcing rows are scaled to norm sqrt(M). The same set serves as
downlink virtual-carrier precoder and uplink receive filter (TDD
reciprocity), so it is computed once per channel realization.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

from .numerics import as_complex_matrix, pseudo_inverse_left

CONJUGATE = "cb"
ZERO_FORCING = "zf"


@dataclass(frozen=True)
class BeamformerSet:
    """Row-stacked beamformers b_i^T for the assigned UEs."""

    rows: np.ndarray  # (N_A, M), row i is b_i^T
    kind: str         # "cb" | "zf"
    source_fingerprint: str

    def __post_init__(self) -> None:
        self.rows.setflags(write=False)

    @property
    def n_beams(self) -> int:
        return self.rows.shape[0]

    @property
    def n_antennas(self) -> int:
        return self.rows.shape[1]


def _fingerprint(h: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(h).tobytes()).hexdigest()[:16]


def cb_beamformers(h_assigned: np.ndarray) -> BeamformerSet:
    """Conjugate beamforming: row i is h_i^H, intentionally unnormalized."""
    h = as_complex_matrix(h_assigned)
    return BeamformerSet(h.conj().T.copy(), CONJUGATE, _fingerprint(h))


def zf_beamformers(h_assigned: np.ndarray) -> BeamformerSet:
    """Zero-forcing: row i is sqrt(M) a_i^T / ||a_i|| with a_i^T the i-th
    pseudo-inverse row, so every row has norm sqrt(M) and nulls the other
    assigned UEs."""
    h = as_complex_matrix(h_assigned)
    m = h.shape[0]
    pinv_rows = pseudo_inverse_left(h)
    norms = np.linalg.norm(pinv_rows, axis=1, keepdims=True)
    return BeamformerSet(math.sqrt(m) * pinv_rows / norms, ZERO_FORCING, _fingerprint(h))


def make_beamformers(h_assigned: np.ndarray, kind: str) -> BeamformerSet:
    if kind == CONJUGATE:
        return cb_beamformers(h_assigned)
    if kind == ZERO_FORCING:
        return zf_beamformers(h_assigned)
    raise ValueError(f"unknown beamformer kind {kind!r}")


def orthogonal_complement(h_assigned: np.ndarray) -> np.ndarray:
    """Projector onto the orthogonal complement of span(columns of H).

    Hermitian, idempotent, annihilates every assigned channel and has
    trace M - N_A. An empty H yields the identity.
    """
    h = as_complex_matrix(h_assigned)
    m, n = h.shape
    if n == 0:
        return np.eye(m, dtype=np.complex128)
    pinv = pseudo_inverse_left(h)  # also enforces the rank/condition contract
    p = np.eye(m, dtype=np.complex128) - h @ pinv
    return 0.5 * (p + p.conj().T)


def project_out(h_assigned: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    """Apply the orthogonal complement of span(H) to ``vectors`` without
    forming the full M x M projector (QR-based; hot-path helper)."""
    h = as_complex_matrix(h_assigned)
    if h.shape[1] == 0:
        return np.array(vectors, copy=True)
    basis, _ = np.linalg.qr(h)
    return vectors - basis @ (basis.conj().T @ vectors)
