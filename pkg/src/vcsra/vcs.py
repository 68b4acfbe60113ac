"""Virtual-carrier sensing protocol.

The base station spreads the assigned UEs' beamformers over orthogonal
code columns and broadcasts the sum; each RA UE despreads its received
copy, normalizes the energy, and declares the channel available when the
strength is at or below a dB threshold. Admission of RA UEs for uplink
experiments is exact rejection sampling against the noiseless sensing
condition.

The broadcast power is fixed at 1.0: it cancels in the normalized sensing
ratio, so only the virtual-carrier SNR (noise level at the RA UE) can
influence decisions, and only when noise is enabled.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .beamforming import BeamformerSet
from .channel import draw_practical_channel, draw_simplified_channel, SimplifiedChannelParams
from .errors import AdmissionExhausted, CodeTooShort, DimensionError, DomainError
from .numerics import OrthogonalCode, RngStream, db_to_linear, linear_to_db, standard_complex_gaussian

DEFAULT_MAX_ATTEMPTS_PER_UE = 10_000


@dataclass(frozen=True)
class VcsSignal:
    """Virtual-carrier block: row i is code-chip i across the M antennas."""

    samples: np.ndarray  # (N_L, M)
    power: float
    code: OrthogonalCode

    def __post_init__(self) -> None:
        self.samples.setflags(write=False)


@dataclass(frozen=True)
class SensingOutcome:
    """Per-RA-UE, per-decision sensing result."""

    y_linear: float
    y_db: float
    available: bool
    channel_index: int | None = None


def build_virtual_carrier(beams: BeamformerSet, code: OrthogonalCode, power: float = 1.0) -> VcsSignal:
    """Sum of per-UE virtual carriers s_i b_i^T, scaled by sqrt(power)."""
    if beams.n_beams > code.length:
        raise CodeTooShort(f"{beams.n_beams} assigned UEs exceed code length {code.length}")
    if power <= 0:
        raise DomainError("transmit power must be positive")
    columns = code.matrix[:, : beams.n_beams].astype(np.float64)
    return VcsSignal(math.sqrt(power) * (columns @ beams.rows), power, code)


def ra_receive(
    signal: VcsSignal,
    h_ra: np.ndarray,
    vc_snr_db: float,
    noise: bool,
    rng: RngStream | None = None,
) -> np.ndarray:
    """Received virtual-carrier block w = V h + n at one RA UE.

    The noise variance is the expected per-symbol receive power divided by
    the virtual-carrier SNR; ``vc_snr_db = +inf`` (or ``noise=False``)
    gives the noiseless block.
    """
    h = np.asarray(h_ra, dtype=np.complex128).reshape(-1)
    if h.shape[0] != signal.samples.shape[1]:
        raise DimensionError(f"channel length {h.shape[0]} does not match {signal.samples.shape[1]} antennas")
    w = signal.samples @ h
    if not noise or math.isinf(vc_snr_db):
        return w
    if not math.isfinite(vc_snr_db):
        raise DomainError("virtual-carrier SNR must be finite when noise is enabled")
    sigma2 = signal.power / db_to_linear(vc_snr_db)
    if rng is None:
        raise DomainError("an RngStream is required to draw receiver noise")
    n = math.sqrt(sigma2) * standard_complex_gaussian(rng.generator(), (w.shape[0],))
    return w + n


def sensing_strength(w: np.ndarray, code: OrthogonalCode, n_antennas: int, received_power: float) -> float:
    """Despread and normalize: ||S^T w||^2 / (M * power * N_L^2).

    Noiseless, this equals sum_i |b_i^T h|^2 / M by code orthogonality.
    """
    if received_power <= 0:
        raise DomainError("received power must be positive")
    t = code.matrix.T.astype(np.float64) @ np.asarray(w, dtype=np.complex128)
    return float(np.sum(np.abs(t) ** 2)) / (n_antennas * received_power * code.length**2)


def decide(y_linear: float, threshold_db: float) -> bool:
    """Channel available iff the strength in dB is at or below the threshold
    (inclusive); zero strength is available for any threshold."""
    if y_linear < 0:
        raise DomainError("sensing strength cannot be negative")
    if y_linear == 0.0:
        return True
    return linear_to_db(y_linear) <= threshold_db


def sensing_outcome(y_linear: float, threshold_db: float, channel_index: int | None = None) -> SensingOutcome:
    y_db = linear_to_db(y_linear) if y_linear > 0 else -math.inf
    return SensingOutcome(y_linear, y_db, decide(y_linear, threshold_db), channel_index)


def multi_channel_select(decisions, rng: RngStream):
    """Uniformly pick one available channel index, or None when all busy."""
    available = [i for i, ok in enumerate(decisions) if ok]
    if not available:
        return None
    g = rng.generator()
    return available[int(g.integers(len(available)))]


@dataclass(frozen=True)
class AdmittedRaSample:
    """Rejection-sampling result: admitted RA channel columns and the
    acceptance rate (an estimate of the single-channel availability)."""

    columns: np.ndarray  # (M, n_ra)
    acceptance_rate: float
    attempts: int

    def __post_init__(self) -> None:
        self.columns.setflags(write=False)


def candidate_strengths(beams: BeamformerSet, h_candidates: np.ndarray) -> np.ndarray:
    """Noiseless sensing strength sum_i |b_i^T h|^2 / M per candidate column."""
    return np.sum(np.abs(beams.rows @ h_candidates) ** 2, axis=0) / beams.n_antennas


def sample_admitted_ra_ues(
    h_assigned: np.ndarray,
    beams: BeamformerSet,
    n_ra: int,
    threshold_db: float,
    channel_params,
    rng: RngStream,
    max_attempts_per_ue: int = DEFAULT_MAX_ATTEMPTS_PER_UE,
) -> AdmittedRaSample:
    """Draw RA channels conditioned on passing the noiseless sensing test.

    Rejection sampling is exact for the conditional law. Candidates are
    drawn in adaptive batches from per-batch substreams, which keeps the
    result a deterministic function of (inputs, rng). A UE slot that sees
    more than ``max_attempts_per_ue`` consecutive rejections raises
    :class:`AdmissionExhausted`.
    """
    m = beams.n_antennas
    if n_ra < 0:
        raise DomainError("n_ra must be nonnegative")
    if n_ra == 0:
        return AdmittedRaSample(np.zeros((m, 0), dtype=np.complex128), 1.0, 0)
    lam_lin = db_to_linear(threshold_db)  # +/-inf map to inf / 0.0

    if isinstance(channel_params, SimplifiedChannelParams):
        draw = lambda n, stream: draw_simplified_channel(channel_params, n, stream)
    else:
        draw = lambda n, stream: draw_practical_channel(channel_params, n, stream)

    kept: list[np.ndarray] = []
    n_kept = 0
    attempts = 0
    accepted = 0
    since_last_accept = 0
    batch_index = 0
    batch = min(max(4 * n_ra, 256), 4096)
    while n_kept < n_ra:
        cand = draw(batch, rng.child(batch_index))
        batch_index += 1
        y = candidate_strengths(beams, cand)
        ok = y <= lam_lin
        # enforce the per-UE attempt budget on the sequential attempt order
        hits = np.flatnonzero(ok)
        prev = -1
        for pos in hits:
            since_last_accept += int(pos) - prev - 1
            if since_last_accept >= max_attempts_per_ue:
                raise AdmissionExhausted(
                    f"no admissible RA channel within {max_attempts_per_ue} attempts at threshold {threshold_db} dB"
                )
            since_last_accept = 0
            prev = int(pos)
        since_last_accept += batch - 1 - prev
        if since_last_accept >= max_attempts_per_ue:
            raise AdmissionExhausted(
                f"no admissible RA channel within {max_attempts_per_ue} attempts at threshold {threshold_db} dB"
            )
        attempts += batch
        accepted += int(ok.sum())
        if hits.size:
            kept.append(cand[:, ok])
            n_kept += hits.size
        # Laplace-smoothed rate guess: an unlucky first batch must not blow
        # up the next batch size
        rate_guess = (accepted + 1.0) / (attempts + 2.0)
        batch = int(min(max(64, math.ceil(1.3 * (n_ra - n_kept) / rate_guess)), 8192))
    columns = np.concatenate(kept, axis=1)[:, :n_ra]
    return AdmittedRaSample(np.ascontiguousarray(columns), accepted / attempts, attempts)
