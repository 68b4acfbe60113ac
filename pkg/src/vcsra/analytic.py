"""Closed-form approximations for the simplified channel model: density of
the normalized sensing strength, availability probabilities, conditional RA
interference, asymptotic deterministic-equivalent SINRs, and threshold
calibration.

The scaled threshold is ``lam_bar = M * lambda_linear / tr(Phi^2) =
Q * lambda_linear / M``. With ``sq = sqrt(Q)`` the density parameters are
``beta = sq / (sq + N_A - 1)``, ``eta = N_A / (sq + N_A - 1)`` and the tail
rate ``c = sq / (sq - 1)``.

Note on the conditional-interference bracket: the closed form implemented
here is the exact integral of the density,

    eta^{1-N_A} (1/beta - (L + 1/beta) e^{-beta L})
        - (1-eta)(1/c) sum_n (1/n!) eta^{n+1-N_A} gamma_low(n+2, cL),

with gamma_low the lower incomplete gamma. It matches numerical quadrature
of the first moment to machine precision and has the correct limits at
L -> 0 (zero) and L -> infinity (mean of the density).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateThreshold, DomainError, InfeasibleTarget
from .numerics import db_to_linear, upper_incomplete_gamma_int

_MIN_AVAILABILITY = 1e-12


@dataclass(frozen=True)
class AnalyticParams:
    """Inputs of the closed forms (uplink SNR is linear)."""

    n_antennas: int
    n_paths: int
    n_assigned: int
    threshold_db: float
    n_channels: int = 1
    uplink_snr: float = 1.0
    n_ra: int = 0

    def __post_init__(self) -> None:
        if self.n_paths < 2:
            raise DomainError("closed forms need n_paths >= 2")
        if self.n_assigned < 1:
            raise DomainError("need at least one assigned UE")
        if self.n_channels < 1:
            raise DomainError("need at least one channel")
        if self.n_ra < 0:
            raise DomainError("n_ra must be nonnegative")
        if self.uplink_snr <= 0:
            raise DomainError("uplink SNR must be positive")
        if self.n_antennas < self.n_paths:
            raise DomainError("n_antennas must be >= n_paths")

    @property
    def beta(self) -> float:
        sq = math.sqrt(self.n_paths)
        return sq / (sq + self.n_assigned - 1)

    @property
    def eta(self) -> float:
        sq = math.sqrt(self.n_paths)
        return self.n_assigned / (sq + self.n_assigned - 1)

    @property
    def tail_rate(self) -> float:
        sq = math.sqrt(self.n_paths)
        return sq / (sq - 1)

    @property
    def tr_phi2(self) -> float:
        return self.n_antennas**2 / self.n_paths

    @property
    def scaled_threshold(self) -> float:
        return self.n_antennas * db_to_linear(self.threshold_db) / self.tr_phi2


def pdf_ybar(y, params: AnalyticParams):
    """Approximate density of the normalized sensing strength at ``y``."""
    arr = np.asarray(y, dtype=float)
    if np.any(arr < 0):
        raise DomainError("density argument must be nonnegative")
    na = params.n_assigned
    beta, eta, c = params.beta, params.eta, params.tail_rate
    tail = np.zeros_like(arr)
    term = np.ones_like(arr)
    for n in range(na - 1):
        if n > 0:
            term = term * (c * eta * arr / n)
        tail = tail + term
    val = beta * eta ** (-na + 1) * (np.exp(-beta * arr) - np.exp(-c * arr) * tail)
    val = np.where((val < 0) & (val > -1e-12), 0.0, val)  # rounding-level negatives only
    return float(val) if np.isscalar(y) or arr.ndim == 0 else val


def p_av_single_scaled(lam_bar: float, n_paths: int, n_assigned: int) -> float:
    """Single-channel availability probability at a scaled threshold."""
    if lam_bar < 0:
        raise DomainError("scaled threshold must be nonnegative")
    if math.isinf(lam_bar):
        return 1.0
    sq = math.sqrt(n_paths)
    beta = sq / (sq + n_assigned - 1)
    eta = n_assigned / (sq + n_assigned - 1)
    c = sq / (sq - 1)
    acc = sum(
        (1.0 / math.factorial(n)) * eta ** (n - n_assigned + 1) * upper_incomplete_gamma_int(n + 1, c * lam_bar)
        for n in range(n_assigned - 1)
    )
    p = 1.0 - eta ** (-n_assigned + 1) * math.exp(-beta * lam_bar) + (1.0 - eta) * acc
    return min(max(p, 0.0), 1.0)


def p_av_single(params: AnalyticParams) -> float:
    return p_av_single_scaled(params.scaled_threshold, params.n_paths, params.n_assigned)


def p_av_multi(p_sc: float, n_channels: int) -> float:
    """Availability over ``n_channels`` independent channels."""
    if not 0.0 <= p_sc <= 1.0:
        raise DomainError(f"single-channel probability must be in [0, 1], got {p_sc}")
    if n_channels < 1:
        raise DomainError("need at least one channel")
    return 1.0 - (1.0 - p_sc) ** n_channels


def _interference_bracket(lam_bar: float, n_paths: int, n_assigned: int) -> float:
    """Exact first moment of the density on [0, lam_bar]."""
    sq = math.sqrt(n_paths)
    beta = sq / (sq + n_assigned - 1)
    eta = n_assigned / (sq + n_assigned - 1)
    c = sq / (sq - 1)
    if math.isinf(lam_bar):
        head = eta ** (1 - n_assigned) / beta
        gamma_low = [math.factorial(n + 1) for n in range(n_assigned - 1)]
    else:
        damp = math.exp(-beta * lam_bar)
        head = eta ** (1 - n_assigned) * (1.0 / beta - (lam_bar + 1.0 / beta) * damp)
        gamma_low = [
            math.factorial(n + 1) - upper_incomplete_gamma_int(n + 2, c * lam_bar)
            for n in range(n_assigned - 1)
        ]
    tail = sum(
        (1.0 / math.factorial(n)) * eta ** (n + 1 - n_assigned) * gamma_low[n]
        for n in range(n_assigned - 1)
    )
    return head - (1.0 - eta) * (1.0 / c) * tail


def ra_interference_expectation(params: AnalyticParams) -> float:
    """Expected per-assigned-UE interference power from ``n_ra`` admitted
    RA UEs, conditioned on each passing the sensing test."""
    if params.n_ra == 0:
        return 0.0
    p_sc = p_av_single(params)
    if p_sc < _MIN_AVAILABILITY:
        raise DegenerateThreshold(
            f"availability {p_sc:.3e} underflows at threshold {params.threshold_db} dB; "
            "the conditional interference is a 0/0 form"
        )
    prefactor = params.tr_phi2 * params.n_ra * params.uplink_snr / (params.n_assigned * params.n_antennas * p_sc)
    return prefactor * _interference_bracket(params.scaled_threshold, params.n_paths, params.n_assigned)


def asymptotic_sinr_cb(params: AnalyticParams) -> float:
    """Deterministic-equivalent conjugate-beamforming SINR per assigned UE."""
    m = params.n_antennas
    rho = params.uplink_snr
    signal = rho / m * float(m) ** 2  # tr^2(Phi) / M
    intra = (params.n_assigned - 1) * rho * params.tr_phi2 / m
    return signal / (1.0 + intra + ra_interference_expectation(params))


def asymptotic_sinr_zf(params: AnalyticParams) -> float:
    """Deterministic-equivalent zero-forcing SINR per assigned UE."""
    m, q, na = params.n_antennas, params.n_paths, params.n_assigned
    if q <= na - 1:
        raise DomainError("zero-forcing moment needs n_paths > n_assigned - 1")
    mean_inv_norm = m - m / q * (na - 1)
    return params.uplink_snr * mean_inv_norm / (1.0 + ra_interference_expectation(params))


def asymptotic_rate(gamma_bar: float) -> float:
    """log2(1 + gamma_bar); per-UE sum rates follow by multiplying by N_A."""
    if gamma_bar < 0:
        raise DomainError("SINR must be nonnegative")
    return math.log2(1.0 + gamma_bar)


@dataclass(frozen=True)
class AvailabilityTarget:
    """Calibrate the threshold to hit this multi-channel availability."""

    p_av: float
    n_channels: int = 1


@dataclass(frozen=True)
class InterferenceTarget:
    """Calibrate the threshold to this per-assigned-UE interference budget."""

    budget: float


@dataclass(frozen=True)
class EmpiricalAvailabilityCurve:
    """Simulated single-channel availability versus threshold, used to
    calibrate models (e.g. the practical one) with no closed form."""

    lambda_db: np.ndarray
    p_sc: np.ndarray

    def __post_init__(self) -> None:
        if len(self.lambda_db) != len(self.p_sc) or len(self.lambda_db) < 2:
            raise DomainError("curve needs matching grids with at least two points")


_LAMBDA_DB_LO = -80.0
_LAMBDA_DB_HI = 60.0
_LAMBDA_DB_TOL = 0.005


def _bisect_lambda_db(fn, target: float, lo: float, hi: float) -> float:
    """Root of monotone-nondecreasing ``fn`` on a dB bracket, to 0.005 dB."""
    f_lo, f_hi = fn(lo), fn(hi)
    if target < f_lo or target > f_hi:
        raise InfeasibleTarget(f"target {target:.6g} outside achievable range [{f_lo:.6g}, {f_hi:.6g}]")
    while hi - lo > _LAMBDA_DB_TOL:
        mid = 0.5 * (lo + hi)
        if fn(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def calibrate_lambda(target, params: AnalyticParams, p_sc_curve: EmpiricalAvailabilityCurve | None = None) -> float:
    """Threshold (dB) meeting an availability or interference target.

    With ``p_sc_curve`` supplied, availability targets are inverted against
    the monotonized empirical curve instead of the closed form; otherwise
    bisection runs on the closed forms (0.01 dB accuracy).
    """
    if isinstance(target, AvailabilityTarget):
        if not 0.0 < target.p_av < 1.0:
            raise InfeasibleTarget("availability target must be strictly inside (0, 1)")
        p_sc_needed = 1.0 - (1.0 - target.p_av) ** (1.0 / target.n_channels)
        if p_sc_curve is not None:
            grid = np.asarray(p_sc_curve.lambda_db, dtype=float)
            p = np.maximum.accumulate(np.asarray(p_sc_curve.p_sc, dtype=float))
            if not (p[0] <= p_sc_needed <= p[-1]):
                raise InfeasibleTarget(
                    f"needed single-channel availability {p_sc_needed:.4g} outside the "
                    f"simulated curve range [{p[0]:.4g}, {p[-1]:.4g}]"
                )
            return float(np.interp(p_sc_needed, p, grid))
        q, na, m = params.n_paths, params.n_assigned, params.n_antennas

        def p_at(lam_db: float) -> float:
            return p_av_single_scaled(q * db_to_linear(lam_db) / m, q, na)

        # below ~1e-9 the closed form is dominated by cancellation noise
        if p_sc_needed <= max(p_at(_LAMBDA_DB_LO), 1e-9):
            raise InfeasibleTarget(
                f"needed single-channel availability {p_sc_needed:.3g} is at or below the "
                "resolution of the closed form at the lower threshold bracket"
            )
        return _bisect_lambda_db(p_at, p_sc_needed, _LAMBDA_DB_LO, _LAMBDA_DB_HI)

    if isinstance(target, InterferenceTarget):
        if target.budget <= 0:
            raise InfeasibleTarget("interference budget must be positive")
        if params.n_ra < 1:
            raise InfeasibleTarget("an interference budget needs n_ra >= 1 in the parameters")

        def interference_at(lam_db: float) -> float:
            p = AnalyticParams(
                params.n_antennas, params.n_paths, params.n_assigned, lam_db,
                params.n_channels, params.uplink_snr, params.n_ra,
            )
            try:
                return ra_interference_expectation(p)
            except DegenerateThreshold:
                return 0.0

        return _bisect_lambda_db(interference_at, target.budget, _LAMBDA_DB_LO, _LAMBDA_DB_HI)

    raise DomainError(f"unknown calibration target {type(target).__name__}")
