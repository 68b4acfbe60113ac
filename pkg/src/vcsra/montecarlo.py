"""Seeded, trial-parallel Monte-Carlo experiment engine.

Every trial draws its randomness from a substream derived from
``(master_seed, trial_index)``, so results are bit-identical for a given
:class:`ExperimentSpec` regardless of chunking or worker count, and the
three comparison arms (no-RA upper bound, VCS-admitted, unfiltered lower
bound) share the same assigned-UE realizations for variance reduction.

Availability is estimated protocol-level: each trial exposes a fresh RA UE
to ``channels`` independently drawn channels (fresh assigned UEs,
beamformers, and RA fading per channel) and counts trials with at least
one available channel. Sensing for availability is noiseless unless a
finite virtual-carrier SNR is requested.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import analytic
from .analytic import AnalyticParams, AvailabilityTarget, EmpiricalAvailabilityCurve, calibrate_lambda
from .beamforming import make_beamformers
from .channel import (
    PRACTICAL,
    SIMPLIFIED,
    SimplifiedChannelParams,
    draw_practical_channel,
    draw_simplified_channel,
    practical_fading_draws,
    steered_columns,
)
from .config import ScenarioConfig
from .errors import ConfigError, DegenerateThreshold, DomainError, SingularMatrix, UnknownFigure
from .numerics import RngStream, db_to_linear, standard_complex_gaussian
from .uplink import DIRECT, PROJECTED, assigned_sinr_cb, assigned_sinr_zf, ra_sinr, sinr_values
from .vcs import sample_admitted_ra_ues

ESTIMATORS = frozenset({"p_av", "assigned_rate", "ra_sum_rate", "total_sum_rate"})
BASELINES = frozenset({"upper_no_ra", "lower_unfiltered"})

# substream purposes within one trial
_ASSIGNED, _RA_SENSE, _RA_ADMIT, _RA_UNFILTERED = range(4)


@dataclass(frozen=True)
class ExperimentSpec:
    """A reproducible experiment: scenario, size, seed, and outputs."""

    scenario: ScenarioConfig
    trials: int = 10_000
    master_seed: int | None = None
    estimators: frozenset = field(default_factory=lambda: frozenset(ESTIMATORS))
    baselines: frozenset = field(default_factory=lambda: frozenset(BASELINES))
    threads: int = 1

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.master_seed is None:
            object.__setattr__(self, "master_seed", self.scenario.seed)
        unknown = set(self.estimators) - ESTIMATORS
        if unknown:
            raise ConfigError(f"unknown estimators {sorted(unknown)}")
        unknown = set(self.baselines) - BASELINES
        if unknown:
            raise ConfigError(f"unknown baselines {sorted(unknown)}")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")

    def root_stream(self) -> RngStream:
        return RngStream(self.master_seed, 0)


@dataclass(frozen=True)
class PavEstimate:
    """Multi-channel availability estimate with binomial confidence."""

    p_hat: float
    ci_halfwidth: float
    p_sc_hat: float
    trials: int


@dataclass(frozen=True)
class RateReport:
    """Ergodic-rate estimates (b/s/Hz) with baselines and confidence."""

    per_assigned_rate: float
    ra_sum_rate: float
    total_sum_rate: float
    baseline_rates: dict
    ra_sum_rate_by_mode: dict
    ci_halfwidth: dict
    trials_used: int
    acceptance_rate: float


def binomial_ci_halfwidth(p_hat: float, n: int) -> float:
    return 1.96 * math.sqrt(max(p_hat * (1.0 - p_hat), 0.0) / n)


def mean_ci_halfwidth(samples: np.ndarray) -> float:
    n = len(samples)
    if n < 2:
        return float("inf")
    return 1.96 * float(np.std(samples, ddof=1)) / math.sqrt(n)


def _draw_channels(params, n: int, stream: RngStream) -> np.ndarray:
    if isinstance(params, SimplifiedChannelParams):
        return draw_simplified_channel(params, n, stream)
    return draw_practical_channel(params, n, stream)


# batched channel construction sweet spot: working arrays stay cache-resident
_MAX_BATCH_UES = 1_024


def _batched_draws(params, streams, n_per: int) -> np.ndarray:
    """Channels for many per-trial streams in few vectorized constructions.

    Each stream contributes ``n_per`` columns drawn exactly as the
    single-stream functions would (construction is column-independent), so
    results do not depend on how trials are grouped into batches.
    Returns (M, len(streams) * n_per).
    """
    m = params.n_antennas
    if n_per == 0 or not streams:
        return np.zeros((m, len(streams) * n_per), dtype=np.complex128)
    group = max(1, _MAX_BATCH_UES // n_per)
    parts = []
    for g0 in range(0, len(streams), group):
        chunk = streams[g0 : g0 + group]
        if isinstance(params, SimplifiedChannelParams):
            q = params.n_paths
            v = np.concatenate(
                [standard_complex_gaussian(s.generator(), (q, n_per)) for s in chunk], axis=1
            )
            parts.append(math.sqrt(m / q) * (params.mixing_basis() @ v))
        else:
            draws = [practical_fading_draws(params, n_per, s) for s in chunk]
            cosines = np.concatenate([d[0] for d in draws], axis=0)
            v = np.concatenate([d[1] for d in draws], axis=0)
            parts.append(steered_columns(cosines, v, m, params.antenna_spacing))
    return np.concatenate(parts, axis=1) if len(parts) > 1 else parts[0]


def _chunks(n_trials: int, n_chunks: int):
    edges = np.linspace(0, n_trials, n_chunks + 1, dtype=int)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def _run_blocks(spec: ExperimentSpec, worker, combine):
    if spec.threads == 1:
        return combine([worker(spec, 0, spec.trials)])
    parts = _chunks(spec.trials, spec.threads * 4)
    with ProcessPoolExecutor(max_workers=spec.threads) as pool:
        futures = [pool.submit(worker, spec, lo, hi) for lo, hi in parts]
        return combine([f.result() for f in futures])


# --------------------------------------------------------------------------
# availability
# --------------------------------------------------------------------------

def _sensing_strength_block(spec: ExperimentSpec, lo: int, hi: int) -> np.ndarray:
    """Noiseless sensing strengths, shape (hi - lo, channels)."""
    sc = spec.scenario
    params = sc.channel_params()
    m, na, n_c = sc.antennas, sc.assigned_ues, sc.channels
    root = spec.root_stream()
    out = np.empty((hi - lo, n_c))
    group = max(1, _MAX_BATCH_UES // (n_c * (na + 1)))
    for g0 in range(lo, hi, group):
        g1 = min(g0 + group, hi)
        trials = [root.child(t) for t in range(g0, g1)]
        b = len(trials)
        h_a = _batched_draws(params, [t.child(_ASSIGNED) for t in trials], n_c * na)
        h_r = _batched_draws(params, [t.child(_RA_SENSE) for t in trials], n_c)
        h_a = h_a.reshape(m, b, n_c, na)
        h_r = h_r.reshape(m, b, n_c)
        if sc.beamformer == "cb":
            ip = np.einsum("mbci,mbc->bci", h_a.conj(), h_r)
        else:
            stack = np.transpose(h_a, (1, 2, 0, 3)).reshape(b * n_c, m, na)
            pinv = np.linalg.pinv(stack)
            norms = np.linalg.norm(pinv, axis=2, keepdims=True)
            rows = (math.sqrt(m) * pinv / norms).reshape(b, n_c, na, m)
            ip = np.einsum("bcim,mbc->bci", rows, h_r)
        out[g0 - lo : g1 - lo] = np.sum(np.abs(ip) ** 2, axis=2) / m
    return out


def collect_sensing_strengths(spec: ExperimentSpec) -> np.ndarray:
    """(trials, channels) noiseless sensing strengths; threshold-free, so a
    threshold sweep can reuse one collection."""
    return _run_blocks(spec, _sensing_strength_block, lambda blocks: np.concatenate(blocks, axis=0))


def availability_from_strengths(strengths: np.ndarray, threshold_db: float) -> PavEstimate:
    lam_lin = db_to_linear(threshold_db)
    avail = strengths <= lam_lin
    hit = np.any(avail, axis=1)
    p_hat = float(np.mean(hit))
    return PavEstimate(p_hat, binomial_ci_halfwidth(p_hat, len(hit)), float(np.mean(avail)), len(hit))


def estimate_p_av(spec: ExperimentSpec, strengths: np.ndarray | None = None) -> PavEstimate:
    """Fraction of trials in which a fresh RA UE finds >= 1 available channel."""
    if strengths is None:
        strengths = collect_sensing_strengths(spec)
    return availability_from_strengths(strengths, spec.scenario.threshold_db)


def estimate_p_sc_curve(spec: ExperimentSpec, lambda_grid_db) -> EmpiricalAvailabilityCurve:
    """Simulated single-channel availability over a threshold grid, from one
    pool of sensing draws (common random numbers across the grid)."""
    single = ExperimentSpec(
        spec.scenario.replace(channels=1), spec.trials, spec.master_seed, threads=spec.threads
    )
    y = collect_sensing_strengths(single)[:, 0]
    grid = np.asarray(list(lambda_grid_db), dtype=float)
    p = np.array([float(np.mean(y <= db_to_linear(l))) for l in grid])
    return EmpiricalAvailabilityCurve(grid, p)


# --------------------------------------------------------------------------
# rates
# --------------------------------------------------------------------------

def _assigned_breakdowns(h_a, h_r, kind: str, rho: float):
    if kind == "cb":
        return assigned_sinr_cb(h_a, h_r, rho)
    return assigned_sinr_zf(h_a, h_r, rho)


def _rate_trial_block(spec: ExperimentSpec, lo: int, hi: int) -> dict:
    sc = spec.scenario
    params = sc.channel_params()
    rho = db_to_linear(sc.uplink_snr_db)
    n_r = sc.ra_ues
    kind = sc.beamformer
    root = spec.root_stream()
    n = hi - lo
    out = {
        "upper": np.zeros(n),
        "vcs": np.zeros(n),
        "lower": np.zeros(n),
        "ra_direct": np.zeros(n),
        "ra_projected": np.zeros(n),
        "acceptance": np.zeros(n),
    }
    trials = [root.child(t) for t in range(lo, hi)]
    m, n_a = sc.antennas, sc.assigned_ues
    h_a_all = _batched_draws(params, [t.child(_ASSIGNED) for t in trials], n_a)
    want_lower = "lower_unfiltered" in spec.baselines and n_r > 0
    h_low_all = _batched_draws(params, [t.child(_RA_UNFILTERED) for t in trials], n_r) if want_lower else None
    empty = np.zeros((m, 0), dtype=np.complex128)
    for i, trial in enumerate(trials):
        h_a = h_a_all[:, i * n_a : (i + 1) * n_a]
        upper = float(np.mean(np.log2(1.0 + sinr_values(_assigned_breakdowns(h_a, empty, kind, rho)))))
        out["upper"][i] = upper
        if n_r == 0:
            out["vcs"][i] = upper
            out["lower"][i] = upper
            continue
        beams = make_beamformers(h_a, kind)
        admitted = sample_admitted_ra_ues(
            h_a, beams, n_r, sc.threshold_db, params, trial.child(_RA_ADMIT)
        )
        h_r = admitted.columns
        out["acceptance"][i] = admitted.acceptance_rate
        out["vcs"][i] = float(np.mean(np.log2(1.0 + sinr_values(_assigned_breakdowns(h_a, h_r, kind, rho)))))
        if want_lower:
            h_low = h_low_all[:, i * n_r : (i + 1) * n_r]
            out["lower"][i] = float(
                np.mean(np.log2(1.0 + sinr_values(_assigned_breakdowns(h_a, h_low, kind, rho))))
            )
        out["ra_direct"][i] = float(np.sum(np.log2(1.0 + sinr_values(ra_sinr(h_a, h_r, rho, DIRECT, kind)))))
        try:
            out["ra_projected"][i] = float(
                np.sum(np.log2(1.0 + sinr_values(ra_sinr(h_a, h_r, rho, PROJECTED, kind))))
            )
        except SingularMatrix:
            # ill-conditioned assigned set: zero-forcing sensing cannot
            # protect near-degenerate directions, so admitted channels can
            # collapse onto the assigned span and their projections become
            # dependent; the exact projected-ZF SINRs are ~0 there
            out["ra_projected"][i] = 0.0
    return out


def estimate_rates(spec: ExperimentSpec) -> RateReport:
    """Seed-paired ergodic rates: VCS-admitted main arm plus the no-RA upper
    and unfiltered lower baselines."""
    def combine(blocks):
        return {k: np.concatenate([b[k] for b in blocks]) for k in blocks[0]}

    acc = _run_blocks(spec, _rate_trial_block, combine)
    sc = spec.scenario
    per_assigned = float(np.mean(acc["vcs"]))
    ra_by_mode = {
        DIRECT: float(np.mean(acc["ra_direct"])),
        PROJECTED: float(np.mean(acc["ra_projected"])),
    }
    ra_sum = ra_by_mode[sc.ra_receiver]
    baselines = {}
    if "upper_no_ra" in spec.baselines:
        baselines["upper_no_ra"] = float(np.mean(acc["upper"]))
    if "lower_unfiltered" in spec.baselines and sc.ra_ues > 0:
        baselines["lower_unfiltered"] = float(np.mean(acc["lower"]))
    elif "lower_unfiltered" in spec.baselines:
        baselines["lower_unfiltered"] = float(np.mean(acc["upper"]))
    # mean of per-trial rates: the per-(H_A) acceptance varies, and pooling
    # raw attempt counts would over-weight low-availability realizations
    acceptance = float(np.mean(acc["acceptance"])) if sc.ra_ues > 0 else 1.0
    ci = {
        "per_assigned_rate": mean_ci_halfwidth(acc["vcs"]),
        "ra_sum_rate": mean_ci_halfwidth(acc["ra_direct" if sc.ra_receiver == DIRECT else "ra_projected"]),
        "upper_no_ra": mean_ci_halfwidth(acc["upper"]),
        "lower_unfiltered": mean_ci_halfwidth(acc["lower"]),
        "total_sum_rate": mean_ci_halfwidth(
            sc.assigned_ues * acc["vcs"] + acc["ra_direct" if sc.ra_receiver == DIRECT else "ra_projected"]
        ),
    }
    return RateReport(
        per_assigned_rate=per_assigned,
        ra_sum_rate=ra_sum,
        total_sum_rate=sc.assigned_ues * per_assigned + ra_sum,
        baseline_rates=baselines,
        ra_sum_rate_by_mode=ra_by_mode,
        ci_halfwidth=ci,
        trials_used=spec.trials,
        acceptance_rate=acceptance,
    )


# --------------------------------------------------------------------------
# sweeps and figure reproduction
# --------------------------------------------------------------------------

_AXIS_FIELDS = {"lambda_db": "threshold_db", "n_r": "ra_ues", "m": "antennas", "n_c": "channels"}


def _scenario_at(sc: ScenarioConfig, axis: str, value: float) -> ScenarioConfig:
    if axis == "lambda_db":
        return sc.replace(threshold_db=float(value))
    if axis == "n_r":
        return sc.replace(ra_ues=int(value))
    if axis == "n_c":
        return sc.replace(channels=int(value))
    if axis == "m":
        m = int(value)
        return sc.replace(antennas=m, paths=m // 2)  # Table-1 coupling Q = M/2
    raise ConfigError(f"unknown sweep axis {axis!r}; choose one of {sorted(_AXIS_FIELDS)}")


def _analytic_columns(sc: ScenarioConfig) -> dict:
    """Closed-form columns where defined (simplified model only)."""
    out = {"p_analytic": float("nan"), "rate_analytic": float("nan")}
    if sc.model != SIMPLIFIED:
        return out
    try:
        params = sc.analytic_params()
        p_sc = analytic.p_av_single(params)
        out["p_analytic"] = analytic.p_av_multi(p_sc, sc.channels)
        gamma = analytic.asymptotic_sinr_cb(params) if sc.beamformer == "cb" else analytic.asymptotic_sinr_zf(params)
        out["rate_analytic"] = analytic.asymptotic_rate(gamma)
    except (DomainError, DegenerateThreshold):
        pass  # closed forms undefined at this point (e.g. degenerate threshold)
    return out


def sweep(spec: ExperimentSpec, axis: str, grid) -> list[dict]:
    """One estimator row per grid value, all other parameters held.

    Threshold sweeps of the availability estimator reuse a single pool of
    sensing draws (the statistic does not depend on the threshold).
    """
    grid = list(grid)
    if not grid:
        raise ConfigError("sweep grid must be nonempty")
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise ConfigError("sweep grid must be monotone nondecreasing")
    if axis not in _AXIS_FIELDS:
        raise ConfigError(f"unknown sweep axis {axis!r}; choose one of {sorted(_AXIS_FIELDS)}")

    rows = []
    shared_strengths = None
    if axis == "lambda_db" and "p_av" in spec.estimators:
        shared_strengths = collect_sensing_strengths(spec)
    for value in grid:
        sc = _scenario_at(spec.scenario, axis, value)
        point = ExperimentSpec(sc, spec.trials, spec.master_seed, spec.estimators, spec.baselines, spec.threads)
        row = {axis: value}
        if "p_av" in spec.estimators:
            est = (
                availability_from_strengths(shared_strengths, sc.threshold_db)
                if shared_strengths is not None
                else estimate_p_av(point)
            )
            row.update(p_sim=est.p_hat, p_ci=est.ci_halfwidth, p_sc_sim=est.p_sc_hat)
        if spec.estimators & {"assigned_rate", "ra_sum_rate", "total_sum_rate"}:
            rep = estimate_rates(point)
            row.update(
                rate_assigned=rep.per_assigned_rate,
                rate_upper=rep.baseline_rates.get("upper_no_ra", float("nan")),
                rate_lower=rep.baseline_rates.get("lower_unfiltered", float("nan")),
                ra_sum_rate=rep.ra_sum_rate,
                total_sum_rate=rep.total_sum_rate,
                rate_ci=rep.ci_halfwidth["per_assigned_rate"],
                acceptance_rate=rep.acceptance_rate,
            )
        row.update(_analytic_columns(sc))
        rows.append(row)
    return rows


@dataclass(frozen=True)
class FigureTable:
    """Reproduction output: rows plus plotting metadata."""

    figure_id: str
    rows: list
    x_column: str
    y_columns: list
    series_column: str | None
    meta: dict


_DEFAULT_FIGURE_TRIALS = 10_000
_LAMBDA_GRID = list(range(-4, 9))
_NR_GRID = [0, 2, 4, 6, 8, 10]
_M_GRID = [50, 100, 150, 200, 250, 300]
_PRACTICAL_LAMBDA_DB = 4.0  # operating point with ~98% availability at 100 channels


def _figure_scenario(model: str, beamformer: str, seed: int, **kw) -> ScenarioConfig:
    return ScenarioConfig(model=model, beamformer=beamformer, seed=seed, **kw)


def _simplified_lambda_for_98(sc: ScenarioConfig) -> float:
    params = AnalyticParams(sc.antennas, sc.paths, sc.assigned_ues, 0.0)
    return calibrate_lambda(AvailabilityTarget(0.98, 100), params)


def reproduce_figure(figure_id: str, trials_scale: float = 1.0, seed: int = 12345, threads: int = 1) -> FigureTable:
    """Emit the parameter grid of a named result figure with simulated and,
    where defined, analytic columns."""
    if not 0.0 < trials_scale <= 1.0:
        raise ConfigError("trials_scale must be in (0, 1]")
    trials = max(1, int(round(_DEFAULT_FIGURE_TRIALS * trials_scale)))

    if figure_id in ("fig5", "fig6"):
        model = SIMPLIFIED if figure_id == "fig5" else PRACTICAL
        rows = []
        for n_c in (1, 10, 100):
            sc = _figure_scenario(model, "cb", seed, channels=n_c)
            spec = ExperimentSpec(sc, trials, seed, frozenset({"p_av"}), threads=threads)
            strengths = collect_sensing_strengths(spec)
            for lam in _LAMBDA_GRID:
                est = availability_from_strengths(strengths, float(lam))
                row = {"lambda_db": float(lam), "n_c": n_c, "p_sim": est.p_hat, "ci": est.ci_halfwidth}
                row["p_analytic"] = _analytic_columns(sc.replace(threshold_db=float(lam)))["p_analytic"]
                rows.append(row)
        return FigureTable(figure_id, rows, "lambda_db", ["p_sim", "p_analytic"], "n_c",
                           {"model": model, "trials": trials, "seed": seed})

    if figure_id in ("fig7", "fig8", "fig9", "fig10"):
        model = SIMPLIFIED if figure_id in ("fig7", "fig8") else PRACTICAL
        rho_db = -10.0 if figure_id in ("fig7", "fig9") else 0.0
        rows = []
        for beamformer in ("cb", "zf"):
            sc = _figure_scenario(model, beamformer, seed, uplink_snr_db=rho_db)
            lam_db = _simplified_lambda_for_98(sc) if model == SIMPLIFIED else _PRACTICAL_LAMBDA_DB
            sc = sc.replace(threshold_db=lam_db)
            for n_r in _NR_GRID:
                spec = ExperimentSpec(sc.replace(ra_ues=n_r), trials, seed, threads=threads)
                rep = estimate_rates(spec)
                row = {
                    "n_r": n_r, "beamformer": beamformer, "lambda_db": lam_db,
                    "rate_sim": rep.per_assigned_rate,
                    "rate_upper": rep.baseline_rates["upper_no_ra"],
                    "rate_lower": rep.baseline_rates["lower_unfiltered"],
                    "ci": rep.ci_halfwidth["per_assigned_rate"],
                }
                row["rate_analytic"] = _analytic_columns(sc.replace(ra_ues=n_r))["rate_analytic"]
                rows.append(row)
        return FigureTable(figure_id, rows, "n_r", ["rate_sim", "rate_upper", "rate_lower", "rate_analytic"],
                           "beamformer", {"model": model, "uplink_snr_db": rho_db, "trials": trials, "seed": seed})

    if figure_id == "fig11":
        rows = []
        for beamformer in ("cb", "zf"):
            for m in _M_GRID:
                sc = _figure_scenario("practical", beamformer, seed, uplink_snr_db=-10.0,
                                      threshold_db=_PRACTICAL_LAMBDA_DB, ra_ues=8)
                sc = sc.replace(antennas=m, paths=m // 2)
                spec = ExperimentSpec(sc, trials, seed, threads=threads)
                rep = estimate_rates(spec)
                rows.append({
                    "m": m, "beamformer": beamformer,
                    "rate_sim": rep.per_assigned_rate,
                    "rate_upper": rep.baseline_rates["upper_no_ra"],
                    "rate_lower": rep.baseline_rates["lower_unfiltered"],
                    "ci": rep.ci_halfwidth["per_assigned_rate"],
                })
        return FigureTable("fig11", rows, "m", ["rate_sim", "rate_upper", "rate_lower"], "beamformer",
                           {"model": "practical", "uplink_snr_db": -10.0, "trials": trials, "seed": seed})

    if figure_id in ("fig12", "fig13"):
        beamformer = "cb" if figure_id == "fig12" else "zf"
        sc = _figure_scenario("practical", beamformer, seed, uplink_snr_db=-10.0,
                              threshold_db=_PRACTICAL_LAMBDA_DB)
        rows = []
        for n_r in _NR_GRID:
            spec = ExperimentSpec(sc.replace(ra_ues=n_r), trials, seed, threads=threads)
            rep = estimate_rates(spec)
            n_a = sc.assigned_ues
            rows.append({
                "n_r": n_r, "beamformer": beamformer,
                "assigned_sum_upper": n_a * rep.baseline_rates["upper_no_ra"],
                "assigned_sum_vcs": n_a * rep.per_assigned_rate,
                "ra_sum_direct": rep.ra_sum_rate_by_mode[DIRECT],
                "ra_sum_projected": rep.ra_sum_rate_by_mode[PROJECTED],
                "total_sum": n_a * rep.per_assigned_rate + rep.ra_sum_rate_by_mode[sc.ra_receiver],
            })
        return FigureTable(figure_id, rows, "n_r",
                           ["assigned_sum_upper", "assigned_sum_vcs", "ra_sum_direct", "ra_sum_projected", "total_sum"],
                           None, {"model": "practical", "beamformer": beamformer, "trials": trials, "seed": seed})

    raise UnknownFigure(f"unknown figure id {figure_id!r}; expected fig5..fig13")
