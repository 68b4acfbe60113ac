"""Scenario configuration: defaults, flat key=value file parsing,
validation, and adapters to the channel/analytic parameter types.

File format: one ``key = value`` per line, ``#`` starts a comment, blank
lines ignored. An empty file yields the default scenario (100 antennas,
50 paths, 8 assigned UEs, code length 8, practical model). Inline
``--set key=value`` overrides win over file values.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass

from .analytic import AnalyticParams
from .channel import PRACTICAL, SIMPLIFIED, PracticalChannelParams, SimplifiedChannelParams
from .errors import ParseError, ValidationError
from .numerics import db_to_linear
from .uplink import DIRECT, PROJECTED, UplinkConfig

_INT_FIELDS = {"antennas", "paths", "assigned_ues", "code_length", "ra_ues", "channels", "seed"}
_FLOAT_FIELDS = {
    "threshold_db", "vc_snr_db", "uplink_snr_db",
    "angle_spread_deg", "antenna_spacing", "azimuth_min_deg", "azimuth_max_deg",
}
_STR_FIELDS = {"model", "beamformer", "ra_receiver"}
KNOWN_KEYS = _INT_FIELDS | _FLOAT_FIELDS | _STR_FIELDS


@dataclass(frozen=True)
class ScenarioConfig:
    """Complete protocol and channel parameter set for one scenario."""

    model: str = PRACTICAL
    beamformer: str = "cb"
    antennas: int = 100
    paths: int | None = None  # defaults to antennas // 2
    assigned_ues: int = 8
    code_length: int = 8
    ra_ues: int = 10
    channels: int = 1
    threshold_db: float = 0.0
    vc_snr_db: float = 10.0
    uplink_snr_db: float = -10.0
    angle_spread_deg: float = 20.0
    antenna_spacing: float = 0.5
    azimuth_min_deg: float = -60.0
    azimuth_max_deg: float = 60.0
    ra_receiver: str = DIRECT
    seed: int = 12345

    def __post_init__(self) -> None:
        if self.paths is None:
            object.__setattr__(self, "paths", self.antennas // 2)
        if self.model not in (PRACTICAL, SIMPLIFIED):
            raise ValidationError(f"model must be 'practical' or 'simplified', got {self.model!r}")
        if self.beamformer not in ("cb", "zf"):
            raise ValidationError(f"beamformer must be 'cb' or 'zf', got {self.beamformer!r}")
        if self.ra_receiver not in (DIRECT, PROJECTED):
            raise ValidationError(f"ra_receiver must be 'direct' or 'projected', got {self.ra_receiver!r}")
        if self.antennas < 1:
            raise ValidationError("antennas must be >= 1")
        if not 1 <= self.paths <= self.antennas:
            raise ValidationError(f"paths must satisfy 1 <= paths <= antennas, got {self.paths}")
        if self.code_length < 1 or (self.code_length & (self.code_length - 1)) != 0:
            raise ValidationError(f"code_length must be a power of two, got {self.code_length}")
        if not 1 <= self.assigned_ues <= self.code_length:
            raise ValidationError(
                f"assigned_ues must satisfy 1 <= assigned_ues <= code_length, got {self.assigned_ues}"
            )
        if self.beamformer == "zf" and self.assigned_ues > self.antennas:
            raise ValidationError("zero-forcing needs assigned_ues <= antennas")
        if self.ra_ues < 0:
            raise ValidationError("ra_ues must be nonnegative")
        if self.channels < 1:
            raise ValidationError("channels must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValidationError("seed must be an unsigned 64-bit integer")
        if self.model == PRACTICAL:
            self.channel_params()  # runs the practical-geometry validation

    def channel_params(self):
        if self.model == SIMPLIFIED:
            return SimplifiedChannelParams(self.antennas, self.paths, basis_seed=self.seed)
        return PracticalChannelParams(
            n_antennas=self.antennas,
            n_paths=self.paths,
            antenna_spacing=self.antenna_spacing,
            azimuth_range_deg=(self.azimuth_min_deg, self.azimuth_max_deg),
            angle_spread_deg=self.angle_spread_deg,
        )

    def analytic_params(self, n_ra: int | None = None, threshold_db: float | None = None) -> AnalyticParams:
        return AnalyticParams(
            n_antennas=self.antennas,
            n_paths=self.paths,
            n_assigned=self.assigned_ues,
            threshold_db=self.threshold_db if threshold_db is None else threshold_db,
            n_channels=self.channels,
            uplink_snr=db_to_linear(self.uplink_snr_db),
            n_ra=self.ra_ues if n_ra is None else n_ra,
        )

    def uplink_config(self) -> UplinkConfig:
        return UplinkConfig(self.uplink_snr_db, self.ra_receiver)

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


def _convert(key: str, raw: str, where: str):
    raw = raw.strip()
    try:
        if key in _INT_FIELDS:
            return int(raw)
        if key in _FLOAT_FIELDS:
            return float(raw)
        return raw
    except ValueError as exc:
        raise ParseError(f"{where}: cannot parse value {raw!r} for key {key!r}") from exc


def parse_kv_overrides(pairs) -> dict:
    """Parse repeated ``--set key=value`` strings into a typed mapping."""
    out = {}
    for pair in pairs or ():
        if "=" not in pair:
            raise ParseError(f"override {pair!r} is not of the form key=value")
        key, raw = pair.split("=", 1)
        key = key.strip()
        if key not in KNOWN_KEYS:
            raise ParseError(f"unknown configuration key {key!r}")
        out[key] = _convert(key, raw, f"override {pair!r}")
    return out


def parse_config(path=None, overrides: dict | None = None) -> ScenarioConfig:
    """Load a scenario file (optional) and apply overrides, then validate."""
    values: dict = {}
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                lines = fh.readlines()
        except OSError as exc:
            raise ParseError(f"cannot read scenario file {path}: {exc}") from exc
        for lineno, line in enumerate(lines, start=1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            if "=" not in stripped:
                raise ParseError(f"{path}:{lineno}: expected 'key = value', got {line.rstrip()!r}")
            key, raw = stripped.split("=", 1)
            key = key.strip()
            if key not in KNOWN_KEYS:
                raise ParseError(f"{path}:{lineno}: unknown configuration key {key!r}")
            values[key] = _convert(key, raw, f"{path}:{lineno}")
    values.update(overrides or {})
    return ScenarioConfig(**values)
