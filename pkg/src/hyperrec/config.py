"""Flat ``key = value`` run configuration with command-line overrides."""

import configparser
import datetime as dt
from dataclasses import dataclass, fields, replace
from pathlib import Path

from .exceptions import ConfigError
from .recsys import DENOMINATORS, ModelKind
from .synthgen import SynthParams

_SECTION = "run"


@dataclass(frozen=True)
class RunConfig:
    data_dir: str = "data"
    out_dir: str = "out"
    tau_days: float = 365.0
    reference_date: dt.date | None = None
    cutoff: str = "0.8"
    clamp_eps: float = 1e-5
    n: tuple = (3, 5, 10)
    models: tuple = tuple(k.value for k in ModelKind)
    affinity_denominator: str = "literal"
    patient: str | None = None
    seed: int = 0
    branching: int = 4
    depth: int = 4
    n_patients: int = 1000
    n_doctors: int = 50
    visits_per_patient: int = 6
    codes_per_patient: int = 4
    affinity_sharpness: float = 3.0
    radius_step: float = 1.0

    def cutoff_value(self):
        """The cutoff as either a quantile (float) or a date."""
        try:
            return float(self.cutoff)
        except ValueError:
            return dt.date.fromisoformat(self.cutoff)

    def synth_params(self):
        return SynthParams(
            seed=self.seed,
            branching=self.branching,
            depth=self.depth,
            n_patients=self.n_patients,
            n_doctors=self.n_doctors,
            visits_per_patient=self.visits_per_patient,
            codes_per_patient=self.codes_per_patient,
            affinity_sharpness=self.affinity_sharpness,
            radius_step=self.radius_step,
            clamp_eps=self.clamp_eps,
        ).validate()

    def echo(self):
        """Config as plain strings, for embedding in reports."""
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = ",".join(str(x) for x in v)
            elif isinstance(v, dt.date):
                v = v.isoformat()
            out[f.name] = None if v is None else str(v)
        return out


KEYS = {f.name for f in fields(RunConfig)}


def _coerce(key, raw):
    raw = raw.strip()
    try:
        if key in ("tau_days", "clamp_eps", "affinity_sharpness", "radius_step"):
            return float(raw)
        if key in ("seed", "branching", "depth", "n_patients", "n_doctors",
                   "visits_per_patient", "codes_per_patient"):
            return int(raw)
        if key == "n":
            return tuple(int(x) for x in raw.split(",") if x.strip())
        if key == "models":
            return tuple(ModelKind(x.strip()).value for x in raw.split(",") if x.strip())
        if key == "reference_date":
            return None if raw.lower() in ("", "none") else dt.date.fromisoformat(raw)
        if key == "patient":
            return raw or None
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {raw!r}") from exc
    return raw


def validate(cfg):
    if not cfg.tau_days > 0:
        raise ConfigError("tau_days must be positive")
    if not 0 < cfg.clamp_eps < 1:
        raise ConfigError("clamp_eps must lie in (0, 1)")
    if not cfg.n or min(cfg.n) < 1:
        raise ConfigError("n must list positive integers")
    if not cfg.models:
        raise ConfigError("models must name at least one model")
    if cfg.affinity_denominator not in DENOMINATORS:
        raise ConfigError(f"affinity_denominator must be one of {', '.join(DENOMINATORS)}")
    try:
        cut = cfg.cutoff_value()
    except ValueError as exc:
        raise ConfigError(f"cutoff must be a quantile in (0, 1) or an ISO date, got {cfg.cutoff!r}") from exc
    if isinstance(cut, float) and not 0 < cut < 1:
        raise ConfigError("cutoff quantile must lie in (0, 1)")
    cfg.synth_params()
    return cfg


def parse_overrides(items):
    out = {}
    for item in items or ():
        if "=" not in item:
            raise ConfigError(f"override must look like key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v
    return out


def load_config(path=None, overrides=None):
    """Read ``path`` (optional) then apply ``overrides`` (mapping of raw strings).

    Unknown keys are rejected.
    """
    raw = {}
    if path is not None:
        parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"),
                                           inline_comment_prefixes=("#",))
        parser.optionxform = str
        try:
            text = Path(path).read_text(encoding="utf-8")
            parser.read_string(f"[{_SECTION}]\n{text}")
        except configparser.Error as exc:
            raise ConfigError(f"cannot parse config {path}: {exc}") from exc
        raw.update(parser[_SECTION])
    raw.update(overrides or {})
    unknown = sorted(set(raw) - KEYS)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    cfg = replace(RunConfig(), **{k: _coerce(k, v) for k, v in raw.items()})
    return validate(cfg)
