"""Experiment configuration and its flat ``key = value`` file format.

Example file::

    # two-phase run, d = 20, one million samples
    name = two-phase-gb
    d = 20
    T = 1e6
    distribution = gaussian_bernoulli
    schedule = two_phase_practical
    replications = 5
    seed = 1
    output_dir = out/two-phase

Lists are comma separated (``T = 1e4, 5e4, 2e5``); only one of ``d`` and
``T`` may be a list.  Integers may be written in scientific notation.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from ..datagen import SourceDistribution
from ..errors import ConfigError
from ..solver import SCHEDULE_KINDS, TWO_PHASE_PRACTICAL

DEFAULT_WINDOW = 0.6
# d^4 / T above this prints a scaling-regime warning.  The guarantees only
# hold up to unspecified constants; 10 separates the in-regime and
# out-of-regime points described for the d-sweeps (54^4/1e6 ~ 8.5 fine,
# 54^4/2e5 ~ 42 not).
DEFAULT_REGIME_LIMIT = 10.0

_INT_KEYS = {"replications", "seed", "record_stride", "workers"}
_FLOAT_KEYS = {"window_fraction", "eta", "max_regime_ratio", "B"}
_BOOL_KEYS = {"full_resolution"}
_STR_KEYS = {"name", "distribution", "schedule", "output_dir", "init"}
_LIST_KEYS = {"d", "T"}
KNOWN_KEYS = _INT_KEYS | _FLOAT_KEYS | _BOOL_KEYS | _STR_KEYS | _LIST_KEYS


@dataclass
class ExperimentConfig:
    name: str = "experiment"
    d: int | list[int] = 20
    T: int | list[int] = 1_000_000
    distribution: str = "gaussian_bernoulli"
    schedule: str = TWO_PHASE_PRACTICAL
    replications: int = 5
    seed: int = 0
    record_stride: int | None = None
    output_dir: str = "out"
    window_fraction: float = DEFAULT_WINDOW
    init: str = "uniform"
    full_resolution: bool = False
    eta: float | None = None
    B: float | None = None
    workers: int | None = None
    max_regime_ratio: float | None = None
    extra: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.validate()

    def validate(self):
        if isinstance(self.d, list) and isinstance(self.T, list):
            raise ConfigError("only one of d and T may be a list")
        for key in ("d", "T"):
            vals = getattr(self, key)
            vals = vals if isinstance(vals, list) else [vals]
            if not vals:
                raise ConfigError(f"{key} list is empty")
            lo = 2 if key == "d" else 1
            if any(int(v) != v or v < lo for v in vals):
                raise ConfigError(f"{key} values must be integers >= {lo}, got {vals}")
        if self.replications < 1:
            raise ConfigError("replications must be at least 1")
        if self.schedule not in SCHEDULE_KINDS:
            raise ConfigError(f"unknown schedule {self.schedule!r}; choose from {SCHEDULE_KINDS}")
        if not 0.0 < self.window_fraction <= 1.0:
            raise ConfigError("window_fraction must lie in (0, 1]")
        if self.record_stride is not None and self.record_stride < 1:
            raise ConfigError("record_stride must be positive")
        self.source()  # raises on unknown names

    @property
    def axis(self) -> str | None:
        if isinstance(self.d, list):
            return "d"
        if isinstance(self.T, list):
            return "T"
        return None

    def points(self) -> list[tuple[int, int]]:
        """``(d, T)`` pairs in sweep order."""
        ds = self.d if isinstance(self.d, list) else [self.d]
        Ts = self.T if isinstance(self.T, list) else [self.T]
        return [(int(d), int(T)) for d in ds for T in Ts]

    def source(self) -> SourceDistribution:
        try:
            dist = SourceDistribution.from_name(self.distribution)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.B is not None:
            dist = dataclasses.replace(dist, sub_gaussian_B=self.B)
        return dist

    def resolved_workers(self) -> int:
        env = os.environ.get("TENSORICA_WORKERS")
        if env:
            try:
                return max(1, int(env))
            except ValueError:
                raise ConfigError(f"TENSORICA_WORKERS must be an integer, got {env!r}") from None
        return max(1, self.workers or 1)

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out.pop("extra")
        out.pop("workers")  # never changes results
        return out

    def fingerprint(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def with_overrides(self, **kw) -> "ExperimentConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        return dataclasses.replace(self, **kw)


def _parse_int(text: str) -> int:
    try:
        return int(text)
    except ValueError:
        val = float(text)
        if val != int(val):
            raise ValueError(f"{text!r} is not an integer") from None
        return int(val)


def parse_value(key: str, text: str):
    text = text.strip()
    if key not in KNOWN_KEYS:
        raise ConfigError(f"unknown config key {key!r}")
    try:
        if key in _LIST_KEYS:
            parts = [p for p in (s.strip() for s in text.split(",")) if p]
            vals = [_parse_int(p) for p in parts]
            return vals if "," in text else vals[0]
        if key in _INT_KEYS:
            return _parse_int(text)
        if key in _FLOAT_KEYS:
            return float(text)
        if key in _BOOL_KEYS:
            low = text.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(text)
            return low in ("true", "1", "yes")
    except (ValueError, IndexError):
        raise ConfigError(f"bad value for {key}: {text!r}") from None
    return text


def parse_config_text(text: str) -> dict:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        sep = "=" if "=" in line else ":" if ":" in line else None
        if sep is None:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, _, val = line.partition(sep)
        values[key.strip()] = parse_value(key.strip(), val)
    return values


def load_config(path, **overrides) -> ExperimentConfig:
    values = parse_config_text(Path(path).read_text())
    values.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**values)


def dump_config(cfg: ExperimentConfig) -> str:
    lines = []
    for key, val in cfg.to_dict().items():
        if val is None:
            continue
        if isinstance(val, list):
            val = ", ".join(str(v) for v in val)
        lines.append(f"{key} = {val}")
    return "\n".join(lines) + "\n"
