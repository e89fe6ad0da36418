"""Run configuration: defaults, file parsing, flag overrides, hashing.

The config file format is line-oriented `key = value` with `#` comments;
list values are comma-separated.  Unknown keys, malformed values, and
invariant violations raise ConfigError naming the key.
"""

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass

from .errors import ConfigError

SCHEMA_VERSION = 1

PAPER_SEMI_AXES = (0.9, 1.05, 1.15, 1.2)
PAPER_BASE_POINT = (math.pi / 3, 2.3, -math.pi / 5)


@dataclass(frozen=True)
class RunConfig:
    semi_axes: tuple = PAPER_SEMI_AXES
    base_point: tuple = PAPER_BASE_POINT
    t_max: float = None          # default derived: 1.25*pi*max(semi_axes)
    rtol: float = 1e-10
    atol: float = 1e-12
    n_theta: int = 64
    n_phi: int = 128
    umbilic_tol: float = 1e-5
    umbilic_area_tol: float = 1e-8
    closure_tol: float = 0.03
    line_step: float = 0.02
    switch_threshold: float = 0.1
    simple_zero_floor: float = 1e-3
    out_dir: str = "out"
    ply_binary: bool = False
    ambient_output: bool = False
    seed: int = 0
    n_threads: int = 0           # 0 = automatic

    def resolved_t_max(self):
        if self.t_max is not None:
            return float(self.t_max)
        return 1.25 * math.pi * max(self.semi_axes)

    def validate(self):
        if len(self.semi_axes) != 4 or any(a <= 0 for a in self.semi_axes):
            raise ConfigError("semi_axes: need 4 positive reals")
        if len(self.base_point) != 3:
            raise ConfigError("base_point: need 3 reals (theta, phi, psi)")
        if not (0 < self.base_point[0] < math.pi):
            raise ConfigError("base_point: theta must lie in (0, pi)")
        if not (0 < self.base_point[1] < math.pi):
            raise ConfigError("base_point: phi must lie in (0, pi)")
        if self.t_max is not None and self.t_max <= 0:
            raise ConfigError("t_max: must be positive")
        for key in ("rtol", "atol", "umbilic_tol", "umbilic_area_tol",
                    "closure_tol", "line_step", "switch_threshold",
                    "simple_zero_floor"):
            if getattr(self, key) <= 0:
                raise ConfigError(f"{key}: must be positive")
        if self.n_theta < 16 or self.n_phi < 32:
            raise ConfigError("n_theta/n_phi: grid must be at least 16 x 32")
        if self.n_threads < 0 or self.seed < 0:
            raise ConfigError("n_threads/seed: must be non-negative")
        return self

    def hash(self):
        """sha256 of the canonical JSON form, for output provenance."""
        d = dataclasses.asdict(self)
        d["t_max"] = self.resolved_t_max()
        d["schema_version"] = SCHEMA_VERSION
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def to_json(self):
        d = dataclasses.asdict(self)
        d["t_max"] = self.resolved_t_max()
        d["schema_version"] = SCHEMA_VERSION
        d["config_hash"] = self.hash()
        return json.dumps(d, sort_keys=True, indent=2)


_FIELD_TYPES = {f.name: f for f in dataclasses.fields(RunConfig)}
_TUPLE_KEYS = {"semi_axes", "base_point"}
_INT_KEYS = {"n_theta", "n_phi", "seed", "n_threads"}
_BOOL_KEYS = {"ply_binary", "ambient_output"}
_STR_KEYS = {"out_dir"}


def _parse_value(key, raw):
    raw = raw.strip()
    try:
        if key in _TUPLE_KEYS:
            return tuple(float(x) for x in raw.strip("()").split(","))
        if key in _INT_KEYS:
            return int(raw)
        if key in _BOOL_KEYS:
            if raw.lower() in ("1", "true", "yes", "on"):
                return True
            if raw.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if key in _STR_KEYS:
            return raw
        return float(raw)
    except ValueError:
        raise ConfigError(f"{key}: malformed value {raw!r}") from None


def parse_config(path=None, overrides=None):
    """RunConfig from an optional key=value file plus override mapping.

    Overrides win over file values; both win over defaults.
    """
    values = {}
    if path is not None:
        try:
            with open(path) as fh:
                lines = fh.readlines()
        except OSError as e:
            raise ConfigError(f"cannot read config file {path}: {e}") from None
        for lineno, line in enumerate(lines, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(
                    f"{path}:{lineno}: expected key = value, got {line!r}"
                )
            key, raw = (s.strip() for s in line.split("=", 1))
            if key not in _FIELD_TYPES:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            values[key] = _parse_value(key, raw)
    for key, val in (overrides or {}).items():
        if val is None:
            continue
        if key not in _FIELD_TYPES:
            raise ConfigError(f"unknown key {key!r}")
        if isinstance(val, str):
            val = _parse_value(key, val)
        values[key] = val
    return RunConfig(**values).validate()
