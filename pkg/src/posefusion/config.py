"""Run configuration: flat dotted-key files, validation, canonical defaults.

The file format is deliberately minimal — one ``section.key = value`` pair
per line, ``#`` comments, vectors as comma-separated numbers.  Sections are
purely namespacing; there are no headers, so a config diff is always a
one-line-per-change diff.  The shipped ``default.cfg`` holds the benchmark
scenario every acceptance check runs against.
"""
from __future__ import annotations

import importlib.resources
from dataclasses import MISSING, dataclass, fields, replace

import numpy as np

__all__ = [
    "RunConfig",
    "parse_config_text",
    "config_from_mapping",
    "load_config",
    "default_config",
    "default_config_text",
    "CONFIG_KEY_FIELDS",
]


@dataclass(frozen=True)
class RunConfig:
    """Everything one simulation run depends on.

    Vector fields are numpy arrays; quaternions are scalar-first and get
    normalized during validation (the canonical scenario specifies its
    initial orientation to four decimals, which is only approximately
    unit).
    """

    dt: float
    duration: float
    # ground truth
    truth_q0: np.ndarray
    truth_p0: np.ndarray
    truth_v0: np.ndarray
    truth_gyro_bias: np.ndarray
    truth_accel_bias: np.ndarray
    # observer initial state
    obs_q0: np.ndarray
    obs_p0: np.ndarray
    obs_v0: np.ndarray
    obs_gyro_bias0: np.ndarray
    obs_accel_bias0: np.ndarray
    # gains and certificates
    c1: float
    c2: float
    k1: float
    k2: float
    k3: float
    contraction_rate: float
    bias_bound: float
    # environment and wiring
    gravity: np.ndarray
    feed_mode: str = "estimated"          # "true" | "estimated"
    omega_dot_mode: str = "fd"            # "analytic" | "fd"
    omega_dot_tau: float = 0.005
    omega_dot_bias_term: bool = False
    pose_decimation: int = 1
    randomize_init: bool = False
    seed: int = 0

    def __post_init__(self) -> None:
        for f in fields(self):
            if f.name.startswith(("truth_", "obs_")) or f.name == "gravity":
                object.__setattr__(self, f.name, np.asarray(getattr(self, f.name), dtype=float))
        self._validate()

    def _validate(self) -> None:
        problems: list[str] = []
        if not self.dt > 0:
            problems.append(f"sim.dt must be > 0, got {self.dt}")
        if not self.duration > 0:
            problems.append(f"sim.duration must be > 0, got {self.duration}")
        for name in ("c1", "c2", "k1", "k2", "k3", "contraction_rate"):
            if not getattr(self, name) > 0:
                problems.append(f"gains.{name} must be > 0, got {getattr(self, name)}")
        for name, size in (
            ("truth_q0", 4), ("obs_q0", 4),
            ("truth_p0", 3), ("truth_v0", 3), ("obs_p0", 3), ("obs_v0", 3),
            ("truth_gyro_bias", 3), ("truth_accel_bias", 3),
            ("obs_gyro_bias0", 3), ("obs_accel_bias0", 3), ("gravity", 3),
        ):
            arr = getattr(self, name)
            if arr.shape != (size,) or not np.all(np.isfinite(arr)):
                problems.append(f"{name} must be a finite {size}-vector, got {arr!r}")
        if self.feed_mode not in ("true", "estimated"):
            problems.append(f"feed.mode must be 'true' or 'estimated', got {self.feed_mode!r}")
        if self.omega_dot_mode not in ("analytic", "fd"):
            problems.append(
                f"feed.omega_dot must be 'analytic' or 'fd', got {self.omega_dot_mode!r}"
            )
        if self.omega_dot_tau < 0:
            problems.append(f"feed.tau must be >= 0, got {self.omega_dot_tau}")
        if self.pose_decimation < 1:
            problems.append(f"sim.pose_decimation must be >= 1, got {self.pose_decimation}")
        if problems:
            raise ValueError("invalid run configuration:\n  " + "\n  ".join(problems))
        # normalize quaternions in place (validation already ran, shapes are good)
        for name in ("truth_q0", "obs_q0"):
            q = getattr(self, name)
            n = float(np.linalg.norm(q))
            if abs(n - 1.0) > 1e-3:
                raise ValueError(f"{name} must be close to unit norm, got norm {n}")
            object.__setattr__(self, name, q / n)

    def with_overrides(self, **kwargs) -> "RunConfig":
        return replace(self, **kwargs)


# config-file key -> RunConfig field
CONFIG_KEY_FIELDS: dict[str, str] = {
    "sim.dt": "dt",
    "sim.duration": "duration",
    "sim.pose_decimation": "pose_decimation",
    "truth.q0": "truth_q0",
    "truth.p0": "truth_p0",
    "truth.v0": "truth_v0",
    "truth.gyro_bias": "truth_gyro_bias",
    "truth.accel_bias": "truth_accel_bias",
    "observer.q0": "obs_q0",
    "observer.p0": "obs_p0",
    "observer.v0": "obs_v0",
    "observer.gyro_bias0": "obs_gyro_bias0",
    "observer.accel_bias0": "obs_accel_bias0",
    "gains.c1": "c1",
    "gains.c2": "c2",
    "gains.k1": "k1",
    "gains.k2": "k2",
    "gains.k3": "k3",
    "gains.contraction_rate": "contraction_rate",
    "attitude.bias_bound": "bias_bound",
    "gravity.vector": "gravity",
    "feed.mode": "feed_mode",
    "feed.omega_dot": "omega_dot_mode",
    "feed.tau": "omega_dot_tau",
    "feed.omega_dot_bias_term": "omega_dot_bias_term",
    "init.randomize": "randomize_init",
    "init.seed": "seed",
}

_VECTOR_FIELDS = {
    "truth_q0", "truth_p0", "truth_v0", "truth_gyro_bias", "truth_accel_bias",
    "obs_q0", "obs_p0", "obs_v0", "obs_gyro_bias0", "obs_accel_bias0", "gravity",
}
_STRING_FIELDS = {"feed_mode", "omega_dot_mode"}
_BOOL_FIELDS = {"omega_dot_bias_term", "randomize_init"}
_INT_FIELDS = {"pose_decimation", "seed"}


def parse_config_text(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines into a raw string mapping.

    Later assignments win, which is what makes "defaults file then user
    file then CLI flags" layering trivial.
    """
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out


def _convert(field_name: str, raw: str):
    if field_name in _VECTOR_FIELDS:
        try:
            return np.array([float(x) for x in raw.split(",")])
        except ValueError as exc:
            raise ValueError(f"cannot parse vector for {field_name}: {raw!r}") from exc
    if field_name in _STRING_FIELDS:
        return raw
    if field_name in _BOOL_FIELDS:
        lowered = raw.lower()
        if lowered in ("true", "yes", "on", "1"):
            return True
        if lowered in ("false", "no", "off", "0"):
            return False
        raise ValueError(f"cannot parse boolean for {field_name}: {raw!r}")
    if field_name in _INT_FIELDS:
        return int(raw)
    return float(raw)


def config_from_mapping(mapping: dict[str, str]) -> RunConfig:
    """Build a validated RunConfig from raw dotted-key strings."""
    kwargs = {}
    unknown = []
    for key, raw in mapping.items():
        field_name = CONFIG_KEY_FIELDS.get(key)
        if field_name is None:
            unknown.append(key)
            continue
        kwargs[field_name] = _convert(field_name, raw)
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    missing = [k for k, f in CONFIG_KEY_FIELDS.items()
               if f not in kwargs and f in _REQUIRED_FIELDS]
    if missing:
        raise ValueError(f"missing required config keys: {sorted(missing)}")
    return RunConfig(**kwargs)


_REQUIRED_FIELDS = {
    f.name for f in fields(RunConfig)
    if f.default is MISSING and f.default_factory is MISSING
}


def default_config_text() -> str:
    """Raw text of the shipped benchmark configuration."""
    return (
        importlib.resources.files("posefusion").joinpath("default.cfg").read_text()
    )


def default_config() -> RunConfig:
    """The benchmark scenario with no overrides."""
    return config_from_mapping(parse_config_text(default_config_text()))


def load_config(path: str | None = None, overrides: dict[str, str] | None = None) -> RunConfig:
    """Layered load: shipped defaults, then ``path``, then ``overrides``."""
    mapping = parse_config_text(default_config_text())
    if path is not None:
        with open(path, "r", encoding="utf-8") as fh:
            mapping.update(parse_config_text(fh.read()))
    if overrides:
        mapping.update(overrides)
    return config_from_mapping(mapping)
