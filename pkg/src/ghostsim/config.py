"""Experiment configuration: defaults, key=value file parsing, validation.

The config file is plain text, one ``key = value`` per line, ``#`` comments.
Lists are comma-separated, booleans are true/false, empty value means unset.
Unknown keys are rejected so typos cannot silently fall back to defaults.

Grid defaults are desk-scale choices made for this implementation; they are
not measured values and every one of them can be overridden.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError
from .grids import Grid, make_grid

_REL_TOL = 1e-12


@dataclass(frozen=True)
class ExperimentConfig:
    """Every knob of the two-arm correlation experiments.

    ``d`` must equal ``d1 + d2``: the object-free arm spans the same total
    distance as the two-hop test arm.  Breaking that on purpose (to watch the
    reconstruction degrade) requires ``allow_geometry_mismatch``.
    """

    wavelength: float = 0.532e-6
    d1: float = 0.060
    d2: float = 0.075
    d: float = 0.135

    source_points: int = 512
    source_pitch: float = 4e-6
    object_points: int = 561
    object_pitch: float = 0.75e-6
    detector_points: int = 256
    detector_pitch: float = 1.557e-6

    slit_width: float = 105e-6
    slit_separation: float = 303e-6
    mask_file: str | None = None

    phi: float = 1.72e-3
    phi_list: tuple[float, ...] | None = None
    sigma2: float = 1.0
    seed: int = 0

    schedule: tuple[int, ...] = (1000, 2000, 4000, 8000, 16000, 32000, 64000)
    tau: float = 0.07
    n_max: int | None = None
    window: tuple[int, int] | None = None

    workers: int = 1
    batch: int = 256
    write_records: bool = True
    allow_geometry_mismatch: bool = False

    speckle_points: int = 512
    speckle_pitch: float = 40e-6
    speckle_phi_list: tuple[float, ...] = (2.5e-3, 1.25e-3, 0.625e-3, 0.3125e-3)
    speckle_n: int = 20000
    speckle_distance: float = 0.060

    def __post_init__(self):
        lengths = {
            "wavelength": self.wavelength,
            "d1": self.d1,
            "d2": self.d2,
            "d": self.d,
            "source_pitch": self.source_pitch,
            "object_pitch": self.object_pitch,
            "detector_pitch": self.detector_pitch,
            "slit_width": self.slit_width,
            "slit_separation": self.slit_separation,
            "phi": self.phi,
            "speckle_pitch": self.speckle_pitch,
            "speckle_distance": self.speckle_distance,
        }
        for name, value in lengths.items():
            if not value > 0:
                raise ConfigError(f"{name} must be positive, got {value!r}")
        if not self.allow_geometry_mismatch:
            if abs(self.d - (self.d1 + self.d2)) > _REL_TOL * self.d:
                raise ConfigError(
                    f"d = {self.d!r} does not equal d1 + d2 = {self.d1 + self.d2!r}; "
                    "set allow_geometry_mismatch to run a broken geometry on purpose"
                )
        if self.slit_separation <= self.slit_width:
            raise ConfigError("slit_separation must exceed slit_width")
        for name in ("source_points", "object_points", "detector_points", "speckle_points"):
            if getattr(self, name) < 2:
                raise ConfigError(f"{name} must be at least 2")
        if not self.schedule or any(
            b <= a for a, b in zip(self.schedule, self.schedule[1:])
        ):
            raise ConfigError("schedule must be a non-empty strictly increasing list")
        if self.schedule[0] < 2:
            raise ConfigError("schedule counts must be >= 2")
        if not self.tau > 0:
            raise ConfigError("tau must be positive")
        if self.sigma2 <= 0:
            raise ConfigError("sigma2 must be positive")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.batch < 1:
            raise ConfigError("batch must be >= 1")
        if self.n_max is not None and self.n_max < 2:
            raise ConfigError("n_max must be >= 2 when set")
        if self.phi_list is not None and any(p <= 0 for p in self.phi_list):
            raise ConfigError("phi_list entries must be positive")
        if any(p <= 0 for p in self.speckle_phi_list):
            raise ConfigError("speckle_phi_list entries must be positive")
        if self.speckle_n < 2:
            raise ConfigError("speckle_n must be >= 2")
        if self.window is not None:
            m, n = self.window
            if not (0 <= m <= n <= self.detector_points - 1):
                raise ConfigError(
                    f"window {self.window} out of range for {self.detector_points} pixels"
                )

    def source_grid(self) -> Grid:
        return make_grid(1, self.source_points, self.source_pitch)

    def object_grid(self) -> Grid:
        return make_grid(1, self.object_points, self.object_pitch)

    def detector_grid(self) -> Grid:
        return make_grid(1, self.detector_points, self.detector_pitch)

    def speckle_grid(self) -> Grid:
        return make_grid(2, self.speckle_points, self.speckle_pitch)

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        out = {}
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if isinstance(value, tuple):
                value = list(value)
            out[f.name] = value
        return out


_INT_FIELDS = {
    "source_points", "object_points", "detector_points", "seed", "workers",
    "batch", "n_max", "speckle_points", "speckle_n",
}
_FLOAT_FIELDS = {
    "wavelength", "d1", "d2", "d", "source_pitch", "object_pitch",
    "detector_pitch", "slit_width", "slit_separation", "phi", "sigma2",
    "tau", "speckle_pitch", "speckle_distance",
}
_BOOL_FIELDS = {"write_records", "allow_geometry_mismatch"}
_STR_FIELDS = {"mask_file"}
_INT_LIST_FIELDS = {"schedule", "window"}
_FLOAT_LIST_FIELDS = {"phi_list", "speckle_phi_list"}

_ALL_KEYS = (
    _INT_FIELDS | _FLOAT_FIELDS | _BOOL_FIELDS | _STR_FIELDS
    | _INT_LIST_FIELDS | _FLOAT_LIST_FIELDS
)


def _parse_value(key: str, raw: str):
    raw = raw.strip()
    if raw == "":
        return None
    try:
        if key in _INT_FIELDS:
            return int(raw)
        if key in _FLOAT_FIELDS:
            return float(raw)
        if key in _BOOL_FIELDS:
            low = raw.lower()
            if low in ("true", "yes", "1"):
                return True
            if low in ("false", "no", "0"):
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        if key in _INT_LIST_FIELDS:
            return tuple(int(part) for part in raw.split(","))
        if key in _FLOAT_LIST_FIELDS:
            return tuple(float(part) for part in raw.split(","))
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {exc}") from None
    return raw  # _STR_FIELDS


def parse_config_text(text: str, source: str = "<string>") -> dict:
    """Key/value pairs from config text; raises ConfigError on unknown keys."""
    values: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {line!r}")
        key, raw = stripped.split("=", 1)
        key = key.strip()
        if key not in _ALL_KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        values[key] = _parse_value(key, raw)
    return values


def load_config(path, overrides: dict | None = None) -> ExperimentConfig:
    """Config from a file plus programmatic overrides (CLI flags win)."""
    values = parse_config_text(Path(path).read_text(), source=str(path))
    if overrides:
        values.update(overrides)
    return config_from_values(values)


def config_from_values(values: dict) -> ExperimentConfig:
    """Build a config from a plain dict, dropping unset (None) entries.

    ``window`` is required to be exactly two indices when present.
    """
    clean = {k: v for k, v in values.items() if v is not None}
    unknown = set(clean) - _ALL_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if "window" in clean:
        w = tuple(clean["window"])
        if len(w) != 2:
            raise ConfigError("window must be exactly two indices: low, high")
        clean["window"] = (int(w[0]), int(w[1]))
    try:
        return ExperimentConfig(**clean)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def dump_config(config: ExperimentConfig) -> str:
    """The config as parseable key = value text (round-trips through load)."""
    lines = []
    for f in dataclasses.fields(config):
        value = getattr(config, f.name)
        if value is None:
            rendered = ""
        elif isinstance(value, bool):
            rendered = "true" if value else "false"
        elif isinstance(value, tuple):
            rendered = ", ".join(repr(v) for v in value)
        elif isinstance(value, float):
            rendered = repr(value)
        else:
            rendered = str(value)
        lines.append(f"{f.name} = {rendered}")
    return "\n".join(lines) + "\n"
