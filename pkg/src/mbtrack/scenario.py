"""Declarative scenario configuration and the two shipped presets.

A scenario is a JSON-serializable dataclass tree: surveillance region,
motion model (with separate truth and filter noise scales), sensor model,
clutter, birth terms, true initial targets, sensor start pose, filter and
control parameters, OSPA parameters, and the run seed.  ``build_models``
turns a config into the concrete model objects the filter loop consumes.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .control import ControlParams
from .errors import ConfigError
from .filtering import FilterParams
from .metrics import OspaParams
from .models import (
    BearingRangeSensorModel,
    BirthComponent,
    BirthModel,
    ClutterModel,
    DetectionProfile,
    MotionModel,
    RangeSensorModel,
    SensorState,
    gaussian_birth,
    uniform_box_birth,
)

PRESET_NAMES = ("case1", "case2")


@dataclass(frozen=True)
class RegionConfig:
    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def bounds(self) -> np.ndarray:
        return np.array([[self.x_min, self.x_max], [self.y_min, self.y_max]])


@dataclass(frozen=True)
class MotionConfig:
    kind: str
    time_step: float
    survival_probability: float
    filter_noise: tuple[float, ...]
    truth_noise: tuple[float, ...]


@dataclass(frozen=True)
class SensorConfig:
    kind: str
    detection_radius: float
    detection_falloff: float
    sigma0: float | None = None
    beta: float | None = None
    sigma_theta: float | None = None
    sigma_r: float | None = None


@dataclass(frozen=True)
class ClutterConfig:
    rate: float
    support: tuple[tuple[float, float], ...]


@dataclass(frozen=True)
class BirthEntry:
    kind: str
    r: float
    velocity_range: tuple[float, float] | None = None
    mean: tuple[float, ...] | None = None
    std: tuple[float, ...] | None = None


@dataclass(frozen=True)
class TargetConfig:
    state: tuple[float, ...]
    birth_step: int = 0
    death_step: int | None = None


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    duration: int
    seed: int
    region: RegionConfig
    motion: MotionConfig
    sensor: SensorConfig
    clutter: ClutterConfig
    birth: tuple[BirthEntry, ...]
    targets: tuple[TargetConfig, ...]
    sensor_start: tuple[float, float]
    filter: FilterParams = FilterParams()
    control: ControlParams = ControlParams()
    ospa: OspaParams = OspaParams()


@dataclass(frozen=True)
class ScenarioModels:
    """Concrete model objects built from a ScenarioConfig."""

    truth_motion: MotionModel
    filter_motion: MotionModel
    sensor_model: object
    clutter: ClutterModel
    birth: BirthModel
    bounds: np.ndarray
    initial_sensor: SensorState


def build_models(config: ScenarioConfig) -> ScenarioModels:
    m = config.motion
    truth_motion = MotionModel(m.kind, m.time_step, m.survival_probability, tuple(m.truth_noise))
    filter_motion = MotionModel(m.kind, m.time_step, m.survival_probability, tuple(m.filter_noise))

    profile = DetectionProfile(config.sensor.detection_radius, config.sensor.detection_falloff)
    s = config.sensor
    if s.kind == "range":
        if s.sigma0 is None or s.beta is None:
            raise ConfigError("range sensor needs sigma0 and beta")
        sensor_model = RangeSensorModel(s.sigma0, s.beta, profile)
    elif s.kind == "bearing_range":
        if s.sigma_theta is None or s.sigma_r is None:
            raise ConfigError("bearing_range sensor needs sigma_theta and sigma_r")
        sensor_model = BearingRangeSensorModel(s.sigma_theta, s.sigma_r, profile)
    else:
        raise ConfigError(f"unknown sensor kind {s.kind!r}")

    support = np.asarray(config.clutter.support, dtype=float)
    if support.shape != (sensor_model.measurement_dim, 2):
        raise ConfigError(
            f"clutter support shape {support.shape} does not match the "
            f"{sensor_model.measurement_dim}-dimensional measurement space"
        )
    clutter = ClutterModel(config.clutter.rate, support)

    state_dim = truth_motion.state_dim
    terms: list[BirthComponent] = []
    for entry in config.birth:
        if entry.kind == "uniform_box":
            if entry.velocity_range is None:
                raise ConfigError("uniform_box birth needs velocity_range")
            if state_dim != 4:
                raise ConfigError("uniform_box birth only supports 4-state models")
            terms.append(
                uniform_box_birth(entry.r, config.region.bounds(), tuple(entry.velocity_range))
            )
        elif entry.kind == "gaussian":
            if entry.mean is None or entry.std is None:
                raise ConfigError("gaussian birth needs mean and std")
            if len(entry.mean) != state_dim or len(entry.std) != state_dim:
                raise ConfigError(
                    f"gaussian birth mean/std must have {state_dim} entries"
                )
            terms.append(gaussian_birth(entry.r, entry.mean, entry.std))
        else:
            raise ConfigError(f"unknown birth kind {entry.kind!r}")

    for target in config.targets:
        if len(target.state) != state_dim:
            raise ConfigError(
                f"target state {target.state} does not match the "
                f"{state_dim}-state motion model"
            )

    return ScenarioModels(
        truth_motion=truth_motion,
        filter_motion=filter_motion,
        sensor_model=sensor_model,
        clutter=clutter,
        birth=BirthModel(tuple(terms)),
        bounds=config.region.bounds(),
        initial_sensor=SensorState(np.asarray(config.sensor_start, dtype=float)),
    )


def _require(mapping: dict, key: str, context: str):
    if key not in mapping:
        raise ConfigError(f"missing {context} field {key!r}")
    return mapping[key]


def _build(cls, data: dict, context: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{context} section must be an object, got {type(data).__name__}")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"unknown {context} field(s): {sorted(unknown)}")
    kwargs = {}
    for f in dataclasses.fields(cls):
        if f.name in data:
            value = data[f.name]
            kwargs[f.name] = tuple(_as_tuple(value)) if isinstance(value, list) else value
        elif f.default is dataclasses.MISSING and f.default_factory is dataclasses.MISSING:
            raise ConfigError(f"missing {context} field {f.name!r}")
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {context} section: {exc}") from exc


def _as_tuple(value):
    return tuple(_as_tuple(v) if isinstance(v, list) else v for v in value)


def config_from_dict(data: dict) -> ScenarioConfig:
    if not isinstance(data, dict):
        raise ConfigError("scenario file must contain a JSON object")
    try:
        config = ScenarioConfig(
            name=str(_require(data, "name", "scenario")),
            duration=int(_require(data, "duration", "scenario")),
            seed=int(_require(data, "seed", "scenario")),
            region=_build(RegionConfig, _require(data, "region", "scenario"), "region"),
            motion=_build(MotionConfig, _require(data, "motion", "scenario"), "motion"),
            sensor=_build(SensorConfig, _require(data, "sensor", "scenario"), "sensor"),
            clutter=_build(ClutterConfig, _require(data, "clutter", "scenario"), "clutter"),
            birth=tuple(
                _build(BirthEntry, e, "birth") for e in _require(data, "birth", "scenario")
            ),
            targets=tuple(
                _build(TargetConfig, t, "targets") for t in _require(data, "targets", "scenario")
            ),
            sensor_start=tuple(_require(data, "sensor_start", "scenario")),
            filter=_build(FilterParams, data.get("filter", {}), "filter"),
            control=_build(ControlParams, data.get("control", {}), "control"),
            ospa=_build(OspaParams, data.get("ospa", {}), "ospa"),
        )
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    if config.duration < 0:
        raise ConfigError(f"duration {config.duration} must be nonnegative")
    build_models(config)  # fail fast on inconsistent sections
    return config


def config_to_dict(config: ScenarioConfig) -> dict:
    return dataclasses.asdict(config)


def load_config(path: str) -> ScenarioConfig:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read scenario file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"scenario file {path} is not valid JSON: {exc}") from exc
    return config_from_dict(data)


def save_config(config: ScenarioConfig, path: str):
    with open(path, "w") as fh:
        json.dump(config_to_dict(config), fh, indent=2)
        fh.write("\n")


def load_preset(name: str) -> ScenarioConfig:
    if name not in PRESET_NAMES:
        raise ConfigError(f"unknown preset {name!r}, available: {PRESET_NAMES}")
    text = resources.files("mbtrack.presets").joinpath(f"{name}.json").read_text()
    return config_from_dict(json.loads(text))


def preset_json(name: str) -> str:
    if name not in PRESET_NAMES:
        raise ConfigError(f"unknown preset {name!r}, available: {PRESET_NAMES}")
    return resources.files("mbtrack.presets").joinpath(f"{name}.json").read_text()


def override(config: ScenarioConfig, path: str, value) -> ScenarioConfig:
    """Return a copy of ``config`` with the dotted-path field replaced,
    e.g. ``override(cfg, "control.eta", 1.0)``."""
    parts = path.split(".")
    target = config
    chain = [config]
    for part in parts[:-1]:
        if not dataclasses.is_dataclass(target) or part not in {
            f.name for f in dataclasses.fields(target)
        }:
            raise ConfigError(f"no config section {part!r} in path {path!r}")
        target = getattr(target, part)
        chain.append(target)
    leaf = parts[-1]
    if not dataclasses.is_dataclass(target) or leaf not in {
        f.name for f in dataclasses.fields(target)
    }:
        raise ConfigError(f"no config field {leaf!r} in path {path!r}")
    try:
        updated = dataclasses.replace(target, **{leaf: value})
        for parent, part in zip(reversed(chain[:-1]), reversed(parts[:-1])):
            updated = dataclasses.replace(parent, **{part: updated})
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"cannot set {path!r} to {value!r}: {exc}") from exc
    return config_from_dict(config_to_dict(updated))
