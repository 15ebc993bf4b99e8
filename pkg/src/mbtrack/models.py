"""Motion, measurement, detection, clutter, and birth models.

Two single-object motion models (constant velocity over ``[x y vx vy]``
and nearly-constant turn over ``[x y vx vy omega]``), two sensor models
(range-only with range-dependent noise, and bearing-range), a disc-plus-
linear-falloff detection profile, uniform Poisson clutter over a box in
observation space, and multi-Bernoulli birth terms.  Everything is an
immutable value; all sampling takes an explicit :class:`RandomSource`.

Sensor models expose a two-stage evaluation used by the filter's hot
path: ``geometry(sensor, positions)`` computes the sensor-relative
distances (and bearings) once, and detection probabilities plus
likelihood matrices are then derived from that shared geometry.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DegenerateGeometryError
from .rfs import RandomSource

_TWO_PI = 2.0 * np.pi
_SQRT_TWO_PI = np.sqrt(2.0 * np.pi)

# Turn rates below this use the straight-line limit of the turn matrix.
_OMEGA_EPS = 1e-6
# Sensor-object ranges below this leave the bearing undefined.
_RANGE_EPS = 1e-6


@dataclass(frozen=True)
class SensorState:
    """Sensor pose: a position in the plane (meters)."""

    position: np.ndarray

    def __post_init__(self):
        object.__setattr__(
            self, "position", np.asarray(self.position, dtype=float).reshape(2)
        )
        if not np.all(np.isfinite(self.position)):
            raise ValueError(f"non-finite sensor position {self.position}")

    @property
    def x(self) -> float:
        return float(self.position[0])

    @property
    def y(self) -> float:
        return float(self.position[1])


@dataclass(frozen=True)
class DetectionProfile:
    """Detection probability: 1 inside radius ``r0``, then linear falloff
    with slope ``h`` (per meter), floored at 0."""

    r0: float
    h: float

    def __post_init__(self):
        if self.r0 <= 0 or self.h < 0:
            raise ValueError(f"invalid detection profile r0={self.r0}, h={self.h}")

    def at_distance(self, distance):
        p = 1.0 - self.h * (np.asarray(distance, dtype=float) - self.r0)
        return np.clip(p, 0.0, 1.0)


def detection_probability(
    sensor: SensorState, object_position: np.ndarray, profile: DetectionProfile
) -> np.ndarray | float:
    """Location-dependent detection probability for one or many positions."""
    pos = np.asarray(object_position, dtype=float)
    delta = np.atleast_2d(pos) - sensor.position
    distance = np.hypot(delta[:, 0], delta[:, 1])
    p = profile.at_distance(distance)
    return float(p[0]) if pos.ndim == 1 else p


def wrap_angle(angle):
    """Wrap angles to (-pi, pi]."""
    wrapped = np.mod(np.asarray(angle, dtype=float) + np.pi, _TWO_PI) - np.pi
    return np.where(wrapped == -np.pi, np.pi, wrapped)


@dataclass(frozen=True)
class SensorGeometry:
    """Sensor-relative coordinates of a batch of planar positions."""

    distance: np.ndarray
    bearing: np.ndarray | None = None


def _exp_inplace(exponent: np.ndarray) -> np.ndarray:
    """exp() that skips lanes certain to underflow to exactly 0.0.

    Sharp likelihoods make most exponents hugely negative; exp underflows
    to zero below about -745.2, so masking at -760 is bit-identical to the
    full evaluation and avoids most of its cost.
    """
    mask = exponent > -760.0
    if mask.all():
        return np.exp(exponent, out=exponent)
    out = np.zeros_like(exponent)
    values = np.exp(exponent[mask])
    out[mask] = values
    return out


@dataclass(frozen=True)
class RangeSensorModel:
    """Range-only sensor: z = distance + noise, noise std grows with
    distance squared (sigma0 + beta * d^2)."""

    sigma0: float
    beta: float
    profile: DetectionProfile

    measurement_dim = 1

    def __post_init__(self):
        if self.sigma0 <= 0 or self.beta < 0:
            raise ValueError(f"invalid range model sigma0={self.sigma0}, beta={self.beta}")

    def noise_std(self, distance):
        return self.sigma0 + self.beta * np.asarray(distance, dtype=float) ** 2

    def geometry(self, sensor: SensorState, positions: np.ndarray) -> SensorGeometry:
        delta = np.atleast_2d(positions) - sensor.position
        return SensorGeometry(distance=np.hypot(delta[:, 0], delta[:, 1]))

    def ideal(self, sensor: SensorState, positions: np.ndarray) -> np.ndarray:
        """Noiseless measurement(s): (n, 1) ranges."""
        return self.geometry(sensor, positions).distance[:, None]

    def likelihood_from_geometry(
        self, measurements: np.ndarray, geometry: SensorGeometry
    ) -> np.ndarray:
        z = np.atleast_2d(np.asarray(measurements, dtype=float))[:, 0]
        d = geometry.distance
        sigma = self.noise_std(d)[:, None]
        residual = z[None, :] - d[:, None]
        residual /= sigma
        np.square(residual, out=residual)
        residual *= -0.5
        residual = _exp_inplace(residual)
        residual /= _SQRT_TWO_PI * sigma
        return residual

    def likelihood_matrix(
        self, measurements: np.ndarray, sensor: SensorState, positions: np.ndarray
    ) -> np.ndarray:
        """Density of each measurement given each position: (n_pos, n_meas)."""
        return self.likelihood_from_geometry(measurements, self.geometry(sensor, positions))

    def sample(
        self, sensor: SensorState, positions: np.ndarray, rng: RandomSource
    ) -> np.ndarray:
        ideal = self.ideal(sensor, positions)
        sigma = self.noise_std(ideal[:, 0])
        return ideal + (sigma * rng.generator.standard_normal(len(ideal)))[:, None]


@dataclass(frozen=True)
class BearingRangeSensorModel:
    """Bearing-range sensor.  Bearing is measured from the +y axis
    (two-argument arctangent of (dx, dy) relative to the sensor), wrapped
    to (-pi, pi]; bearing and range noises are independent Gaussians."""

    sigma_theta: float
    sigma_r: float
    profile: DetectionProfile

    measurement_dim = 2

    def __post_init__(self):
        if self.sigma_theta <= 0 or self.sigma_r <= 0:
            raise ValueError("bearing/range noise scales must be positive")

    def geometry(self, sensor: SensorState, positions: np.ndarray) -> SensorGeometry:
        """Distances and bearings of a particle cloud.  Degenerate points
        (on top of the sensor) get bearing 0 rather than aborting; use
        :meth:`ideal` when coincidence must be an error."""
        delta = np.atleast_2d(positions) - sensor.position
        distance = np.hypot(delta[:, 0], delta[:, 1])
        bearing = np.arctan2(delta[:, 0], delta[:, 1])
        return SensorGeometry(distance=distance, bearing=bearing)

    def ideal(self, sensor: SensorState, positions: np.ndarray) -> np.ndarray:
        geometry = self.geometry(sensor, positions)
        if np.any(geometry.distance < _RANGE_EPS):
            raise DegenerateGeometryError("object on top of the sensor")
        return np.column_stack([geometry.bearing, geometry.distance])

    def likelihood_from_geometry(
        self, measurements: np.ndarray, geometry: SensorGeometry
    ) -> np.ndarray:
        z = np.atleast_2d(np.asarray(measurements, dtype=float))
        # Wrap in place; the +/-pi boundary convention is irrelevant once squared.
        exponent = z[None, :, 0] - geometry.bearing[:, None]
        exponent += np.pi
        np.mod(exponent, _TWO_PI, out=exponent)
        exponent -= np.pi
        exponent /= self.sigma_theta
        np.square(exponent, out=exponent)
        range_residual = z[None, :, 1] - geometry.distance[:, None]
        range_residual /= self.sigma_r
        np.square(range_residual, out=range_residual)
        # Single exp over the summed exponents of the two independent terms.
        exponent += range_residual
        exponent *= -0.5
        exponent = _exp_inplace(exponent)
        exponent /= _TWO_PI * self.sigma_theta * self.sigma_r
        return exponent

    def likelihood_matrix(
        self, measurements: np.ndarray, sensor: SensorState, positions: np.ndarray
    ) -> np.ndarray:
        return self.likelihood_from_geometry(measurements, self.geometry(sensor, positions))

    def sample(
        self, sensor: SensorState, positions: np.ndarray, rng: RandomSource
    ) -> np.ndarray:
        ideal = self.ideal(sensor, positions)
        noise = rng.generator.standard_normal(ideal.shape) * np.array(
            [self.sigma_theta, self.sigma_r]
        )
        z = ideal + noise
        z[:, 0] = wrap_angle(z[:, 0])
        return z


def range_likelihood(
    z: float, sensor: SensorState, object_position: np.ndarray, model: RangeSensorModel
) -> float:
    """Density of a range measurement for a single object position."""
    return float(
        model.likelihood_matrix(np.array([[z]]), sensor, np.atleast_2d(object_position))[
            0, 0
        ]
    )


def bearing_range_likelihood(
    z: np.ndarray,
    sensor: SensorState,
    object_position: np.ndarray,
    model: BearingRangeSensorModel,
) -> float:
    """Density of a [bearing, range] measurement for a single object position."""
    geometry = model.geometry(sensor, np.atleast_2d(object_position))
    if np.any(geometry.distance < _RANGE_EPS):
        raise DegenerateGeometryError("object on top of the sensor")
    return float(model.likelihood_from_geometry(np.atleast_2d(z), geometry)[0, 0])


def ideal_measurement(sensor: SensorState, state: np.ndarray, model) -> np.ndarray:
    """The likelihood-maximizing (noise-free) measurement of one object."""
    position = np.asarray(state, dtype=float)[:2]
    return model.ideal(sensor, position[None, :])[0]


@dataclass(frozen=True)
class ClutterModel:
    """Uniform Poisson clutter over a box in observation space.

    ``support`` is (dim, 2) lower/upper bounds; ``rate`` is the expected
    clutter count per scan.  The spatial density is the constant
    1 / volume(support), so the intensity at any point is rate / volume.
    """

    rate: float
    support: np.ndarray

    def __post_init__(self):
        object.__setattr__(
            self, "support", np.atleast_2d(np.asarray(self.support, dtype=float))
        )
        if self.rate < 0:
            raise ValueError(f"clutter rate {self.rate} must be nonnegative")
        if np.any(self.support[:, 1] <= self.support[:, 0]):
            raise ValueError("clutter support box is degenerate")

    @property
    def volume(self) -> float:
        return float(np.prod(self.support[:, 1] - self.support[:, 0]))

    def density(self) -> float:
        return 1.0 / self.volume

    def intensity(self) -> float:
        """Clutter intensity rate * density, constant over the support."""
        return self.rate / self.volume


def sample_clutter(model: ClutterModel, rng: RandomSource) -> np.ndarray:
    """Poisson-many points uniform over the support box, shape (n, dim)."""
    n = rng.generator.poisson(model.rate)
    low, high = model.support[:, 0], model.support[:, 1]
    return rng.generator.uniform(low, high, size=(n, model.support.shape[0]))


@dataclass(frozen=True)
class BirthComponent:
    """One birth term: appearance probability plus a state sampler.

    ``sampler(rng, n)`` returns (n, d) states.  The particle weights of a
    newborn component are uniform because births are proposed from their
    own density.
    """

    r: float
    sampler: Callable[[RandomSource, int], np.ndarray]

    def __post_init__(self):
        if not 0.0 <= self.r <= 1.0:
            raise ValueError(f"birth probability {self.r} outside [0, 1]")


@dataclass(frozen=True)
class BirthModel:
    components: tuple[BirthComponent, ...] = ()

    def __len__(self):
        return len(self.components)


def uniform_box_birth(
    r: float, bounds: np.ndarray, velocity_range: tuple[float, float]
) -> BirthComponent:
    """Birth term uniform in position over ``bounds`` ((2, 2) box) with
    velocities uniform per axis over ``velocity_range``."""
    bounds = np.asarray(bounds, dtype=float)
    v_lo, v_hi = velocity_range

    def sampler(rng: RandomSource, n: int) -> np.ndarray:
        g = rng.generator
        xy = g.uniform(bounds[:, 0], bounds[:, 1], size=(n, 2))
        v = g.uniform(v_lo, v_hi, size=(n, 2))
        return np.column_stack([xy, v])

    return BirthComponent(r, sampler)


def gaussian_birth(r: float, mean: np.ndarray, std: np.ndarray) -> BirthComponent:
    """Birth term with an axis-aligned Gaussian over the full state vector."""
    mean = np.asarray(mean, dtype=float)
    std = np.asarray(std, dtype=float)

    def sampler(rng: RandomSource, n: int) -> np.ndarray:
        return mean + rng.generator.standard_normal((n, mean.size)) * std

    return BirthComponent(r, sampler)


def propagate_cv(
    states: np.ndarray, time_step: float, noise_scale: float, rng: RandomSource | None
) -> np.ndarray:
    """Constant-velocity transition with integrated white acceleration noise.

    State rows are [x y vx vy]; the acceleration noise enters through the
    usual gain [[T^2/2, 0], [0, T^2/2], [T, 0], [0, T]].
    """
    s = np.atleast_2d(np.asarray(states, dtype=float))
    out = s.copy()
    out[:, 0] += time_step * s[:, 2]
    out[:, 1] += time_step * s[:, 3]
    if noise_scale > 0 and rng is not None:
        accel = rng.generator.standard_normal((s.shape[0], 2)) * noise_scale
        out[:, 0] += 0.5 * time_step**2 * accel[:, 0]
        out[:, 1] += 0.5 * time_step**2 * accel[:, 1]
        out[:, 2] += time_step * accel[:, 0]
        out[:, 3] += time_step * accel[:, 1]
    return out if np.asarray(states).ndim == 2 else out[0]


def propagate_ct(
    states: np.ndarray,
    time_step: float,
    sigma_accel: float,
    sigma_turn: float,
    rng: RandomSource | None,
) -> np.ndarray:
    """Nearly-constant-turn transition over [x y vx vy omega].

    The linear part rotates the velocity by omega*T with the standard
    coordinated-turn matrix; for |omega| < 1e-6 rad/s the analytic
    omega -> 0 limit (the constant-velocity matrix) is used.  The turn
    rate itself random-walks with std sigma_turn * T.
    """
    s = np.atleast_2d(np.asarray(states, dtype=float))
    x, y, vx, vy, omega = (s[:, i] for i in range(5))
    wt = omega * time_step
    small = np.abs(omega) < _OMEGA_EPS
    # Guard the divisions; the small-omega lanes are overwritten by np.where.
    safe_omega = np.where(small, 1.0, omega)
    sin_wt, cos_wt = np.sin(wt), np.cos(wt)
    a = np.where(small, time_step, sin_wt / safe_omega)  # sin(wT)/w
    b = np.where(small, 0.0, (1.0 - cos_wt) / safe_omega)  # (1-cos(wT))/w
    c = np.where(small, 1.0, cos_wt)
    d = np.where(small, 0.0, sin_wt)

    out = np.empty_like(s)
    out[:, 0] = x + a * vx - b * vy
    out[:, 1] = y + b * vx + a * vy
    out[:, 2] = c * vx - d * vy
    out[:, 3] = d * vx + c * vy
    out[:, 4] = omega

    if rng is not None and (sigma_accel > 0 or sigma_turn > 0):
        g = rng.generator
        if sigma_accel > 0:
            accel = g.standard_normal((s.shape[0], 2)) * sigma_accel
            out[:, 0] += 0.5 * time_step**2 * accel[:, 0]
            out[:, 1] += 0.5 * time_step**2 * accel[:, 1]
            out[:, 2] += time_step * accel[:, 0]
            out[:, 3] += time_step * accel[:, 1]
        if sigma_turn > 0:
            out[:, 4] += time_step * g.standard_normal(s.shape[0]) * sigma_turn
    return out if np.asarray(states).ndim == 2 else out[0]


@dataclass(frozen=True)
class MotionModel:
    """Single-object motion model shared by simulation and filtering.

    ``kind`` selects constant-velocity ("cv", 4-state) or nearly-constant
    turn ("ct", 5-state).  ``noise_scales`` is (accel_std,) for cv and
    (accel_std, turn_std) for ct.
    """

    kind: str
    time_step: float
    survival_probability: float
    noise_scales: tuple[float, ...]

    def __post_init__(self):
        if self.kind not in ("cv", "ct"):
            raise ValueError(f"unknown motion model kind {self.kind!r}")
        if self.time_step <= 0:
            raise ValueError("time step must be positive")
        if not 0.0 <= self.survival_probability <= 1.0:
            raise ValueError("survival probability outside [0, 1]")
        expected = 1 if self.kind == "cv" else 2
        if len(self.noise_scales) != expected:
            raise ValueError(
                f"{self.kind} model needs {expected} noise scale(s), got {self.noise_scales}"
            )

    @property
    def state_dim(self) -> int:
        return 4 if self.kind == "cv" else 5

    def propagate(self, states: np.ndarray, rng: RandomSource | None) -> np.ndarray:
        if self.kind == "cv":
            return propagate_cv(states, self.time_step, self.noise_scales[0], rng)
        return propagate_ct(
            states, self.time_step, self.noise_scales[0], self.noise_scales[1], rng
        )
