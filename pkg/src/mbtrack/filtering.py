"""Particle multi-Bernoulli filter: prediction, measurement update,
track management, and multi-object state extraction.

The update produces two families of components: "legacy" components,
which adjust each predicted track for the possibility it went undetected,
and one "measurement-corrected" component per measurement, whose particle
cloud is the union of all predicted particles reweighted by detection
probability and measurement likelihood.  The recursion keeps cardinality
unbiased by construction (the cardinality-balanced form of the
multi-Bernoulli update).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import NonFiniteLikelihoodError
from .models import BirthModel, ClutterModel, MotionModel, SensorState
from .rfs import (
    BernoulliComponent,
    MultiBernoulliDensity,
    RandomSource,
    empty_density,
    normalize_weights,
    resample,
    weighted_mean,
)

_WEIGHT_FLOOR = 1e-300
# Guard for the 1 - r*rho denominators of the update (near-certain target,
# near-certain detection, and no supporting measurement).
_DENOM_FLOOR = 1e-12


@dataclass(frozen=True)
class FilterParams:
    """Track-management knobs for the multi-Bernoulli recursion."""

    particles_per_expected_target: int = 1000
    min_particles: int = 100
    max_particles: int = 1000
    prune_threshold: float = 1e-3
    merge_distance: float = 4.0
    max_components: int = 100
    existence_threshold: float = 0.5

    def particle_budget(self, r: float) -> int:
        raw = self.particles_per_expected_target * max(1, round(r))
        return int(min(max(raw, self.min_particles), self.max_particles))


@dataclass
class MultiTargetEstimate:
    """Point estimate of the multi-object state: a count and one state
    vector per object counted."""

    count: int
    states: list[np.ndarray] = field(default_factory=list)


def extract_estimate(
    density: MultiBernoulliDensity, threshold: float
) -> MultiTargetEstimate:
    """Count components whose existence probability exceeds ``threshold``
    and report the EAP (weighted particle mean) state of each."""
    states = [c.mean() for c in density if c.r > threshold]
    return MultiTargetEstimate(count=len(states), states=states)


def predict(
    prior: MultiBernoulliDensity,
    motion: MotionModel,
    birth: BirthModel,
    rng: RandomSource,
    params: FilterParams = FilterParams(),
) -> MultiBernoulliDensity:
    """Propagate survivors through the motion model and append birth terms.

    Survivor existence scales by the survival probability; particles are
    proposed from the transition itself (bootstrap), so their weights carry
    only the survival factor.  Newborn components sample their own birth
    density and start with uniform weights.
    """
    p_s = motion.survival_probability
    out: list[BernoulliComponent] = []
    dropped = 0
    for comp in prior:
        r_pred = comp.r * float(np.sum(comp.weights * p_s))
        states = motion.propagate(comp.states, rng)
        weights = comp.weights * p_s
        total = weights.sum()
        if total <= _WEIGHT_FLOOR or not np.isfinite(total):
            if r_pred > _DENOM_FLOOR:
                dropped += 1
                continue
            weights = np.full(comp.size, 1.0 / comp.size)
        else:
            weights = weights / total
        out.append(BernoulliComponent(min(r_pred, 1.0), states, weights))
    if dropped:
        warnings.warn(
            f"prediction dropped {dropped} component(s) with degenerate weights",
            RuntimeWarning,
        )
    for term in birth.components:
        n = params.particle_budget(term.r)
        states = term.sampler(rng, n)
        out.append(BernoulliComponent(term.r, states, np.full(n, 1.0 / n)))
    return MultiBernoulliDensity(out)


def update(
    predicted: MultiBernoulliDensity,
    measurements: np.ndarray,
    sensor: SensorState,
    sensor_model,
    clutter: ClutterModel,
) -> MultiBernoulliDensity:
    """Measurement update of a predicted multi-Bernoulli density.

    Emits one legacy component per predicted component and one
    measurement-corrected component per measurement; the corrected
    components share a single stacked particle array (reweighted copies of
    the union of all predicted particles).  The clutter intensity enters
    the denominator of each corrected existence probability, so spurious
    measurements in dense clutter spawn only weak components.
    """
    comps = predicted.components
    if not comps:
        return empty_density()

    z = np.asarray(measurements, dtype=float).reshape(-1, sensor_model.measurement_dim)
    n_meas = z.shape[0]

    stacked = predicted.stacked()
    states_all, weights_all, offsets, r = (
        stacked.states,
        stacked.weights,
        stacked.offsets,
        stacked.r,
    )
    sizes = stacked.sizes
    positions = states_all[:, :2]

    geometry = sensor_model.geometry(sensor, positions)
    p_d = sensor_model.profile.at_distance(geometry.distance)
    w_detect = weights_all * p_d
    rho_legacy = np.add.reduceat(w_detect, offsets[:-1])

    denom = 1.0 - r * rho_legacy
    if np.any(denom < _DENOM_FLOOR):
        warnings.warn(
            "clamped near-zero update denominator (certain target with no "
            "supporting measurement)",
            RuntimeWarning,
        )
        denom = np.maximum(denom, _DENOM_FLOOR)

    out: list[BernoulliComponent] = []

    r_legacy = np.clip(r * (1.0 - rho_legacy) / denom, 0.0, 1.0)
    w_miss = weights_all * (1.0 - p_d)
    for i, comp in enumerate(comps):
        seg = slice(offsets[i], offsets[i + 1])
        w_i = w_miss[seg]
        total = w_i.sum()
        if total <= _WEIGHT_FLOOR:
            # Detection was certain for every particle; the component is
            # being driven to extinction (r -> 0), keep a flat placeholder.
            w_i = np.full(comp.size, 1.0 / comp.size)
        else:
            w_i = w_i / total
        out.append(BernoulliComponent(r_legacy[i], comp.states, w_i))

    if n_meas:
        likelihood = sensor_model.likelihood_from_geometry(z, geometry)
        if not np.all(np.isfinite(likelihood)):
            raise NonFiniteLikelihoodError(
                "measurement likelihood evaluated to a non-finite value"
            )
        weighted_g = w_detect[:, None] * likelihood
        rho_corrected = np.add.reduceat(weighted_g, offsets[:-1], axis=0)

        ratio = r / denom
        numerator = ((1.0 - r) * ratio / denom) @ rho_corrected
        denominator = clutter.intensity() + ratio @ rho_corrected
        r_corrected = np.where(
            denominator > _WEIGHT_FLOOR, numerator / np.maximum(denominator, _WEIGHT_FLOOR), 0.0
        )
        r_corrected = np.clip(r_corrected, 0.0, 1.0)

        existence_gain = np.repeat(r / np.maximum(1.0 - r, _DENOM_FLOOR), sizes)
        w_corrected = (w_detect * existence_gain)[:, None] * likelihood
        column_totals = w_corrected.sum(axis=0)
        n_union = states_all.shape[0]
        for j in range(n_meas):
            if column_totals[j] <= _WEIGHT_FLOOR:
                w_j = np.full(n_union, 1.0 / n_union)
            else:
                w_j = w_corrected[:, j] / column_totals[j]
            out.append(BernoulliComponent(float(r_corrected[j]), states_all, w_j))

    return MultiBernoulliDensity(out)


def _merge_group(group: list[BernoulliComponent]) -> BernoulliComponent:
    """Fuse near-coincident components: combined existence is the
    probability that at least one exists (capped), particle union is
    reweighted by each parent's existence probability."""
    if len(group) == 1:
        return group[0]
    miss = np.prod([1.0 - c.r for c in group])
    r = min(0.999, 1.0 - miss)
    states = np.vstack([c.states for c in group])
    weights = np.concatenate([c.weights * c.r for c in group])
    return BernoulliComponent(r, states, normalize_weights(weights))


def prune_merge_resample(
    updated: MultiBernoulliDensity,
    params: FilterParams,
    rng: RandomSource,
) -> MultiBernoulliDensity:
    """Track management after an update.

    Removes components below the existence floor, merges components whose
    EAP positions fall within ``merge_distance`` of the strongest member of
    their group, resamples each survivor back to its particle budget, and
    caps the component count keeping the largest existence probabilities.
    """
    alive = [c for c in updated if c.r >= params.prune_threshold]
    if not alive:
        return empty_density()

    order = sorted(range(len(alive)), key=lambda i: (-alive[i].r, i))
    positions = np.array([weighted_mean(alive[i].states[:, :2], alive[i].weights) for i in order])
    merged: list[BernoulliComponent] = []
    taken = np.zeros(len(order), dtype=bool)
    for a in range(len(order)):
        if taken[a]:
            continue
        dist = np.linalg.norm(positions - positions[a], axis=1)
        group_idx = [b for b in range(len(order)) if not taken[b] and dist[b] <= params.merge_distance]
        for b in group_idx:
            taken[b] = True
        merged.append(_merge_group([alive[order[b]] for b in group_idx]))

    merged.sort(key=lambda c: -c.r)
    merged = merged[: params.max_components]
    return MultiBernoulliDensity(
        [resample(c, params.particle_budget(c.r), rng) for c in merged]
    )
