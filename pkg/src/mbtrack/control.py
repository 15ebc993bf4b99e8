"""Sensor control: candidate command generation, ideal-measurement
prediction, uncertainty costs, and minimum-cost command selection.

For each admissible command the filter is run hypothetically against the
predicted ideal measurement set (PIMS): the noiseless, clutter-free,
perfectly detected measurements of the currently estimated objects as
seen from the candidate sensor pose.  The command whose hypothetical
posterior carries the least uncertainty wins.  No randomness is consumed
anywhere in this module, so command evaluation is a pure function of the
predicted density.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import MbTrackError
from .filtering import extract_estimate, update
from .models import ClutterModel, SensorState
from .rfs import BernoulliComponent, MultiBernoulliDensity

COST_PEECS = "peecs"
COST_CARDINALITY_ONLY = "card_variance_only"
COST_MAP_VARIANCE = "map_card_variance"
COST_CHOICES = (COST_PEECS, COST_CARDINALITY_ONLY, COST_MAP_VARIANCE)


@dataclass(frozen=True)
class ControlParams:
    """Geometry of the admissible command set and the cost to minimize.

    Commands are the current pose ("stay") plus moves of ``step_size * j``
    meters, ``j = 1..num_radii``, along ``num_headings`` equally spaced
    headings, clamped to the surveillance box.
    """

    cost: str = COST_PEECS
    eta: float = 0.5
    step_size: float = 50.0
    num_headings: int = 8
    num_radii: int = 2

    def __post_init__(self):
        if self.cost not in COST_CHOICES:
            raise ValueError(f"unknown cost {self.cost!r}, expected one of {COST_CHOICES}")
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError(f"eta {self.eta} outside [0, 1]")


@dataclass(frozen=True)
class ControlCommand:
    id: int
    target: SensorState


@dataclass(frozen=True)
class CostBreakdown:
    """Cost of one command: normalized cardinality and state errors blended
    with weight eta.  For the MAP-variance baseline the raw variance is
    stored in ``cardinality_error``/``total`` (eta = 1) and is not bounded
    by 1."""

    cardinality_error: float
    state_error: float
    eta: float
    total: float


@dataclass(frozen=True)
class SelectionResult:
    best: ControlCommand
    best_index: int
    commands: list[ControlCommand]
    costs: list[CostBreakdown]

    @property
    def best_cost(self) -> CostBreakdown:
        return self.costs[self.best_index]


def admissible_commands(
    current: SensorState, params: ControlParams, bounds: np.ndarray
) -> list[ControlCommand]:
    """The stay command plus a radial grid of moves, clamped to ``bounds``
    ((2, 2) lower/upper box)."""
    bounds = np.asarray(bounds, dtype=float)
    here = np.clip(current.position, bounds[:, 0], bounds[:, 1])
    commands = [ControlCommand(0, SensorState(here))]
    headings = 2.0 * np.pi * np.arange(params.num_headings) / max(params.num_headings, 1)
    next_id = 1
    for j in range(1, params.num_radii + 1):
        for theta in headings:
            step = params.step_size * j * np.array([np.cos(theta), np.sin(theta)])
            target = np.clip(here + step, bounds[:, 0], bounds[:, 1])
            commands.append(ControlCommand(next_id, SensorState(target)))
            next_id += 1
    return commands


def build_pims(
    predicted: MultiBernoulliDensity,
    candidate: SensorState,
    sensor_model,
    threshold: float,
) -> np.ndarray:
    """Predicted ideal measurement set for a candidate pose: one noiseless
    measurement per estimated object, no clutter, no missed detections."""
    estimate = extract_estimate(predicted, threshold)
    if estimate.count == 0:
        return np.empty((0, sensor_model.measurement_dim))
    positions = np.array([s[:2] for s in estimate.states])
    return sensor_model.ideal(candidate, positions)


def cardinality_variance(density: MultiBernoulliDensity) -> float:
    """Variance of the cardinality distribution: sum of r(1 - r)."""
    r = density.existence_probabilities()
    return float(np.sum(r * (1.0 - r)))


def normalized_cardinality_error(density: MultiBernoulliDensity) -> float:
    """Cardinality variance scaled by its maximum M/4 (all r at one half);
    0 for an empty density."""
    m = len(density)
    if m == 0:
        return 0.0
    return cardinality_variance(density) / (m / 4.0)


def component_state_error(component: BernoulliComponent) -> float:
    """Normalized positional spread of one component in [0, 1].

    The product of the x and y weighted variances is divided by the
    product of reference maxima (1/L)(1 - 1/L) * sum of squared
    coordinates — the spread of an equally weighted, uninformative cloud.
    The reference is not a strict upper bound, so the ratio is clamped;
    a zero reference (single particle, or all-zero coordinates) means zero
    spread by convention.
    """
    n = component.size
    if n == 1:
        return 0.0
    w = component.weights
    xy = component.states[:, :2]
    squares = xy * xy
    mean = w @ xy
    var = w @ squares - mean * mean
    reference = (1.0 / n) * (1.0 - 1.0 / n) * squares.sum(axis=0)
    if reference[0] <= 0.0 or reference[1] <= 0.0:
        return 0.0
    value = (var[0] * var[1]) / (reference[0] * reference[1])
    return float(min(max(value, 0.0), 1.0))


def _finish_state_errors(variances, reference):
    with np.errstate(divide="ignore", invalid="ignore"):
        value = (variances[:, 0] * variances[:, 1]) / (reference[:, 0] * reference[:, 1])
    value = np.where((reference[:, 0] <= 0.0) | (reference[:, 1] <= 0.0), 0.0, value)
    return np.clip(value, 0.0, 1.0)


def _grouped_state_errors(density: MultiBernoulliDensity) -> np.ndarray:
    """Per-component state errors with two batching strategies: components
    sharing one particle array (the measurement-corrected components of an
    update all reweight the same cloud) go through a single matrix product,
    and solitary components of equal particle count are stacked into one
    tensor pass."""
    comps = density.components
    errors = np.empty(len(comps))
    by_array: dict[int, list[int]] = {}
    for i, c in enumerate(comps):
        by_array.setdefault(id(c.states), []).append(i)

    solitary_by_size: dict[int, list[int]] = {}
    for indices in by_array.values():
        first = comps[indices[0]]
        n = first.size
        if n == 1:
            errors[indices] = 0.0
        elif len(indices) == 1:
            solitary_by_size.setdefault(n, []).append(indices[0])
        else:
            xy = first.states[:, :2]
            squares = xy * xy
            reference = np.tile(
                (1.0 / n) * (1.0 - 1.0 / n) * squares.sum(axis=0), (len(indices), 1)
            )
            w = np.stack([comps[i].weights for i in indices], axis=1)
            means = w.T @ xy
            variances = w.T @ squares - means * means
            errors[indices] = _finish_state_errors(variances, reference)

    for n, indices in solitary_by_size.items():
        xy = np.stack([comps[i].states[:, :2] for i in indices])  # (G, n, 2)
        squares = xy * xy
        w = np.stack([comps[i].weights for i in indices])  # (G, n)
        means = np.einsum("gl,glj->gj", w, xy)
        variances = np.einsum("gl,glj->gj", w, squares) - means * means
        reference = (1.0 / n) * (1.0 - 1.0 / n) * squares.sum(axis=1)
        errors[indices] = _finish_state_errors(variances, reference)
    return errors


def normalized_state_error(density: MultiBernoulliDensity) -> float:
    """Existence-weighted average of per-component state errors; 0 when
    total existence mass is 0."""
    r = density.existence_probabilities()
    total = r.sum()
    if total <= 0.0:
        return 0.0
    return float((r @ _grouped_state_errors(density)) / total)


def peecs_cost(density: MultiBernoulliDensity, eta: float) -> CostBreakdown:
    """Posterior expected error of cardinality and states: the [0, 1]
    blend eta * cardinality error + (1 - eta) * state error."""
    card = normalized_cardinality_error(density)
    state = normalized_state_error(density)
    return CostBreakdown(
        cardinality_error=card,
        state_error=state,
        eta=eta,
        total=eta * card + (1.0 - eta) * state,
    )


def cardinality_pmf(density: MultiBernoulliDensity) -> np.ndarray:
    """Exact cardinality distribution of independent Bernoulli components
    (convolution recurrence)."""
    pmf = np.array([1.0])
    for r in density.existence_probabilities():
        pmf = np.convolve(pmf, [1.0 - r, r])
    return pmf


def map_cardinality_variance_cost(density: MultiBernoulliDensity) -> float:
    """Baseline cost: variance of the cardinality around its MAP estimate
    (smallest mode index on ties)."""
    pmf = cardinality_pmf(density)
    n_map = int(np.argmax(pmf))
    n = np.arange(pmf.size)
    return float(pmf @ (n - n_map) ** 2)


def _evaluate(density: MultiBernoulliDensity, params: ControlParams) -> CostBreakdown:
    if params.cost == COST_MAP_VARIANCE:
        v = map_cardinality_variance_cost(density)
        return CostBreakdown(cardinality_error=v, state_error=0.0, eta=1.0, total=v)
    eta = 1.0 if params.cost == COST_CARDINALITY_ONLY else params.eta
    return peecs_cost(density, eta)


def select_command(
    predicted: MultiBernoulliDensity,
    current: SensorState,
    sensor_model,
    clutter: ClutterModel,
    params: ControlParams,
    bounds: np.ndarray,
    existence_threshold: float = 0.5,
    rng=None,
) -> SelectionResult:
    """Pick the admissible command whose hypothetical posterior is least
    uncertain.

    Each command is scored by updating the shared predicted density with
    the PIMS built at its candidate pose (detection probability evaluated
    there too) and applying the configured cost; track management is not
    run on these throwaway posteriors.  A command whose hypothetical update
    fails scores infinity.  Ties prefer staying put, then the lowest id.
    ``rng`` is accepted for interface symmetry and never drawn from.
    """
    commands = admissible_commands(current, params, bounds)
    # The estimated objects do not depend on the candidate pose; only their
    # ideal measurements do, so extract once and project per command.
    estimate = extract_estimate(predicted, existence_threshold)
    estimated_positions = (
        np.array([s[:2] for s in estimate.states]) if estimate.count else None
    )
    empty_pims = np.empty((0, sensor_model.measurement_dim))
    costs: list[CostBreakdown] = []
    for command in commands:
        try:
            if estimated_positions is None:
                pims = empty_pims
            else:
                pims = sensor_model.ideal(command.target, estimated_positions)
            hypothetical = update(predicted, pims, command.target, sensor_model, clutter)
            costs.append(_evaluate(hypothetical, params))
        except MbTrackError:
            costs.append(
                CostBreakdown(
                    cardinality_error=math.inf, state_error=math.inf, eta=1.0, total=math.inf
                )
            )

    def rank(i: int):
        stays = bool(np.all(commands[i].target.position == current.position))
        return (costs[i].total, 0 if stays else 1, commands[i].id)

    best = min(range(len(commands)), key=rank)
    return SelectionResult(
        best=commands[best], best_index=best, commands=commands, costs=costs
    )
