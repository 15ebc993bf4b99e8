"""Closed-loop scenario runner and Monte-Carlo aggregation.

One step of the loop: predict the multi-object density, pick the sensor
command whose hypothetical posterior is least uncertain, move the sensor,
draw the real measurement set (detections plus clutter), update, manage
tracks, extract the estimate, and score it against truth.  Runs are fully
determined by (config, seed): truth, measurement, and filter randomness
live on separate child streams so toggling one does not perturb the rest.

CSV note: the control-step wall time is always measured and kept on the
in-memory records, but is written to CSV as 0 unless timing output is
explicitly enabled — wall-clock noise would otherwise break the
byte-for-byte reproducibility of output files.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .control import select_command
from .filtering import (
    extract_estimate,
    predict,
    prune_merge_resample,
    update,
)
from .metrics import OspaResult, ospa
from .models import SensorState, detection_probability, sample_clutter
from .rfs import MultiBernoulliDensity, RandomSource, empty_density
from .scenario import ScenarioConfig, ScenarioModels, build_models

STEP_CSV_COLUMNS = (
    "k",
    "n_true",
    "n_est",
    "ospa",
    "ospa_loc",
    "ospa_card",
    "sensor_x",
    "sensor_y",
    "cmd_id",
    "cost",
    "ctrl_ms",
)


@dataclass
class GroundTruth:
    """True target states per step: ``states[k]`` is the (n_k, d) array of
    targets alive at step k, for k = 0..duration."""

    states: list[np.ndarray]

    def count(self, k: int) -> int:
        return len(self.states[k])

    def positions(self, k: int) -> np.ndarray:
        return self.states[k][:, :2] if len(self.states[k]) else np.empty((0, 2))


@dataclass
class StepRecord:
    k: int
    n_true: int
    n_est: int
    ospa: float
    ospa_loc: float
    ospa_card: float
    sensor_x: float
    sensor_y: float
    cmd_id: int
    cost: float
    ctrl_ms: float
    command_costs: tuple[float, ...] | None = None


@dataclass
class LoopState:
    density: MultiBernoulliDensity
    sensor: SensorState


def simulate_truth(config: ScenarioConfig, rng: RandomSource) -> GroundTruth:
    """Propagate the configured targets through the truth motion model.

    Each target exists from its birth step until its death step (defaults:
    the whole run).  Propagation consumes the stream one target at a time
    in configuration order, so truth is reproducible per seed.
    """
    models = build_models(config)
    duration = config.duration
    current = [np.asarray(t.state, dtype=float) for t in config.targets]
    spans = [
        (t.birth_step, duration + 1 if t.death_step is None else t.death_step)
        for t in config.targets
    ]
    per_step: list[np.ndarray] = []
    dim = models.truth_motion.state_dim
    for k in range(duration + 1):
        alive = [current[i] for i in range(len(current)) if spans[i][0] <= k < spans[i][1]]
        per_step.append(np.array(alive) if alive else np.empty((0, dim)))
        for i in range(len(current)):
            if spans[i][0] <= k:  # frozen until birth, then moves
                current[i] = models.truth_motion.propagate(current[i], rng)
    return GroundTruth(per_step)


def generate_measurements(
    truth_states: np.ndarray,
    sensor: SensorState,
    models: ScenarioModels,
    detect_rng: RandomSource,
    clutter_rng: RandomSource,
    order_rng: RandomSource,
) -> np.ndarray:
    """Detections (per-target coin flips at the location-dependent rate,
    then model noise) plus Poisson clutter, in randomized order."""
    dim = models.sensor_model.measurement_dim
    detections = np.empty((0, dim))
    if len(truth_states):
        positions = truth_states[:, :2]
        p_d = np.atleast_1d(
            detection_probability(sensor, positions, models.sensor_model.profile)
        )
        detected = detect_rng.generator.random(len(positions)) < p_d
        if np.any(detected):
            detections = models.sensor_model.sample(
                sensor, positions[detected], detect_rng
            )
    clutter = sample_clutter(models.clutter, clutter_rng)
    combined = np.vstack([detections, clutter])
    if len(combined) > 1:
        combined = combined[order_rng.generator.permutation(len(combined))]
    return combined


def run_step(
    state: LoopState,
    truth_states: np.ndarray,
    k: int,
    config: ScenarioConfig,
    models: ScenarioModels,
    rng: RandomSource,
    record_command_costs: bool = False,
) -> tuple[LoopState, StepRecord]:
    filter_rng = rng.child("filter", k)
    predicted = predict(
        state.density, models.filter_motion, models.birth, filter_rng, config.filter
    )

    t0 = time.perf_counter()
    selection = select_command(
        predicted,
        state.sensor,
        models.sensor_model,
        models.clutter,
        config.control,
        models.bounds,
        config.filter.existence_threshold,
    )
    ctrl_ms = (time.perf_counter() - t0) * 1e3

    sensor = selection.best.target
    measurements = generate_measurements(
        truth_states,
        sensor,
        models,
        rng.child("meas", k),
        rng.child("clutter", k),
        rng.child("order", k),
    )
    updated = update(predicted, measurements, sensor, models.sensor_model, models.clutter)
    managed = prune_merge_resample(updated, config.filter, filter_rng)
    estimate = extract_estimate(managed, config.filter.existence_threshold)

    truth_positions = truth_states[:, :2] if len(truth_states) else np.empty((0, 2))
    estimate_positions = (
        np.array([s[:2] for s in estimate.states])
        if estimate.states
        else np.empty((0, 2))
    )
    score: OspaResult = ospa(truth_positions, estimate_positions, config.ospa)

    chosen = selection.best_cost
    record = StepRecord(
        k=k,
        n_true=len(truth_states),
        n_est=estimate.count,
        ospa=score.total,
        ospa_loc=score.localization,
        ospa_card=score.cardinality,
        sensor_x=sensor.x,
        sensor_y=sensor.y,
        cmd_id=selection.best.id,
        cost=chosen.total,
        ctrl_ms=ctrl_ms,
        command_costs=tuple(c.total for c in selection.costs)
        if record_command_costs
        else None,
    )
    return LoopState(density=managed, sensor=sensor), record


def run_scenario(
    config: ScenarioConfig, record_command_costs: bool = False
) -> list[StepRecord]:
    """Run the closed loop for the configured duration; deterministic per
    (config, seed)."""
    models = build_models(config)
    rng = RandomSource(config.seed)
    truth = simulate_truth(config, rng.child("truth"))
    state = LoopState(density=empty_density(), sensor=models.initial_sensor)
    records = []
    for k in range(1, config.duration + 1):
        state, record = run_step(
            state, truth.states[k], k, config, models, rng, record_command_costs
        )
        records.append(record)
    return records


def _worker(args) -> list[StepRecord]:
    config, seed = args
    return run_scenario(replace(config, seed=seed))


def run_batch(
    config: ScenarioConfig, runs: int, parallelism: int = 1
) -> list[list[StepRecord]]:
    """Independent runs with seeds seed+0 .. seed+runs-1, in run order."""
    if runs < 1:
        raise ValueError("need at least one run")
    jobs = [(config, config.seed + i) for i in range(runs)]
    if parallelism > 1:
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            return list(pool.map(_worker, jobs))
    return [_worker(job) for job in jobs]


@dataclass
class MonteCarloResult:
    """Per-step aggregates across runs (population std, so a single run
    reports zero spread)."""

    steps: np.ndarray
    ospa_mean: np.ndarray
    ospa_std: np.ndarray
    ospa_loc_mean: np.ndarray
    ospa_loc_std: np.ndarray
    ospa_card_mean: np.ndarray
    ospa_card_std: np.ndarray
    ctrl_ms_mean: np.ndarray
    ctrl_ms_std: np.ndarray
    runs: int


def aggregate_records(batches: list[list[StepRecord]]) -> MonteCarloResult:
    data = np.array(
        [
            [(r.ospa, r.ospa_loc, r.ospa_card, r.ctrl_ms) for r in records]
            for records in batches
        ]
    )  # (runs, K, 4)
    mean = data.mean(axis=0)
    std = data.std(axis=0)
    steps = np.array([r.k for r in batches[0]])
    return MonteCarloResult(
        steps=steps,
        ospa_mean=mean[:, 0],
        ospa_std=std[:, 0],
        ospa_loc_mean=mean[:, 1],
        ospa_loc_std=std[:, 1],
        ospa_card_mean=mean[:, 2],
        ospa_card_std=std[:, 2],
        ctrl_ms_mean=mean[:, 3],
        ctrl_ms_std=std[:, 3],
        runs=len(batches),
    )


def run_monte_carlo(
    config: ScenarioConfig, runs: int, parallelism: int = 1
) -> MonteCarloResult:
    """Aggregate ``runs`` independent runs; the result is a pure reduction
    over per-run outputs, so it does not depend on the parallelism degree."""
    return aggregate_records(run_batch(config, runs, parallelism))


def _fmt(value: float) -> str:
    return f"{value:.9g}"


def write_steps_csv(records: list[StepRecord], path: str, include_timing: bool = False):
    lines = [",".join(STEP_CSV_COLUMNS)]
    for r in records:
        lines.append(
            ",".join(
                [
                    str(r.k),
                    str(r.n_true),
                    str(r.n_est),
                    _fmt(r.ospa),
                    _fmt(r.ospa_loc),
                    _fmt(r.ospa_card),
                    _fmt(r.sensor_x),
                    _fmt(r.sensor_y),
                    str(r.cmd_id),
                    _fmt(r.cost),
                    _fmt(r.ctrl_ms if include_timing else 0.0),
                ]
            )
        )
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


AGGREGATE_CSV_COLUMNS = (
    "k",
    "ospa_mean",
    "ospa_std",
    "ospa_loc_mean",
    "ospa_loc_std",
    "ospa_card_mean",
    "ospa_card_std",
    "ctrl_ms_mean",
    "ctrl_ms_std",
)


def aggregate_csv_rows(result: MonteCarloResult, include_timing: bool = False):
    for i, k in enumerate(result.steps):
        yield [
            str(int(k)),
            _fmt(result.ospa_mean[i]),
            _fmt(result.ospa_std[i]),
            _fmt(result.ospa_loc_mean[i]),
            _fmt(result.ospa_loc_std[i]),
            _fmt(result.ospa_card_mean[i]),
            _fmt(result.ospa_card_std[i]),
            _fmt(result.ctrl_ms_mean[i] if include_timing else 0.0),
            _fmt(result.ctrl_ms_std[i] if include_timing else 0.0),
        ]


def write_aggregate_csv(result: MonteCarloResult, path: str, include_timing: bool = False):
    lines = [",".join(AGGREGATE_CSV_COLUMNS)]
    lines.extend(",".join(row) for row in aggregate_csv_rows(result, include_timing))
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
