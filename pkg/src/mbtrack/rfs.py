"""Core random-finite-set types and particle utilities.

A Bernoulli component is an existence probability ``r`` together with a
weighted particle cloud approximating the single-object state density;
a multi-Bernoulli density is a list of such components.  Particles are
stored columnwise in arrays (``states`` is ``(L, d)``, ``weights`` is
``(L,)``) so that every operation on a component is vectorized.

All randomness in the package flows through :class:`RandomSource`, a
seeded generator with deterministic child-stream splitting, so a run is
fully reproducible from its seed.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field

import numpy as np

from .errors import AllWeightsZeroError

# Totals at or below this are indistinguishable from an all-zero weight set.
_WEIGHT_FLOOR = 1e-300


class RandomSource:
    """Seeded random stream with deterministic child splitting.

    The same seed always yields the same draw sequence.  ``child(*path)``
    derives an independent stream from (seed, path); the path may mix
    integers and string labels, so e.g. ``rng.child("step", k, "clutter")``
    is stable across runs and unaffected by how much the parent has drawn.
    """

    def __init__(self, seed: int, _path: tuple[int, ...] = ()):
        self.seed = int(seed)
        self._path = _path
        self.generator = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence(entropy=self.seed, spawn_key=_path))
        )

    def child(self, *path) -> "RandomSource":
        keys = tuple(
            p if isinstance(p, int) else zlib.crc32(str(p).encode()) for p in path
        )
        return RandomSource(self.seed, self._path + keys)

    def __repr__(self):
        return f"RandomSource(seed={self.seed}, path={self._path})"


def normalize_weights(weights: np.ndarray) -> np.ndarray:
    """Scale weights to sum to one, preserving proportions.

    Raises :class:`AllWeightsZeroError` when the total weight is zero (a
    degenerate particle set the caller should discard).
    """
    weights = np.asarray(weights, dtype=float)
    total = weights.sum()
    if not np.isfinite(total) or total <= _WEIGHT_FLOOR:
        raise AllWeightsZeroError(f"total particle weight {total} is not positive")
    return weights / total


def weighted_mean(states: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Expected state of a normalized particle cloud (componentwise)."""
    return np.asarray(weights, dtype=float) @ np.asarray(states, dtype=float)


def systematic_resample_indices(
    weights: np.ndarray, count: int, rng: RandomSource
) -> np.ndarray:
    """Systematic resampling: ``count`` indices with multiplicity ~ weight.

    Uses a single uniform offset and an evenly spaced grid through the
    cumulative weights, which has lower variance than multinomial draws.
    """
    weights = np.asarray(weights, dtype=float)
    total = weights.sum()
    if not np.isfinite(total) or total <= _WEIGHT_FLOOR:
        raise AllWeightsZeroError("cannot resample a zero-weight particle set")
    cumulative = np.cumsum(weights)
    cumulative /= cumulative[-1]
    positions = (rng.generator.random() + np.arange(count)) / count
    return np.searchsorted(cumulative, positions)


@dataclass
class BernoulliComponent:
    """One track hypothesis: existence probability plus a particle cloud.

    ``states`` and ``weights`` are treated as immutable after construction;
    operations return new components and may share state arrays between
    components (e.g. measurement-updated components reweight a common
    particle set).
    """

    r: float
    states: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        self.states = np.atleast_2d(np.asarray(self.states, dtype=float))
        self.weights = np.asarray(self.weights, dtype=float)
        if self.weights.ndim != 1 or self.states.shape[0] != self.weights.shape[0]:
            raise ValueError(
                f"states {self.states.shape} and weights {self.weights.shape} disagree"
            )
        if self.states.shape[0] == 0:
            raise ValueError("a Bernoulli component needs at least one particle")
        r = float(self.r)
        if not (-1e-9 <= r <= 1 + 1e-9):
            raise ValueError(f"existence probability {r} outside [0, 1]")
        self.r = min(max(r, 0.0), 1.0)

    @property
    def size(self) -> int:
        return self.weights.shape[0]

    def normalized(self) -> "BernoulliComponent":
        return BernoulliComponent(self.r, self.states, normalize_weights(self.weights))

    def mean(self) -> np.ndarray:
        """EAP state estimate of this component (assumes normalized weights)."""
        return weighted_mean(self.states, self.weights)

    def position_mean(self) -> np.ndarray:
        return self.mean()[:2]


def resample(
    component: BernoulliComponent, target_count: int, rng: RandomSource
) -> BernoulliComponent:
    """Resample a component to ``target_count`` equally weighted particles.

    Existence probability is untouched; states are drawn systematically
    with multiplicities proportional to the (normalized) input weights.
    """
    if target_count <= 0:
        raise ValueError(f"target_count must be positive, got {target_count}")
    idx = systematic_resample_indices(component.weights, target_count, rng)
    return BernoulliComponent(
        component.r,
        component.states[idx],
        np.full(target_count, 1.0 / target_count),
    )


@dataclass(frozen=True)
class StackedParticles:
    """All particles of a density concatenated for vectorized passes.

    ``offsets`` has one extra trailing entry, so component ``i`` owns the
    slice ``offsets[i]:offsets[i + 1]``.
    """

    states: np.ndarray
    weights: np.ndarray
    offsets: np.ndarray
    r: np.ndarray

    @property
    def sizes(self) -> np.ndarray:
        return np.diff(self.offsets)


@dataclass
class MultiBernoulliDensity:
    """Multi-object belief: an (unordered in meaning, ordered in storage)
    list of independent Bernoulli components.

    Treated as immutable once built; the stacked-particle view is computed
    lazily and cached, which lets the many hypothetical updates of one
    prediction share a single concatenation pass.
    """

    components: list[BernoulliComponent] = field(default_factory=list)
    _stacked: StackedParticles | None = field(
        default=None, init=False, repr=False, compare=False
    )

    def __len__(self):
        return len(self.components)

    def __iter__(self):
        return iter(self.components)

    def existence_probabilities(self) -> np.ndarray:
        return np.array([c.r for c in self.components], dtype=float)

    def expected_cardinality(self) -> float:
        """Mean of the cardinality distribution, sum of existence probabilities."""
        return float(sum(c.r for c in self.components))

    def stacked(self) -> StackedParticles:
        if self._stacked is None:
            sizes = [c.size for c in self.components]
            self._stacked = StackedParticles(
                states=np.vstack([c.states for c in self.components]),
                weights=np.concatenate([c.weights for c in self.components]),
                offsets=np.concatenate([[0], np.cumsum(sizes)]),
                r=self.existence_probabilities(),
            )
        return self._stacked


def empty_density() -> MultiBernoulliDensity:
    return MultiBernoulliDensity([])
