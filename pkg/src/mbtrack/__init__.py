"""Particle multi-Bernoulli multi-target tracking with sensor control.

The package couples a sequential Monte Carlo multi-Bernoulli filter with
myopic sensor control: at each step the sensor command minimizing the
posterior uncertainty (normalized cardinality variance blended with
normalized state spread) is applied before measuring.  A scenario
simulator, OSPA scoring, and a Monte-Carlo CLI harness are included.
"""

from .control import (
    ControlCommand,
    ControlParams,
    CostBreakdown,
    admissible_commands,
    build_pims,
    cardinality_variance,
    map_cardinality_variance_cost,
    normalized_cardinality_error,
    normalized_state_error,
    peecs_cost,
    select_command,
)
from .errors import (
    AllWeightsZeroError,
    ConfigError,
    DegenerateGeometryError,
    DimensionMismatchError,
    MbTrackError,
    NonFiniteError,
    NonFiniteLikelihoodError,
    NonSquareError,
)
from .filtering import (
    FilterParams,
    MultiTargetEstimate,
    extract_estimate,
    predict,
    prune_merge_resample,
    update,
)
from .harness import (
    GroundTruth,
    MonteCarloResult,
    StepRecord,
    generate_measurements,
    run_monte_carlo,
    run_scenario,
    run_step,
    simulate_truth,
)
from .metrics import OspaParams, OspaResult, assignment_min_cost, ospa
from .models import (
    BearingRangeSensorModel,
    BirthModel,
    ClutterModel,
    DetectionProfile,
    MotionModel,
    RangeSensorModel,
    SensorState,
    detection_probability,
    ideal_measurement,
    propagate_ct,
    propagate_cv,
    sample_clutter,
)
from .rfs import (
    BernoulliComponent,
    MultiBernoulliDensity,
    RandomSource,
    normalize_weights,
    resample,
    weighted_mean,
)
from .scenario import ScenarioConfig, build_models, load_config, load_preset

__version__ = "0.1.0"
