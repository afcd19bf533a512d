"""Probabilistic multi-agent area search simulation.

Agents with body-frame sensor footprints sweep a domain; accumulated coverage
drives an exponential detection model over a target-occurrence prior. Fleet
motion is steered by one of four interchangeable controllers (heat-potential
gradient following, serpentine lanes, spectral coverage error, receding-
horizon swarm optimization), and a Monte-Carlo harness evaluates search
performance, step timing and fleet-size scalability.
"""

from .controllers import (
    ControllerSpec,
    HedacController,
    LawnmowerController,
    LawnmowerParams,
    RhcController,
    RhcParams,
    SmcController,
    SmcParams,
    make_controller,
)
from .engine import (
    EnsembleResult,
    RunMetrics,
    benchmark_step,
    run_ensemble,
    run_simulation,
    scalability_study,
    t90,
)
from .errors import (
    AreaSearchError,
    ConfigError,
    DegeneratePriorError,
    GridMismatchError,
    NumericDomainError,
    OutOfDomainError,
    SolverFailureError,
)
from .grid import (
    GridSpec,
    ScalarField,
    field_from_function,
    full_field,
    gradient,
    integrate,
    interpolate,
    load_field,
    save_field,
    scale_to_unit_mass,
    zeros_field,
)
from .heat import HedacParams, PotentialField, direction_field, solve_potential
from .motion import AgentState, enforce_boundary, step_agent, step_dubins, step_kinematic
from .scenarios import (
    CircleSet,
    RoadNetwork,
    Scenario,
    build_scenario,
    build_test_scenario,
    gaussian_prior,
    region_prior,
    replicate_fleet,
    road_prior,
    sample_targets,
    scenario_to_config,
)
from .sensing import (
    CoverageField,
    OccurrenceField,
    SensorModel,
    calibrate_gain,
    detection_probability,
    intensity,
    stamp_coverage,
    to_body_frame,
    total_presence,
    update_occurrence,
)

__version__ = "0.1.0"
