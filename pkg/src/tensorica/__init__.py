"""Online tensorial ICA: projected stochastic gradient on the unit sphere.

Quick start::

    from tensorica import MixingModel, SourceDistribution, run

    model = MixingModel.random(20, SourceDistribution.gaussian_bernoulli(), seed=1)
    trace = run(model, T=1_000_000, schedule="two_phase_practical", seed=2)
    trace.final_error
"""

from .datagen import (
    MixingModel,
    ObservationStream,
    SourceDistribution,
    sample_haar_orthogonal,
    sample_source,
)
from .diagnostics import (
    RunTrace,
    closest_component,
    coord_ratios,
    objective_estimate,
    region_of,
    rescaled_time,
    rotate,
    tan_angle,
)
from .solver import (
    SolverState,
    StepsizeSchedule,
    init_uniform,
    project_sphere,
    run,
    sgd_step,
    stepsize_at,
)

__version__ = "0.1.0"

__all__ = [
    "MixingModel",
    "ObservationStream",
    "RunTrace",
    "SolverState",
    "SourceDistribution",
    "StepsizeSchedule",
    "closest_component",
    "coord_ratios",
    "init_uniform",
    "objective_estimate",
    "project_sphere",
    "region_of",
    "rescaled_time",
    "rotate",
    "run",
    "sample_haar_orthogonal",
    "sample_source",
    "sgd_step",
    "stepsize_at",
    "tan_angle",
]
