"""branchkit: branching processes with interaction, their diffusion limit,
and Ray-Knight local-time representations, with the statistical machinery to
verify the connecting identities by simulation."""

from .interaction import (
    Classification,
    HypothesisReport,
    InteractionFunction,
    ScaleReport,
    classify,
    evaluate,
    hitting_probability,
    scale_function,
    validate_hypotheses,
)
from .discrete import (
    DiscreteParams,
    MartingaleLedger,
    RenormalizedSpec,
    StepPath,
    renormalized_params,
    simulate_coupled_pair,
    simulate_increment,
    simulate_population,
    simulate_renormalized,
    total_rates,
)
from .forest import (
    LocalTimeProfile,
    PlanarForest,
    PolyPath,
    discrete_ray_knight_check,
    explore,
    grow_forest,
    grow_renormalized_forest,
    local_time,
)
from .diffusion import (
    ExtinctionReport,
    FirstHitEstimate,
    Trajectory,
    extinction_stats,
    first_hit,
    solve_coupled,
    solve_environment,
    solve_feller,
)
from .rayknight import (
    LocalTimeField,
    RKParams,
    calibrate_boundary_constant,
    excursion_projection,
    ray_knight_field,
    simulate_reflected,
    total_mass_identity,
)
from .analysis import (
    ComparisonReport,
    MomentReport,
    SampleSet,
    compare,
    convergence_experiment,
    ks_two_sample,
    moment_report,
)

__version__ = "0.1.0"
