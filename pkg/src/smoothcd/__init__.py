"""smoothcd: random coordinate descent on smooth surrogates of nonsmooth
convex objectives, with accelerated and restarted variants, a Bregman
relative-smooth solver, a proximal-operator toolbox, and a benchmark harness.
"""

from .bregman import (
    Kernel,
    PowerKernel,
    QuadKernel,
    QuarticProblem,
    bregman_distance,
    quartic_lipschitz,
    rrcd_run,
)
from .core import (
    BlockPartition,
    ConfigurationError,
    InfeasibleError,
    LipschitzProfile,
    NumericalFailure,
    dual_weighted_norm,
    sampler_draw,
    weighted_norm,
)
from .harness import (
    ExperimentSpec,
    build_surrogate,
    gen_quadratic_l1,
    gen_quadratic_l2,
    gen_quadratic_tv,
    gen_quartic,
    reference_solve,
    run_experiment,
)
from .problems import QuadraticComposite, SaddleProblem
from .rates import (
    contraction_C1,
    growth_constant_fb,
    growth_constant_me,
    growth_constant_ns,
)
from .rng import Pcg32
from .smoothing import (
    DouglasRachfordSurrogate,
    ForwardBackwardSurrogate,
    MoreauSurrogate,
    NesterovSurrogate,
    SmoothSurrogate,
    surrogate_check,
)
from .solvers import (
    DoublingRestart,
    FixedRestart,
    SolveResult,
    SolverConfig,
    Trace,
    accd_run,
    accd_step_params,
    cd_run,
    doubling_schedule,
    restart_period,
    restart_run,
)

__version__ = "0.1.0"

__all__ = [
    "BlockPartition",
    "ConfigurationError",
    "DoublingRestart",
    "DouglasRachfordSurrogate",
    "ExperimentSpec",
    "FixedRestart",
    "ForwardBackwardSurrogate",
    "InfeasibleError",
    "Kernel",
    "LipschitzProfile",
    "MoreauSurrogate",
    "NesterovSurrogate",
    "NumericalFailure",
    "Pcg32",
    "PowerKernel",
    "QuadKernel",
    "QuadraticComposite",
    "QuarticProblem",
    "SaddleProblem",
    "SmoothSurrogate",
    "SolveResult",
    "SolverConfig",
    "Trace",
    "accd_run",
    "accd_step_params",
    "bregman_distance",
    "build_surrogate",
    "cd_run",
    "contraction_C1",
    "doubling_schedule",
    "dual_weighted_norm",
    "gen_quadratic_l1",
    "gen_quadratic_l2",
    "gen_quadratic_tv",
    "gen_quartic",
    "growth_constant_fb",
    "growth_constant_me",
    "growth_constant_ns",
    "quartic_lipschitz",
    "reference_solve",
    "restart_period",
    "restart_run",
    "rrcd_run",
    "run_experiment",
    "sampler_draw",
    "surrogate_check",
    "weighted_norm",
]
