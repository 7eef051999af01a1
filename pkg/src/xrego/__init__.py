"""Random-embedding global optimization for functions with low effective
dimensionality, with the statistical validation suite behind it."""

from .embedcore import (
    DegenerateMatrixError,
    EffectiveSubspace,
    Embedding,
    SeededRng,
    compute_w,
    minimal_norm_y,
    project_effective,
    sample_gaussian,
    sample_haar_orthogonal,
)
from .numerics import (
    DistributionParams,
    QuadratureConfig,
    QuadratureError,
    asymptotic_J,
    chi2_cdf,
    f_cdf,
    integral_I,
    integral_J,
    pdf_w,
)
from .problems import (
    BaseFunction,
    SyntheticProblem,
    base_function,
    base_names,
    default_manifest,
    evaluate,
    generate,
    lift,
    load_manifest,
    quadratic_base,
    scale_to_unit_box,
    write_manifest,
)
from .reduced import ReducedProblem, SolveResult, compute_y_box, is_feasible, make_reduced
from .solvers import SolverBudget, SolverSpec, direct_iterate, solve
from .driver import (
    PPolicy,
    RunConfig,
    RunRecord,
    SolverFailure,
    run,
    run_record_rows,
    update_p,
    x_opt,
)
from .theory import (
    SuccessTrial,
    TheoryReport,
    convergence_bound,
    empirical_curve,
    estimate_rho,
    k_xi,
    ks_check_chi2,
    ks_check_f,
    mc_success_probability,
    sample_w,
    spherical_check,
    success_chain,
    tau_bounds,
    tau_epsilon,
    validation_suite,
)
from .harness import (
    ExperimentPlan,
    ProfileCurve,
    emit,
    median_table,
    performance_profile,
    plan_from_dict,
    run_plan,
)

__version__ = "0.1.0"
