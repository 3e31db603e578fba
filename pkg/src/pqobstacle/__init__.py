"""pqobstacle: vectorial obstacle problems with (p,q)-growth energies.

Solves the exact-L1-penalized, softplus-smoothed, q-regularized discrete
energy over piecewise-linear fields on box grids, runs the (eps, delta)
continuation ladder, and computes the diagnostics (W^{1,q} norms, V-function
statistics, Nikolskii seminorms, cutoff functionals, mollification probes)
that characterize the regularity of the solutions.
"""

from .diagnostics import (
    DiagnosticsReport,
    compute_report,
    cutoff_functional,
    gap_check,
    lavrentiev_probe,
    nikolskii_seminorm,
    v_equivalence_check,
    v_function,
    w1q_norm,
)
from .grid import (
    Field,
    Grid,
    TriGradient,
    gradient,
    integrate_energy,
    lp_norm,
    prolong,
    read_field,
    restrict,
    sample,
    write_field,
)
from .integrand import (
    GrowthParams,
    Integrand,
    double_phase,
    holder_modulated,
    p_power,
    p_power_regularized,
    user_density,
)
from .kernels import backend_name
from .penalty import (
    PenaltyParams,
    compute_kappa0,
    h_delta,
    h_delta_prime,
    smoothed_penalty,
    smoothed_penalty_gradient,
    violation,
)
from .solver import (
    DEFAULT_LADDER,
    ObstacleProblem,
    SolveConfig,
    SolveResult,
    StagnationError,
    assemble_gradient,
    minimize,
    projected_gradient_oracle,
    solve_ladder,
)

__version__ = "0.1.0"
