"""Optimal transport on Minkowski spacetime with the quadratic Lorentzian cost.

Modules: geometry (causal structure, minimizers), lagrangian (cost family,
Legendre transform, Hamiltonian), transport (exact Kantorovich solve, duals,
displacement interpolation), semigroup (Lax-Oleinik operators and the
forward-backward regularized pair), verify (numerical certification), cli
(pipeline driver), io (artifact formats).
"""

from .geometry import (
    Causality,
    Geometry,
    MinimizerCurve,
    Minkowski,
    NotCausal,
    NotCausallyRelated,
)
from .lagrangian import (
    CostSuperDifferential,
    InDualCone,
    NoConvergence,
    NonpositiveTime,
    NotChronological,
    NotTimelike,
    SuperlinearityConstant,
    action,
    cost,
    cost_batch,
    cost_matrix,
    cost_superdifferential,
    dLdv,
    hamiltonian,
    lagrangian,
    legendre,
    legendre_inverse,
    superlinearity_constant,
)
from .semigroup import (
    CandidateSet,
    GridSpec,
    PotentialField,
    RegularizedPair,
    TauOutOfRange,
    backward_lax_oleinik,
    enrich_candidates,
    evolve_phi,
    evolve_psi,
    forward_lax_oleinik,
    regularized_pair,
)
from .transport import (
    Coupling,
    DiscreteMeasure,
    DualPair,
    DynamicalCoupling,
    Infeasible,
    check_chronological_support,
    displacement_interpolation,
    dynamical_coupling,
    intermediate_coupling,
    solve_kantorovich,
)
from .verify import (
    BoxSpec,
    C11Report,
    CalibrationReport,
    SemiconcavityReport,
    c11_check,
    check_duality,
    semiconcavity_scan,
    semigroup_suite,
    theorem_A_check,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
