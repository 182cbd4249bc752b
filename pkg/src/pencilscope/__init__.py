"""Spectral stability analysis of selfadjoint matrix pencils and linearized
Hamiltonian systems: eigenvalue branches, Krein signatures, Evans-Krein
functions and index counts.
"""

from .branches import (
    BranchFamily,
    CrossingEvent,
    analyze_crossing,
    default_window,
    find_crossings,
    geometric_multiplicity,
    order_of_vanishing,
    sample_branches,
)
from .errors import PencilscopeError
from .evans import (
    Contour,
    evans_krein,
    evans_krein_generalized,
    high_order_derivative_gm1,
    semisimple_slopes,
    signature_from_evans,
    vanishing_partials,
    winding_number,
)
from .index import (
    canonical_lower_bound,
    conservation_check,
    full_symmetry_count,
    gker_dimension,
    unstable_count,
    z_counts,
)
from .krein import (
    KreinReport,
    chains_from_branch_derivatives,
    gram_indices,
    graphical_indices,
    root_chains,
    value_signature,
)
from .linalg import complex_det, general_eigenvalues, hermitian_eigen, inertia
from .pencil import (
    CanonicalHamiltonian,
    DelayPencil,
    HamiltonianSystem,
    PolynomialPencil,
    ResolventShiftPencil,
    characteristic_values,
    companion_matrix,
    dde_pencil,
    evaluate,
    hankel_form,
    is_selfadjoint,
    pencil_derivative,
    pencil_from_hamiltonian,
)
from .problems import load_fixture, load_problem, serialize
from .tolerances import Tolerances

__version__ = "0.1.0"
