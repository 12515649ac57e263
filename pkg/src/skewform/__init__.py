"""Exterior-form integrability diagnostics.

Symbolic forms and their closure, characteristic strips for first-order
PDEs, and commutator diagnostics on sampled grid data.
"""

__version__ = "0.1.0"

from .errors import *  # noqa: E402,F401,F403
from .expr import (  # noqa: E402
    Expr, Const, Var, as_expr, symbols, simplify, differentiate, evaluate,
    compile_expression, substitute, is_zero,
)
from .parser import parse_expression  # noqa: E402
from .forms import (  # noqa: E402
    CoordinateChart, DifferentialForm, CommutatorMatrix, ClosedSymbolic, NotClosed, Inconclusive,
    wedge, exterior_derivative, commutator_components, is_closed, hodge_star,
)
from .potential import homotopy_potential  # noqa: E402
from .charpit import (  # noqa: E402
    PdeProblem, StripData, InitialStrip, CharacteristicTrajectory, DegeneracyReport, Reconstruction,
    build_closure_system, characteristic_field, complete_initial_strip, integrate_characteristics,
    conservation_check, reconstruct_solution, strip_jacobian, detect_degeneracy,
)
from .grid import (  # noqa: E402
    GridField, discrete_commutator, nonidentity_norm, evolutionary_residual, degeneracy_locus,
    exactness_verdict, load_grid, loads_grid, dumps_grid,
)
