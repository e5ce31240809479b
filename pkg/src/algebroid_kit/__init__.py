"""Lie algebroids in coordinates.

Submodules: ``expr`` (symbolic coefficients), ``algebroid`` (anchor, bracket,
identity checks), ``calculus`` (forms, d_rho, morphisms), ``prolongation``,
``limits`` (direct systems), ``mechanics`` (Hamilton equations on E*),
``io`` (JSON) and ``cli``.
"""

from .algebroid import (
    AlgebroidSpec,
    Section,
    VectorField,
    anchor_apply,
    bracket,
    check_anchor_bracket_compat,
    check_jacobi,
    check_leibniz,
    identity_suite,
    make_algebroid,
    nijenhuis_algebroid,
    poisson_cotangent_algebroid,
    tangent_algebroid,
)
from .calculus import BundleMorphism, QForm, check_d_squared, check_morphism, d_rho, pullback
from .errors import *  # noqa: F401,F403
from .expr import Expr, parse, simplify, to_sexpr
from .limits import DirectSystemSpec, IndPoint, make_direct_system, verify_direct_system
from .mechanics import HamiltonianSystem, hamilton_vector_field, harmonic_oscillator_system, integrate_rk4
from .prolongation import prolong, prolonged_morphism
from .report import CheckResult, VerificationReport

__version__ = "0.1.0"
