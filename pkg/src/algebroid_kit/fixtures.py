"""Named example objects, shared by the tests and the ``name:arg`` CLI specs."""

from __future__ import annotations

from .algebroid import (
    AlgebroidSpec,
    make_algebroid,
    nijenhuis_algebroid,
    poisson_cotangent_algebroid,
    tangent_algebroid,
)
from .calculus import BundleMorphism
from .errors import ParseError
from .expr import ONE, ZERO, Var
from .limits import make_direct_system, oscillator_anchor, oscillator_tower, tangent_tower
from .mechanics import harmonic_oscillator_system

__all__ = [
    "nijenhuis_oscillator",
    "symplectic_poisson",
    "corrupted_almost_algebroid",
    "scaling_morphism",
    "nijenhuis_morphism",
    "perturbed_tangent_tower",
    "resolve_algebroid",
    "resolve_tower",
    "resolve_hamiltonian",
    "BUILTINS",
]


def nijenhuis_oscillator(n: int = 1) -> AlgebroidSpec:
    """(T R^{2n}, N_n) with N_n = diag((x_k^2 + y_k^2)/2) blockwise."""
    names = [s for k in range(n) for s in (f"x{k+1}", f"y{k+1}")]
    return nijenhuis_algebroid(oscillator_anchor(n), names=names, label=f"N_{n}")


def symplectic_poisson(k: int = 1) -> AlgebroidSpec:
    """T* R^{2k} with the constant canonical Poisson tensor."""
    n = 2 * k
    Lam = [[ZERO] * n for _ in range(n)]
    for j in range(k):
        Lam[2 * j][2 * j + 1] = ONE
        Lam[2 * j + 1][2 * j] = -ONE
    return poisson_cotangent_algebroid(Lam, label=f"poisson_symplectic_{k}")


def corrupted_almost_algebroid() -> AlgebroidSpec:
    """Identity anchor on R^2 with [e1, e2] = x1 e1.

    The bracket is still an almost-Lie bracket (Leibniz holds), but the
    anchor no longer intertwines it with the vector-field bracket, so Jacobi
    and d^2 = 0 fail off the line x1 = 0.
    """
    return make_algebroid([[ONE, ZERO], [ZERO, ONE]], {(0, 1, 0): Var(0)}, label="almost_bad")


def scaling_morphism(A: AlgebroidSpec, c: float = 2.0) -> BundleMorphism:
    """Identity on the base, ``c * Id`` on fibers."""
    m = A.rank
    return BundleMorphism(
        tuple(Var(i) for i in range(A.base_dim)),
        tuple(tuple(float(c) if a == b else 0.0 for a in range(m)) for b in range(m)),
    )


def nijenhuis_morphism(A: AlgebroidSpec) -> BundleMorphism:
    """The anchor N: (TM, N) -> TM read as a bundle map over the identity."""
    return BundleMorphism(tuple(Var(i) for i in range(A.base_dim)), A.anchor)


def perturbed_tangent_tower(depth: int = 4, pair: int = 2, delta: float = 0.1):
    """Tangent tower with lam_pair^{pair+1}[0][0] = 1 + delta."""
    base = tangent_tower(depth)
    fb = [[list(row) for row in lam] for lam in base.fiber_bondings]
    fb[pair - 1][0][0] = ONE + delta
    return make_direct_system(base.levels, base.base_bondings, fb, depth=depth)


def _arg(spec: str, default: int) -> tuple[str, int]:
    name, _, arg = spec.partition(":")
    if not arg:
        return name, default
    try:
        val = int(arg)
    except ValueError:
        raise ParseError(f"bad argument in {spec!r}: expected an integer") from None
    if val < 1:
        raise ParseError(f"bad argument in {spec!r}: must be >= 1")
    return name, val


_ALGEBROIDS = {
    "tangent": (3, tangent_algebroid),
    "nijenhuis": (1, nijenhuis_oscillator),
    "poisson": (1, symplectic_poisson),
    "almost-bad": (1, lambda _: corrupted_almost_algebroid()),
}
_TOWERS = {
    "tangent-tower": (4, tangent_tower),
    "oscillator-tower": (3, oscillator_tower),
    "perturbed-tower": (4, perturbed_tangent_tower),
}
_HAMILTONIANS = {"oscillator": (1, harmonic_oscillator_system)}

BUILTINS = {
    "algebroid": sorted(_ALGEBROIDS),
    "tower": sorted(_TOWERS),
    "hamiltonian": sorted(_HAMILTONIANS),
}


def _resolve(spec: str, table, kind):
    name, val = _arg(spec, 0)
    if name not in table:
        raise ParseError(f"unknown {kind} {name!r}; known: {', '.join(sorted(table))}")
    default, fn = table[name]
    return fn(val or default)


def resolve_algebroid(spec: str) -> AlgebroidSpec:
    return _resolve(spec, _ALGEBROIDS, "algebroid")


def resolve_tower(spec: str):
    return _resolve(spec, _TOWERS, "tower")


def resolve_hamiltonian(spec: str):
    return _resolve(spec, _HAMILTONIANS, "hamiltonian system")
