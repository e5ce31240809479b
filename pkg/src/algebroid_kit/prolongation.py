"""Prolongation of an algebroid along a trivial fibration P = M x F.

Total-space coordinates are ``(x^1..x^n, u^1..u^q)`` with the projection
dropping the ``u``.  The prolonged bundle has basis ``X_a, V_A``:

    X_a(p) = (p, e_a, rho_a^i d/dx^i),   V_A(p) = (p, 0, d/du^A)

so its anchor is the block matrix ``[[rho, 0], [0, Id]]`` and its structure
functions are the lifted ``C_ab^g`` on the X block, zero elsewhere.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import expr as ex
from .algebroid import (
    AlgebroidSpec,
    Section,
    VectorField,
    anchor_apply,
    basis_section,
    bracket,
    eval_rows,
    field_bracket,
    make_algebroid,
)
from .calculus import BundleMorphism, anchor_compatibility
from .errors import ConstraintViolation, DimensionError, NotAdmissible, NotFibered, NotProjectable, ShapeError
from .expr import ONE, ZERO, Var
from .report import DEFAULT_SAMPLES, DEFAULT_TOL, VerificationReport

__all__ = [
    "Fibration",
    "ProlongedElement",
    "ProjectableSection",
    "prolong",
    "make_element",
    "constraint_residual",
    "decompose",
    "x_element",
    "v_element",
    "x_section",
    "v_section",
    "check_projectable",
    "projectable_bracket",
    "as_prolonged_section",
    "prolonged_morphism",
    "fibered_identity",
]


@dataclass(frozen=True)
class Fibration:
    """nu: M x R^q -> M, the coordinate projection onto the first n slots."""

    base_dim: int
    fiber_dim: int
    fiber_box: tuple = ()

    def __post_init__(self):
        if self.fiber_dim < 1:
            raise DimensionError("fiber dimension must be >= 1")
        if self.base_dim < 1:
            raise DimensionError("base dimension must be >= 1")
        box = self.fiber_box or ((-1.0, 1.0),) * self.fiber_dim
        if len(box) != self.fiber_dim:
            raise DimensionError("fiber_box length must equal fiber_dim")
        object.__setattr__(self, "fiber_box", tuple((float(a), float(b)) for a, b in box))

    @property
    def total_dim(self) -> int:
        return self.base_dim + self.fiber_dim

    def project(self, p):
        return np.asarray(p, dtype=float)[: self.base_dim]


def _fib_for(A: AlgebroidSpec, fib) -> Fibration:
    if isinstance(fib, int):
        fib = Fibration(A.base_dim, fib)
    if fib.base_dim != A.base_dim:
        raise DimensionError(f"fibration base dim {fib.base_dim} vs algebroid base dim {A.base_dim}")
    return fib


def prolong(A: AlgebroidSpec, fib) -> AlgebroidSpec:
    """The prolonged algebroid T^E P over the total space."""
    fib = _fib_for(A, fib)
    n, m, q = A.base_dim, A.rank, fib.fiber_dim
    anchor = []
    for i in range(n):
        anchor.append(list(A.anchor[i]) + [ZERO] * q)
    for k in range(q):
        anchor.append([ZERO] * m + [ONE if j == k else ZERO for j in range(q)])
    structure = {(a, b, g): c for a, b, g, c in A.structure_entries()}
    names = tuple(A.names) + tuple(f"u{k + 1}" for k in range(q))
    return make_algebroid(
        anchor,
        structure,
        tuple(A.sample_box) + fib.fiber_box,
        names,
        label=f"T^E P[{A.label or 'algebroid'}, q={q}]",
    )


# ---------------------------------------------------------------------------
# pointwise elements


@dataclass(frozen=True)
class ProlongedElement:
    """(b, v) in E_{nu(p)} x T_p P."""

    p: tuple
    b: tuple
    v: tuple


def _rho_at(A: AlgebroidSpec, x) -> np.ndarray:
    return np.array([[ex.evaluate(A.anchor[i][a], x) for a in range(A.rank)] for i in range(A.base_dim)])


def make_element(A: AlgebroidSpec, fib, p, b, v_fiber) -> ProlongedElement:
    """Element with ``v = (rho(b), v_fiber)``; the constraint is solved, not checked."""
    fib = _fib_for(A, fib)
    p = np.asarray(p, dtype=float)
    b = np.asarray(b, dtype=float)
    v_fiber = np.asarray(v_fiber, dtype=float)
    if p.shape != (fib.total_dim,) or b.shape != (A.rank,) or v_fiber.shape != (fib.fiber_dim,):
        raise DimensionError("element data has the wrong shape")
    v_base = _rho_at(A, fib.project(p)) @ b
    v = np.concatenate([v_base, v_fiber])
    return ProlongedElement(tuple(map(float, p)), tuple(map(float, b)), tuple(map(float, v)))


def constraint_residual(A: AlgebroidSpec, fib, z: ProlongedElement) -> float:
    """max_i |rho_a^i(nu(p)) b^a - v^i|."""
    fib = _fib_for(A, fib)
    rho_b = _rho_at(A, fib.project(z.p)) @ np.asarray(z.b)
    return float(np.max(np.abs(rho_b - np.asarray(z.v[: fib.base_dim])), initial=0.0))


def decompose(A: AlgebroidSpec, fib, z: ProlongedElement, tol: float = DEFAULT_TOL):
    """Coefficients of ``z = z^a X_a(p) + v^A V_A(p)``."""
    fib = _fib_for(A, fib)
    r = constraint_residual(A, fib, z)
    if r >= tol:
        raise ConstraintViolation(f"rho(b) - T nu(v) has residual {r:.3e}")
    return np.asarray(z.b, dtype=float), np.asarray(z.v[fib.base_dim :], dtype=float)


def x_element(A: AlgebroidSpec, fib, p, a: int) -> ProlongedElement:
    fib = _fib_for(A, fib)
    b = np.zeros(A.rank)
    b[a] = 1.0
    return make_element(A, fib, p, b, np.zeros(fib.fiber_dim))


def v_element(A: AlgebroidSpec, fib, p, k: int) -> ProlongedElement:
    fib = _fib_for(A, fib)
    vf = np.zeros(fib.fiber_dim)
    vf[k] = 1.0
    return make_element(A, fib, p, np.zeros(A.rank), vf)


# ---------------------------------------------------------------------------
# projectable sections


@dataclass(frozen=True)
class ProjectableSection:
    """p -> (p, sigma(nu(p)), U(p)) with U nu-related to rho(sigma).

    ``sigma`` is a section of E (functions of x); ``U`` a vector field on the
    total space (functions of x and u, n + q components).
    """

    sigma: Section
    U: VectorField


def x_section(A: AlgebroidSpec, fib, a: int) -> ProjectableSection:
    fib = _fib_for(A, fib)
    s = basis_section(A, a)
    comps = list(anchor_apply(A, s).comps) + [ZERO] * fib.fiber_dim
    return ProjectableSection(s, VectorField(tuple(comps)))


def v_section(A: AlgebroidSpec, fib, k: int) -> ProjectableSection:
    fib = _fib_for(A, fib)
    comps = [ZERO] * fib.base_dim + [ONE if j == k else ZERO for j in range(fib.fiber_dim)]
    return ProjectableSection(Section((ZERO,) * A.rank), VectorField(tuple(comps)))


def check_projectable(
    A: AlgebroidSpec, fib, Z: ProjectableSection, pts=None, tol: float = DEFAULT_TOL
) -> VerificationReport:
    fib = _fib_for(A, fib)
    if len(Z.U) != fib.total_dim or len(Z.sigma) != A.rank:
        raise DimensionError("projectable section has the wrong shape")
    for c in Z.sigma.coeffs:
        if ex.max_index(c) >= fib.base_dim:
            raise NotProjectable("sigma must depend on base coordinates only")
    if pts is None:
        pts = prolong(A, fib).sample_points()
    rho_s = anchor_apply(A, Z.sigma).comps
    resid = [Z.U.comps[i] - rho_s[i] for i in range(fib.base_dim)]
    report = VerificationReport("projectable")
    report.add("projectable", "U - rho(sigma)", eval_rows(resid, pts), pts, tol)
    return report


def projectable_bracket(A: AlgebroidSpec, fib, Z1: ProjectableSection, Z2: ProjectableSection,
                        tol: float = DEFAULT_TOL) -> ProjectableSection:
    """[Z1, Z2](p) = (p, [sigma1, sigma2](nu(p)), [U1, U2](p))."""
    fib = _fib_for(A, fib)
    pts = prolong(A, fib).sample_points()
    for Z in (Z1, Z2):
        r = check_projectable(A, fib, Z, pts, tol)
        if not r.passed:
            raise NotProjectable(f"U does not project onto rho(sigma) (residual {r.max_residual:.3e})")
    return ProjectableSection(bracket(A, Z1.sigma, Z2.sigma), field_bracket(Z1.U, Z2.U))


def as_prolonged_section(A: AlgebroidSpec, fib, Z: ProjectableSection) -> Section:
    """Coefficients against (X_a, V_A): ``(sigma^a, U^{n+A})``."""
    fib = _fib_for(A, fib)
    return Section(tuple(Z.sigma.coeffs) + tuple(Z.U.comps[fib.base_dim :]))


# ---------------------------------------------------------------------------
# prolonged morphisms


def fibered_identity(fib: Fibration):
    return tuple(Var(i) for i in range(fib.total_dim))


def prolonged_morphism(
    Phi: BundleMorphism,
    Psi,
    A_src: AlgebroidSpec,
    A_tgt: AlgebroidSpec,
    fib_src,
    fib_tgt,
    require_admissible: bool = True,
    tol: float = DEFAULT_TOL,
    samples: int = DEFAULT_SAMPLES,
):
    """T^Phi Psi (p, b, v) = (Psi(p), Phi(b), T Psi(v)) in the X/V bases.

    ``Psi`` lists the n' + q' components of the total-space map in the source
    total coordinates; its first n' components must equal ``phi``.

    Admissibility of ``Phi`` is checked as anchor compatibility
    rho' o Phi = T phi o rho (a proxy).  With ``require_admissible=False`` a
    non-admissible Phi still yields the coordinate block map.

    Returns:
      ``(morphism, admissibility_report)``.
    """
    fib_src = _fib_for(A_src, fib_src)
    fib_tgt = _fib_for(A_tgt, fib_tgt)
    Psi = tuple(ex.as_expr(e) for e in Psi)
    n, m, q = A_src.base_dim, A_src.rank, fib_src.fiber_dim
    n2, m2, q2 = A_tgt.base_dim, A_tgt.rank, fib_tgt.fiber_dim
    if len(Psi) != n2 + q2:
        raise ShapeError(f"Psi has {len(Psi)} components, expected {n2 + q2}")
    if Phi.source_rank != m or Phi.target_rank != m2 or Phi.target_dim != n2:
        raise ShapeError("Phi does not match the algebroids")
    if any(ex.max_index(e) >= n + q for e in Psi):
        raise ShapeError("Psi uses coordinates beyond the source total space")

    P_src = prolong(A_src, fib_src)
    pts = P_src.sample_points(samples)
    fib_resid = [Psi[k] - Phi.base_map[k] for k in range(n2)]
    fib_resid += [ex.diff(Psi[k], n + j) for k in range(n2) for j in range(q)]
    if fib_resid and np.max(np.abs(eval_rows(fib_resid, pts)), initial=0.0) >= tol:
        raise NotFibered("Psi does not cover phi")

    adm = anchor_compatibility(Phi, A_src, A_tgt, samples=samples, tol=tol, check="admissibility")
    adm.notes.append("admissibility: proxy (anchor compatibility)")
    if require_admissible and not adm.passed:
        raise NotAdmissible(f"rho' o Phi != T phi o rho (residual {adm.max_residual:.3e})")

    rows = []
    for b in range(m2):
        rows.append(list(Phi.fiber[b]) + [ZERO] * q)
    for k in range(q2):
        F = Psi[n2 + k]
        lower_left = [
            ex.simplify(ex.sum_exprs(ex.diff(F, i) * A_src.anchor[i][a] for i in range(n))) for a in range(m)
        ]
        lower_right = [ex.simplify(ex.diff(F, n + j)) for j in range(q)]
        rows.append(lower_left + lower_right)
    return BundleMorphism(Psi, tuple(tuple(r) for r in rows)), adm
