"""Exterior calculus on algebroid-valued forms.

A q-form is stored by its components against the dual basis e^a, one
expression per strictly increasing index tuple.  The differential is
computed from the invariant formula with constant basis sections, so the
Lie-derivative term reduces to ``rho_a^i d_i`` of components and the bracket
term to the structure functions.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import comb

import numpy as np

from . import expr as ex
from .algebroid import (
    AlgebroidSpec,
    Section,
    anchor_apply,
    apply_field,
    basis_section,
    bracket,
    eval_rows,
    random_polynomial,
)
from .errors import DegreeError, ShapeError
from .expr import ONE, ZERO, Expr, Var
from .report import DEFAULT_SAMPLES, DEFAULT_TOL, VerificationReport

__all__ = [
    "QForm",
    "BundleMorphism",
    "function_form",
    "basis_one_form",
    "zero_form",
    "evaluate_form",
    "lie_derivative",
    "d_rho",
    "check_d_squared",
    "pullback",
    "compose",
    "identity_morphism",
    "check_morphism",
    "anchor_compatibility",
    "random_form",
]


def _perm_sign(seq) -> int:
    seq = list(seq)
    sign = 1
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
    return sign


@dataclass(frozen=True)
class QForm:
    """Alternating q-form with components ``omega[(a1 < ... < aq)]``."""

    degree: int
    rank: int
    components: dict = field(default_factory=dict)

    def component(self, idx) -> Expr:
        """Component on an arbitrary index tuple, extended by antisymmetry."""
        idx = tuple(idx)
        if len(idx) != self.degree:
            raise DegreeError(f"expected {self.degree} indices, got {len(idx)}")
        if len(set(idx)) < len(idx):
            return ZERO
        key = tuple(sorted(idx))
        c = self.components.get(key, ZERO)
        if c == ZERO:
            return ZERO
        return c if _perm_sign(idx) > 0 else ex.simplify(-c)

    def index_tuples(self):
        return itertools.combinations(range(self.rank), self.degree)

    def items(self):
        for key in self.index_tuples():
            yield key, self.components.get(key, ZERO)

    def __len__(self):
        return comb(self.rank, self.degree)


def _make_form(degree: int, rank: int, comps: dict) -> QForm:
    clean = {}
    for key, c in comps.items():
        c = ex.simplify(c)
        if c != ZERO:
            clean[tuple(key)] = c
    return QForm(degree, rank, clean)


def zero_form(A: AlgebroidSpec, degree: int) -> QForm:
    return QForm(degree, A.rank, {})


def function_form(A: AlgebroidSpec, f) -> QForm:
    return _make_form(0, A.rank, {(): ex.as_expr(f)})


def basis_one_form(A: AlgebroidSpec, g: int) -> QForm:
    """The dual-basis element e^g."""
    return QForm(1, A.rank, {(g,): ONE})


def evaluate_form(w: QForm, sections) -> Expr:
    """omega(s_1, ..., s_q) by multilinear expansion."""
    if len(sections) != w.degree:
        raise DegreeError(f"{w.degree}-form evaluated on {len(sections)} sections")
    if w.degree == 0:
        return w.components.get((), ZERO)
    acc = ZERO
    for idx in itertools.permutations(range(w.rank), w.degree):
        c = w.component(idx)
        if c == ZERO:
            continue
        term = c
        for s, a in zip(sections, idx):
            term = term * s.coeffs[a]
        acc = acc + term
    return ex.simplify(acc)


def _check_owner(A: AlgebroidSpec, w: QForm):
    if w.rank != A.rank:
        raise ShapeError(f"form of rank {w.rank} used with algebroid of rank {A.rank}")
    if w.degree < 0:
        raise DegreeError("negative degree")


def lie_derivative(A: AlgebroidSpec, s: Section, w: QForm) -> QForm:
    """(L_s w)(e_a..) = rho(s)(w_a..) - sum_i w(.., [s, e_ai], ..)."""
    _check_owner(A, w)
    v = anchor_apply(A, s)
    if w.degree == 0:
        return _make_form(0, A.rank, {(): apply_field(v, w.components.get((), ZERO))})
    brackets = [bracket(A, s, basis_section(A, a)) for a in range(A.rank)]
    comps = {}
    for key in w.index_tuples():
        acc = apply_field(v, w.components.get(key, ZERO))
        for pos, a in enumerate(key):
            for g, c in enumerate(brackets[a].coeffs):
                if c == ZERO:
                    continue
                idx = key[:pos] + (g,) + key[pos + 1 :]
                acc = acc - c * w.component(idx)
        comps[key] = acc
    return _make_form(w.degree, A.rank, comps)


def d_rho(A: AlgebroidSpec, w: QForm) -> QForm:
    """Exterior differential of an algebroid form.

    (dw)(e_a0..e_aq) = sum_i (-1)^i rho(e_ai)(w(..^ai..))
                     + sum_{i<j} (-1)^(i+j) w([e_ai, e_aj], ..^ai..^aj..)
    """
    _check_owner(A, w)
    q = w.degree
    if q > A.rank:
        raise DegreeError(f"degree {q} exceeds rank {A.rank}")
    if q == A.rank:
        return QForm(q + 1, A.rank, {})
    comps = {}
    for key in itertools.combinations(range(A.rank), q + 1):
        acc = ZERO
        for i, a in enumerate(key):
            rest = key[:i] + key[i + 1 :]
            c = w.components.get(rest, ZERO)
            if c == ZERO:
                continue
            for k in range(A.base_dim):
                r = A.anchor[k][a]
                if r == ZERO:
                    continue
                d = ex.diff(c, k)
                if d == ZERO:
                    continue
                acc = acc + (r * d if i % 2 == 0 else -(r * d))
        if q >= 1:
            for i, j in itertools.combinations(range(q + 1), 2):
                rest = tuple(x for t, x in enumerate(key) if t != i and t != j)
                sign = -1 if (i + j) % 2 else 1
                for g in range(A.rank):
                    C = A.C(key[i], key[j], g)
                    if C == ZERO:
                        continue
                    wc = w.component((g,) + rest)
                    if wc == ZERO:
                        continue
                    acc = acc + (C * wc if sign > 0 else -(C * wc))
        comps[key] = acc
    return _make_form(q + 1, A.rank, comps)


def _form_rows(w: QForm):
    return [c for _, c in w.items()]


def check_d_squared(
    A: AlgebroidSpec,
    w: QForm,
    pts=None,
    samples: int = DEFAULT_SAMPLES,
    tol: float = DEFAULT_TOL,
) -> VerificationReport:
    """Sampled max component of d(d w)."""
    _check_owner(A, w)
    pts = A.sample_points(samples) if pts is None else pts
    report = VerificationReport("d_squared")
    if w.degree + 2 > A.rank:
        report.add("d_squared", f"degree {w.degree}", np.zeros((1, len(pts))), pts, tol,
                   note="vanishes for degree reasons")
        return report
    dd = d_rho(A, d_rho(A, w))
    keys = list(dd.index_tuples())
    vals = eval_rows(_form_rows(dd), pts)
    if vals.size:
        c = int(np.argmax(np.max(np.abs(vals), axis=1)))
        site = "component e^" + ",".join(str(k + 1) for k in keys[c])
    else:
        site = "-"
    report.add("d_squared", site, vals, pts, tol)
    return report


# ---------------------------------------------------------------------------
# morphisms


@dataclass(frozen=True)
class BundleMorphism:
    """Vector bundle map psi: E -> E' over phi: M -> M'.

    Attributes:
      base_map: n' expressions in the source coordinates (phi).
      fiber: m' rows of m expressions in the source coordinates,
        psi(e_a) = fiber[b][a] e'_b.
    """

    base_map: tuple
    fiber: tuple

    def __post_init__(self):
        object.__setattr__(self, "base_map", tuple(ex.as_expr(e) for e in self.base_map))
        object.__setattr__(
            self, "fiber", tuple(tuple(ex.as_expr(e) for e in row) for row in self.fiber)
        )
        widths = {len(r) for r in self.fiber}
        if len(widths) > 1:
            raise ShapeError("fiber matrix rows have different lengths")

    @property
    def source_rank(self) -> int:
        return len(self.fiber[0]) if self.fiber else 0

    @property
    def target_rank(self) -> int:
        return len(self.fiber)

    @property
    def target_dim(self) -> int:
        return len(self.base_map)

    def apply_section(self, s: Section) -> Section:
        """Coefficients of psi o s (still functions of the source point)."""
        if len(s) != self.source_rank:
            raise ShapeError("section rank does not match morphism source")
        return Section(
            tuple(
                ex.simplify(ex.sum_exprs(row[a] * s.coeffs[a] for a in range(len(s))))
                for row in self.fiber
            )
        )


def identity_morphism(A: AlgebroidSpec) -> BundleMorphism:
    return BundleMorphism(
        tuple(Var(i) for i in range(A.base_dim)),
        tuple(tuple(ONE if a == b else ZERO for a in range(A.rank)) for b in range(A.rank)),
    )


def compose(psi1: BundleMorphism, psi2: BundleMorphism) -> BundleMorphism:
    """psi1 o psi2."""
    if psi1.source_rank != psi2.target_rank:
        raise ShapeError("ranks do not chain")
    phi = tuple(ex.simplify(ex.substitute(e, psi2.base_map)) for e in psi1.base_map)
    F1 = [[ex.substitute(e, psi2.base_map) for e in row] for row in psi1.fiber]
    fiber = tuple(
        tuple(
            ex.simplify(ex.sum_exprs(F1[c][b] * psi2.fiber[b][a] for b in range(psi2.target_rank)))
            for a in range(psi2.source_rank)
        )
        for c in range(psi1.target_rank)
    )
    return BundleMorphism(phi, fiber)


def _det(rows) -> Expr:
    k = len(rows)
    if k == 0:
        return ONE
    acc = ZERO
    for perm in itertools.permutations(range(k)):
        term = ONE
        for r, c in enumerate(perm):
            term = term * rows[r][c]
            if term == ZERO:
                break
        if term == ZERO:
            continue
        acc = acc + (term if _perm_sign(perm) > 0 else -term)
    return acc


def pullback(psi: BundleMorphism, w: QForm) -> QForm:
    """(psi* w)(s_1..s_q) = w_{phi(x)}(psi s_1, .., psi s_q)."""
    if w.rank != psi.target_rank:
        raise ShapeError(f"form rank {w.rank} vs morphism target rank {psi.target_rank}")
    m = psi.source_rank
    if w.degree == 0:
        c = w.components.get((), ZERO)
        return _make_form(0, m, {(): ex.substitute(c, psi.base_map)})
    comps = {}
    for key in itertools.combinations(range(m), w.degree):
        acc = ZERO
        for tkey, c in w.components.items():
            minor = [[psi.fiber[b][a] for a in key] for b in tkey]
            d = ex.simplify(_det(minor))
            if d == ZERO:
                continue
            acc = acc + ex.substitute(c, psi.base_map) * d
        comps[key] = acc
    return _make_form(w.degree, m, comps)


def check_morphism(
    psi: BundleMorphism,
    A_src: AlgebroidSpec,
    A_tgt: AlgebroidSpec,
    pts=None,
    samples: int = DEFAULT_SAMPLES,
    tol: float = DEFAULT_TOL,
) -> VerificationReport:
    """Sampled d o psi* - psi* o d on target coordinate functions and e'^g.

    Degree 0 and 1 generators suffice: pullback respects wedge products and
    d is a derivation.
    """
    if psi.source_rank != A_src.rank or psi.target_rank != A_tgt.rank:
        raise ShapeError("morphism ranks do not match the algebroids")
    if psi.target_dim != A_tgt.base_dim:
        raise ShapeError("base map does not land in the target base")
    for e in psi.base_map:
        if ex.max_index(e) >= A_src.base_dim:
            raise ShapeError("base map uses coordinates beyond the source base")
    pts = A_src.sample_points(samples) if pts is None else pts
    report = VerificationReport("morphism")
    gens = [(f"x'{i+1}", function_form(A_tgt, Var(i))) for i in range(A_tgt.base_dim)]
    gens += [(f"e'^{g+1}", basis_one_form(A_tgt, g)) for g in range(A_tgt.rank)]
    for label, w in gens:
        if w.degree >= A_tgt.rank and w.degree > 0:
            continue
        lhs = d_rho(A_src, pullback(psi, w))
        rhs = pullback(psi, d_rho(A_tgt, w))
        resid = [lhs.components.get(k, ZERO) - rhs.components.get(k, ZERO) for k in lhs.index_tuples()]
        report.add("morphism", label, eval_rows(resid, pts), pts, tol)
    return report


def anchor_compatibility(
    psi: BundleMorphism,
    A_src: AlgebroidSpec,
    A_tgt: AlgebroidSpec,
    pts=None,
    samples: int = DEFAULT_SAMPLES,
    tol: float = DEFAULT_TOL,
    check: str = "anchor_compat",
) -> VerificationReport:
    """Sampled rho'(phi(x)) Phi(x) - D phi(x) rho(x), one row per basis section."""
    if psi.source_rank != A_src.rank or psi.target_rank != A_tgt.rank:
        raise ShapeError("morphism ranks do not match the algebroids")
    pts = A_src.sample_points(samples) if pts is None else pts
    report = VerificationReport(check)
    rho_t = [[ex.substitute(e, psi.base_map) for e in row] for row in A_tgt.anchor]
    for a in range(A_src.rank):
        resid = []
        for k in range(A_tgt.base_dim):
            lhs = ex.sum_exprs(rho_t[k][b] * psi.fiber[b][a] for b in range(A_tgt.rank))
            rhs = ex.sum_exprs(
                ex.diff(psi.base_map[k], i) * A_src.anchor[i][a] for i in range(A_src.base_dim)
            )
            resid.append(lhs - rhs)
        report.add(check, f"e{a+1}", eval_rows(resid, pts), pts, tol)
    return report


def random_form(A: AlgebroidSpec, degree: int, rng) -> QForm:
    comps = {key: random_polynomial(rng, A.base_dim) for key in itertools.combinations(range(A.rank), degree)}
    return _make_form(degree, A.rank, comps)
