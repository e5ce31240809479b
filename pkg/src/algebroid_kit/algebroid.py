"""Lie algebroids in one global chart.

An algebroid over an open box of R^n with rank m is fixed by its anchor
coefficients ``rho[i][a]`` (the i-th component of rho(e_a)) and structure
functions ``C(a, b, g)`` (the g-th coefficient of [e_a, e_b]).  Sections are
coefficient tuples against the basis e_a; identities are verified by
evaluating residual expressions on a deterministic Halton sample.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import expr as ex
from .errors import DomainError, RankMismatch, ShapeError
from .expr import ONE, ZERO, Expr, Var
from .report import DEFAULT_SAMPLES, DEFAULT_TOL, VerificationReport, sample_points

__all__ = [
    "AlgebroidSpec",
    "Section",
    "VectorField",
    "make_algebroid",
    "basis_section",
    "zero_section",
    "anchor_apply",
    "apply_field",
    "field_bracket",
    "bracket",
    "scale_section",
    "jacobiator",
    "perturbed_bracket",
    "check_leibniz",
    "check_jacobi",
    "check_anchor_bracket_compat",
    "check_nijenhuis",
    "identity_suite",
    "tangent_algebroid",
    "nijenhuis_algebroid",
    "nijenhuis_structure",
    "poisson_cotangent_algebroid",
    "random_polynomial",
    "random_section",
    "eval_rows",
]

DEFAULT_BOX = (-1.0, 1.0)


@dataclass(frozen=True)
class Section:
    """s = coeffs[a] e_a."""

    coeffs: tuple

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(ex.as_expr(c) for c in self.coeffs))

    def __len__(self):
        return len(self.coeffs)

    def __add__(self, other):
        _same_len(self, other)
        return Section(tuple(ex.simplify(a + b) for a, b in zip(self.coeffs, other.coeffs)))

    def __sub__(self, other):
        _same_len(self, other)
        return Section(tuple(ex.simplify(a - b) for a, b in zip(self.coeffs, other.coeffs)))

    def __neg__(self):
        return Section(tuple(ex.simplify(-a) for a in self.coeffs))


@dataclass(frozen=True)
class VectorField:
    """v = comps[i] d/dx^i."""

    comps: tuple

    def __post_init__(self):
        object.__setattr__(self, "comps", tuple(ex.as_expr(c) for c in self.comps))

    def __len__(self):
        return len(self.comps)


def _same_len(a, b):
    if len(a) != len(b):
        raise RankMismatch(f"length {len(a)} vs {len(b)}")


@dataclass(frozen=True)
class AlgebroidSpec:
    """A (possibly almost) Lie algebroid in one chart.

    Build instances with :func:`make_algebroid` or the named constructors;
    they normalise the structure table so that only ``a < b`` is stored.

    Attributes:
      base_dim: n, number of base coordinates.
      rank: m, fiber dimension.
      anchor: n rows of m expressions, ``anchor[i][a] = rho_a^i``.
      structure: ``{(a, b): (C_ab^0, ..., C_ab^{m-1})}`` for ``a < b``.
      sample_box: one ``(lo, hi)`` per base coordinate.
      names: coordinate names used for printing.
      flags: reports attached by constructors (e.g. the Nijenhuis check).
    """

    base_dim: int
    rank: int
    anchor: tuple
    structure: dict
    sample_box: tuple
    names: tuple = ()
    label: str = ""
    flags: dict = field(default_factory=dict, compare=False)

    def rho(self, a: int, i: int) -> Expr:
        return self.anchor[i][a]

    def C(self, a: int, b: int, g: int) -> Expr:
        if a == b:
            return ZERO
        if a < b:
            row = self.structure.get((a, b))
            return row[g] if row is not None else ZERO
        row = self.structure.get((b, a))
        return ex.simplify(-row[g]) if row is not None else ZERO

    def sample_points(self, n: int = DEFAULT_SAMPLES) -> np.ndarray:
        return sample_points(self.sample_box, n)

    def coefficient_exprs(self):
        for row in self.anchor:
            yield from row
        for row in self.structure.values():
            yield from row

    def with_structure(self, structure: dict, label: str | None = None) -> "AlgebroidSpec":
        """Copy with a replaced structure table given as ``{(a, b, g): expr}``."""
        return make_algebroid(
            self.anchor, structure, self.sample_box, self.names, label or self.label, validate=False
        )

    def with_anchor(self, anchor, label: str | None = None) -> "AlgebroidSpec":
        return AlgebroidSpec(
            self.base_dim,
            self.rank,
            tuple(tuple(ex.as_expr(v) for v in row) for row in anchor),
            self.structure,
            self.sample_box,
            self.names,
            label or self.label,
        )

    def structure_entries(self):
        """Nonzero entries as ``(a, b, g, expr)`` with ``a < b``."""
        out = []
        for (a, b), row in sorted(self.structure.items()):
            for g, c in enumerate(row):
                if c != ZERO:
                    out.append((a, b, g, c))
        return out


def make_algebroid(
    anchor: Sequence[Sequence],
    structure=None,
    sample_box=None,
    names=None,
    label: str = "",
    validate: bool = True,
) -> AlgebroidSpec:
    """Build an :class:`AlgebroidSpec`.

    Args:
      anchor: n rows of m entries (Expr or numbers), ``anchor[i][a] = rho_a^i``.
      structure: either ``{(a, b, g): expr}`` (omitted entries are zero, an
        entry with ``a > b`` is read as ``-C_ba^g``) or a full ``m x m x m``
        nested list ``C[a][b][g]``.
      sample_box: per-coordinate ``(lo, hi)``; defaults to ``[-1, 1]``.
      validate: check that every coefficient is defined on the sample set.
    """
    rows = [tuple(ex.as_expr(v) for v in row) for row in anchor]
    n = len(rows)
    if n == 0:
        raise ShapeError("base dimension must be positive")
    m = len(rows[0])
    if m == 0:
        raise ShapeError("rank must be positive")
    if any(len(r) != m for r in rows):
        raise ShapeError("anchor rows have different lengths")

    table: dict = {}
    if structure is None:
        entries = {}
    elif isinstance(structure, dict):
        entries = structure
    else:
        if len(structure) != m:
            raise ShapeError("structure array must be m x m x m")
        entries = {}
        for a in range(m):
            for b in range(a + 1, m):
                for g in range(m):
                    entries[(a, b, g)] = structure[a][b][g]
    for (a, b, g), value in entries.items():
        if not (0 <= a < m and 0 <= b < m and 0 <= g < m):
            raise ShapeError(f"structure index {(a, b, g)} out of range for rank {m}")
        value = ex.as_expr(value)
        if a == b:
            if not ex.is_zero(value):
                raise ShapeError(f"C[{a}][{a}] must vanish")
            continue
        if a > b:
            a, b, value = b, a, -value
        row = table.setdefault((a, b), [ZERO] * m)
        row[g] = ex.simplify(row[g] + value)
    structure_t = {k: tuple(v) for k, v in sorted(table.items()) if any(c != ZERO for c in v)}

    if sample_box is None:
        sample_box = [DEFAULT_BOX] * n
    box = tuple((float(lo), float(hi)) for lo, hi in sample_box)
    if len(box) != n:
        raise ShapeError(f"sample_box has {len(box)} intervals for base_dim {n}")
    if any(lo > hi for lo, hi in box):
        raise ShapeError("sample_box intervals must satisfy lo <= hi")
    names = tuple(names) if names else tuple(ex.default_names(n))
    spec = AlgebroidSpec(n, m, tuple(rows), structure_t, box, names, label)
    if validate:
        pts = spec.sample_points()
        for e in spec.coefficient_exprs():
            if ex.max_index(e) >= n:
                raise ShapeError(f"coefficient {e} references a coordinate beyond base_dim {n}")
            ex.evaluate_many(e, pts)  # raises DomainError off-domain
            for kind, sub in ex.domain_constraints(e):
                vals = ex.evaluate_many(sub, pts)
                if (kind == "nonzero" and np.any(vals == 0)) or (kind == "positive" and np.any(vals <= 0)):
                    raise DomainError(f"sample_box meets the singular set of {e}")
    return spec


# ---------------------------------------------------------------------------
# sections and vector fields


def basis_section(A: AlgebroidSpec, a: int) -> Section:
    return Section(tuple(ONE if g == a else ZERO for g in range(A.rank)))


def zero_section(A: AlgebroidSpec) -> Section:
    return Section((ZERO,) * A.rank)


def scale_section(f, s: Section) -> Section:
    f = ex.as_expr(f)
    return Section(tuple(ex.simplify(f * c) for c in s.coeffs))


def _check_rank(A: AlgebroidSpec, *sections):
    for s in sections:
        if len(s) != A.rank:
            raise RankMismatch(f"section has {len(s)} coefficients, algebroid rank is {A.rank}")


def anchor_apply(A: AlgebroidSpec, s: Section) -> VectorField:
    """rho(s)^i = rho_a^i s^a."""
    _check_rank(A, s)
    comps = []
    for i in range(A.base_dim):
        acc = ZERO
        for a, c in enumerate(s.coeffs):
            acc = acc + A.anchor[i][a] * c
        comps.append(ex.simplify(acc))
    return VectorField(tuple(comps))


def apply_field(v: VectorField, f: Expr) -> Expr:
    """Directional derivative v(f) = v^i df/dx^i."""
    acc = ZERO
    for i, vi in enumerate(v.comps):
        if vi == ZERO:
            continue
        acc = acc + vi * ex.diff(f, i)
    return ex.simplify(acc)


def field_bracket(v: VectorField, w: VectorField) -> VectorField:
    """Commutator of vector fields, [v, w]^i = v(w^i) - w(v^i)."""
    _same_len(v, w)
    return VectorField(
        tuple(ex.simplify(apply_field(v, wi) - apply_field(w, vi)) for vi, wi in zip(v.comps, w.comps))
    )


def bracket(A: AlgebroidSpec, s1: Section, s2: Section) -> Section:
    """[s1, s2]^g = s1^a s2^b C_ab^g + rho(s1)(s2^g) - rho(s2)(s1^g)."""
    _check_rank(A, s1, s2)
    v1 = anchor_apply(A, s1)
    v2 = anchor_apply(A, s2)
    out = []
    for g in range(A.rank):
        acc = apply_field(v1, s2.coeffs[g]) - apply_field(v2, s1.coeffs[g])
        for (a, b), row in A.structure.items():
            c = row[g]
            if c == ZERO:
                continue
            # antisymmetric pair contributes (s1^a s2^b - s1^b s2^a) C_ab^g
            pair = s1.coeffs[a] * s2.coeffs[b] - s1.coeffs[b] * s2.coeffs[a]
            acc = acc + pair * c
        out.append(ex.simplify(acc))
    return Section(tuple(out))


def jacobiator(A: AlgebroidSpec, s1: Section, s2: Section, s3: Section, bracket_fn=None) -> Section:
    """Cyclic sum [s1,[s2,s3]] + [s2,[s3,s1]] + [s3,[s1,s2]]."""
    br = bracket_fn or (lambda u, v: bracket(A, u, v))
    _check_rank(A, s1, s2, s3)
    j = br(s1, br(s2, s3)) + br(s2, br(s3, s1)) + br(s3, br(s1, s2))
    return Section(tuple(ex.simplify(c) for c in j.coeffs))


def perturbed_bracket(A: AlgebroidSpec, table: str, index: tuple, delta: float = 1.0):
    """Bracket callable built from a copy of ``A`` with one table entry bumped.

    ``table`` is ``"structure"`` (index ``(a, b, g)``) or ``"anchor"`` (index
    ``(i, a)``).  Used as a negative control for :func:`check_leibniz`: a
    structure bump is tensorial and keeps the Leibniz rule, an anchor bump
    makes the bracket disagree with the declared anchor.
    """
    if table == "structure":
        a, b, g = index
        entries = {(p, q, r): c for p, q, r, c in A.structure_entries()}
        entries[(a, b, g)] = ex.simplify(entries.get((a, b, g), ZERO) + delta)
        B = A.with_structure(entries)
    elif table == "anchor":
        i, a = index
        rows = [list(r) for r in A.anchor]
        rows[i][a] = ex.simplify(rows[i][a] + delta)
        B = A.with_anchor(rows)
    else:
        raise ValueError(f"unknown table {table!r}")
    return lambda u, v: bracket(B, u, v)


# ---------------------------------------------------------------------------
# sampled verification


def eval_rows(exprs, pts) -> np.ndarray:
    """Evaluate a list of expressions on the sample set, shape ``(len, k)``."""
    exprs = list(exprs)
    if not exprs:
        return np.zeros((0, len(pts)))
    return np.vstack([ex.evaluate_many(e, pts) for e in exprs])


def _pts(A, pts, samples):
    return A.sample_points(samples) if pts is None else np.asarray(pts, dtype=float)


def _label_section(s: Section, names) -> str:
    return "(" + ", ".join(ex.to_sexpr(c, names) for c in s.coeffs) + ")"


def check_leibniz(
    A: AlgebroidSpec,
    s1: Section,
    f: Expr,
    s2: Section,
    bracket_fn: Callable | None = None,
    pts=None,
    samples: int = DEFAULT_SAMPLES,
    tol: float = DEFAULT_TOL,
    report: VerificationReport | None = None,
) -> VerificationReport:
    """Residual of [s1, f s2] - (f [s1, s2] + rho(s1)(f) s2).

    ``bracket_fn`` lets an alternative bracket implementation be tested
    against the anchor declared in ``A``.
    """
    _check_rank(A, s1, s2)
    br = bracket_fn or (lambda u, v: bracket(A, u, v))
    f = ex.as_expr(f)
    pts = _pts(A, pts, samples)
    lhs = br(s1, scale_section(f, s2))
    base = br(s1, s2)
    df = apply_field(anchor_apply(A, s1), f)
    resid = [ex.simplify(lhs.coeffs[g] - (f * base.coeffs[g] + df * s2.coeffs[g])) for g in range(A.rank)]
    report = report or VerificationReport("leibniz")
    site = f"s1={_label_section(s1, A.names)} f={ex.to_sexpr(f, A.names)} s2={_label_section(s2, A.names)}"
    report.add("leibniz", site, eval_rows(resid, pts), pts, tol)
    return report


def _default_triples(A: AlgebroidSpec, seed: int, n_random: int):
    m, n = A.rank, A.base_dim
    basis = [basis_section(A, a) for a in range(m)]
    triples = []
    for a, b, c in itertools.combinations(range(m), 3):
        triples.append((f"(e{a+1},e{b+1},e{c+1})", basis[a], basis[b], basis[c]))
    for a, b in itertools.combinations(range(m), 2):
        for c in range(m):
            for i in range(n):
                s3 = scale_section(Var(i), basis[c])
                triples.append((f"(e{a+1},e{b+1},{A.names[i]}*e{c+1})", basis[a], basis[b], s3))
    if m == 1:
        for i in range(n):
            triples.append((f"(e1,{A.names[i]}*e1,e1)", basis[0], scale_section(Var(i), basis[0]), basis[0]))
    rng = np.random.default_rng(seed)
    for k in range(n_random):
        s = [random_section(A, rng) for _ in range(3)]
        triples.append((f"random#{k}", *s))
    return triples


def check_jacobi(
    A: AlgebroidSpec,
    triples=None,
    pts=None,
    samples: int = DEFAULT_SAMPLES,
    tol: float = DEFAULT_TOL,
    seed: int = 0,
    n_random: int = 2,
) -> VerificationReport:
    """Sample the Jacobiator.

    By default the triples are all distinct basis triples, every
    ``(e_a, e_b, x^i e_c)`` (which detects a non-tensorial Jacobiator when
    the anchor is incompatible with the bracket) and ``n_random`` random
    polynomial triples.
    """
    pts = _pts(A, pts, samples)
    if triples is None:
        triples = _default_triples(A, seed, n_random)
    else:
        triples = [
            t if isinstance(t[0], str) else (f"triple#{k}", *t) for k, t in enumerate(triples)
        ]
    report = VerificationReport("jacobi")
    for label, s1, s2, s3 in triples:
        J = jacobiator(A, s1, s2, s3)
        report.add("jacobi", label, eval_rows(J.coeffs, pts), pts, tol)
    return report


def check_anchor_bracket_compat(
    A: AlgebroidSpec,
    s1: Section | None = None,
    s2: Section | None = None,
    pts=None,
    samples: int = DEFAULT_SAMPLES,
    tol: float = DEFAULT_TOL,
) -> VerificationReport:
    """Residual of rho([s1, s2]) - [rho(s1), rho(s2)].

    Without explicit sections every basis pair is checked.
    """
    pts = _pts(A, pts, samples)
    if s1 is None or s2 is None:
        pairs = [
            (f"(e{a+1},e{b+1})", basis_section(A, a), basis_section(A, b))
            for a, b in itertools.combinations(range(A.rank), 2)
        ]
    else:
        pairs = [(f"({_label_section(s1, A.names)},{_label_section(s2, A.names)})", s1, s2)]
    report = VerificationReport("anchor_bracket")
    for label, u, v in pairs:
        lhs = anchor_apply(A, bracket(A, u, v))
        rhs = field_bracket(anchor_apply(A, u), anchor_apply(A, v))
        resid = [ex.simplify(a - b) for a, b in zip(lhs.comps, rhs.comps)]
        report.add("anchor_bracket", label, eval_rows(resid, pts), pts, tol)
    return report


def identity_suite(
    A: AlgebroidSpec,
    seed: int = 0,
    n_random: int = 10,
    samples: int = DEFAULT_SAMPLES,
    tol: float = DEFAULT_TOL,
) -> VerificationReport:
    """Leibniz, Jacobi, anchor compatibility and d^2 = 0 on one algebroid."""
    from .calculus import check_d_squared, random_form

    pts = A.sample_points(samples)
    rng = np.random.default_rng(seed)
    report = VerificationReport(f"identity_suite[{A.label or 'algebroid'}]")
    for k in range(max(1, n_random // 2)):
        s1, s2 = random_section(A, rng), random_section(A, rng)
        f = random_polynomial(rng, A.base_dim)
        check_leibniz(A, s1, f, s2, pts=pts, tol=tol, report=report)
    report.extend(check_jacobi(A, pts=pts, tol=tol, seed=seed))
    report.extend(check_anchor_bracket_compat(A, pts=pts, tol=tol))
    for degree in (0, 1):
        if degree >= A.rank:
            continue
        for k in range(n_random):
            w = random_form(A, degree, rng)
            r = check_d_squared(A, w, pts=pts, tol=tol)
            for res in r.results:
                res.site = f"deg{degree}#{k}:{res.site}"
            report.extend(r)
    return report


# ---------------------------------------------------------------------------
# constructors


def tangent_algebroid(n: int, sample_box=None) -> AlgebroidSpec:
    """TR^n with identity anchor and vanishing structure functions."""
    if n < 1:
        raise ShapeError("n must be >= 1")
    anchor = [[ONE if i == a else ZERO for a in range(n)] for i in range(n)]
    return make_algebroid(anchor, None, sample_box, label=f"tangent(R^{n})")


def nijenhuis_structure(N) -> dict:
    """Structure table of [.,.]_N on coordinate fields.

    [d_a, d_b]_N = [N d_a, d_b] + [d_a, N d_b] - N[d_a, d_b]
                 = (d_a N^g_b - d_b N^g_a) d_g.
    """
    n = len(N)
    table = {}
    for a in range(n):
        for b in range(a + 1, n):
            for g in range(n):
                c = ex.simplify(ex.diff(N[g][b], a) - ex.diff(N[g][a], b))
                if c != ZERO:
                    table[(a, b, g)] = c
    return table


def check_nijenhuis(N, sample_box=None, pts=None, samples: int = DEFAULT_SAMPLES, tol: float = DEFAULT_TOL):
    """Nijenhuis torsion [NX,NY] - N([NX,Y] + [X,NY] - N[X,Y]) on coordinate pairs."""
    n = len(N)
    N = [[ex.as_expr(v) for v in row] for row in N]
    if pts is None:
        pts = sample_points(sample_box or [DEFAULT_BOX] * n, samples)
    coord = [VectorField(tuple(ONE if i == a else ZERO for i in range(n))) for a in range(n)]

    def apply_N(v):
        return VectorField(
            tuple(ex.simplify(ex.sum_exprs(N[i][j] * v.comps[j] for j in range(n))) for i in range(n))
        )

    report = VerificationReport("nijenhuis")
    for a, b in itertools.combinations(range(n), 2):
        X, Y = coord[a], coord[b]
        NX, NY = apply_N(X), apply_N(Y)
        lhs = field_bracket(NX, NY)
        inner = [
            p + q for p, q in zip(field_bracket(NX, Y).comps, field_bracket(X, NY).comps)
        ]
        inner = VectorField(
            tuple(ex.simplify(c - d) for c, d in zip(inner, apply_N(field_bracket(X, Y)).comps))
        )
        rhs = apply_N(inner)
        resid = [p - q for p, q in zip(lhs.comps, rhs.comps)]
        report.add("nijenhuis", f"(d{a+1},d{b+1})", eval_rows(resid, pts), pts, tol)
    return report


def nijenhuis_algebroid(N, sample_box=None, names=None, label: str = "") -> AlgebroidSpec:
    """(TM, [.,.]_N, N) for a square matrix N of expressions.

    The torsion check is attached as ``flags["nijenhuis"]``; a failing
    check does not prevent construction.
    """
    N = [[ex.as_expr(v) for v in row] for row in N]
    n = len(N)
    if any(len(row) != n for row in N):
        raise ShapeError("N must be square")
    spec = make_algebroid(N, nijenhuis_structure(N), sample_box, names, label or "nijenhuis")
    spec.flags["nijenhuis"] = check_nijenhuis(N, pts=spec.sample_points())
    return spec


def poisson_cotangent_algebroid(Lam, sample_box=None, names=None, label: str = "") -> AlgebroidSpec:
    """T*R^n with bracket [dx^a, dx^b] = d(Lam^ab) and anchor Lam^#.

    Anchor: rho(dx^a) = Lam^{ai} d/dx^i, so ``anchor[i][a] = Lam[a][i]``.
    The sampled Jacobi check is attached as ``flags["jacobi"]``.
    """
    Lam = [[ex.as_expr(v) for v in row] for row in Lam]
    n = len(Lam)
    if any(len(row) != n for row in Lam):
        raise ShapeError("Lambda must be square")
    for a in range(n):
        for b in range(a, n):
            if not ex.is_zero(Lam[a][b] + Lam[b][a]):
                raise ShapeError("Lambda must be antisymmetric")
    anchor = [[Lam[a][i] for a in range(n)] for i in range(n)]
    table = {}
    for a in range(n):
        for b in range(a + 1, n):
            for g in range(n):
                c = ex.simplify(ex.diff(Lam[a][b], g))
                if c != ZERO:
                    table[(a, b, g)] = c
    spec = make_algebroid(anchor, table, sample_box, names, label or "poisson_cotangent")
    spec.flags["jacobi"] = check_jacobi(spec, n_random=0)
    return spec


# ---------------------------------------------------------------------------
# random test data (fixed seeds give reproducible reports)


def random_polynomial(rng, nvars: int, degree: int = 2, nterms: int = 3) -> Expr:
    """Sum of ``nterms`` monomials with small integer coefficients."""
    acc = ZERO
    for _ in range(nterms):
        c = int(rng.integers(-3, 4)) or 1
        term = ex.Const(c)
        for _ in range(int(rng.integers(0, degree + 1))):
            term = term * Var(int(rng.integers(0, nvars)))
        acc = acc + term
    return ex.simplify(acc)


def random_section(A: AlgebroidSpec, rng, degree: int = 2) -> Section:
    return Section(tuple(random_polynomial(rng, A.base_dim, degree) for _ in range(A.rank)))
