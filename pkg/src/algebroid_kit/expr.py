"""Small symbolic scalar-expression algebra.

Expressions are immutable trees over positional coordinates ``Var(i)``.
The grammar is deliberately small: constants, coordinates, sums, products,
negation, quotients, integer powers and natural logarithms.  That covers
every coefficient function used in the kit and keeps exact differentiation
trivial.

Names such as ``x1`` or ``mu2`` are metadata only; they matter when
printing or parsing s-expressions.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionError, DomainError, ParseError

__all__ = [
    "Expr",
    "Const",
    "Var",
    "Add",
    "Mul",
    "Neg",
    "Div",
    "Pow",
    "Log",
    "ZERO",
    "ONE",
    "as_expr",
    "const",
    "var",
    "ln",
    "evaluate",
    "evaluate_many",
    "diff",
    "simplify",
    "is_zero",
    "substitute",
    "shift",
    "max_index",
    "domain_constraints",
    "to_sexpr",
    "parse",
    "to_source",
    "default_names",
]


class Expr:
    """Base class of the expression tree.  Use the operators to combine."""

    __slots__ = ()

    def __add__(self, other):
        return add(self, as_expr(other))

    def __radd__(self, other):
        return add(as_expr(other), self)

    def __sub__(self, other):
        return add(self, neg(as_expr(other)))

    def __rsub__(self, other):
        return add(as_expr(other), neg(self))

    def __mul__(self, other):
        return mul(self, as_expr(other))

    def __rmul__(self, other):
        return mul(as_expr(other), self)

    def __truediv__(self, other):
        return div(self, as_expr(other))

    def __rtruediv__(self, other):
        return div(as_expr(other), self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, k):
        if isinstance(k, Const):
            k = k.value
        if int(k) != k:
            raise TypeError("only integer powers are supported")
        return power(self, int(k))

    def __str__(self):
        return to_sexpr(self)


@dataclass(frozen=True, slots=True, repr=False)
class Const(Expr):
    value: float

    def __post_init__(self):
        object.__setattr__(self, "value", float(self.value))

    def __repr__(self):
        return f"Const({self.value!r})"


@dataclass(frozen=True, slots=True, repr=False)
class Var(Expr):
    index: int

    def __repr__(self):
        return f"Var({self.index})"


@dataclass(frozen=True, slots=True, repr=False)
class Add(Expr):
    terms: tuple

    def __repr__(self):
        return f"Add{self.terms!r}"


@dataclass(frozen=True, slots=True, repr=False)
class Mul(Expr):
    factors: tuple

    def __repr__(self):
        return f"Mul{self.factors!r}"


@dataclass(frozen=True, slots=True, repr=False)
class Neg(Expr):
    arg: Expr

    def __repr__(self):
        return f"Neg({self.arg!r})"


@dataclass(frozen=True, slots=True, repr=False)
class Div(Expr):
    num: Expr
    den: Expr

    def __repr__(self):
        return f"Div({self.num!r}, {self.den!r})"


@dataclass(frozen=True, slots=True, repr=False)
class Pow(Expr):
    base: Expr
    exp: int

    def __repr__(self):
        return f"Pow({self.base!r}, {self.exp})"


@dataclass(frozen=True, slots=True, repr=False)
class Log(Expr):
    arg: Expr

    def __repr__(self):
        return f"Log({self.arg!r})"


ZERO = Const(0.0)
ONE = Const(1.0)


def as_expr(value) -> Expr:
    if isinstance(value, Expr):
        return value
    if isinstance(value, (int, float, np.integer, np.floating)):
        return Const(float(value))
    raise TypeError(f"cannot convert {type(value).__name__} to Expr")


def const(value) -> Const:
    return Const(float(value))


def var(index: int) -> Var:
    return Var(int(index))


def ln(e) -> Expr:
    return Log(as_expr(e))


# Smart constructors: cheap local folding only, full work is in simplify().


def add(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and a.value == 0.0:
        return b
    if isinstance(b, Const) and b.value == 0.0:
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value + b.value)
    ta = a.terms if isinstance(a, Add) else (a,)
    tb = b.terms if isinstance(b, Add) else (b,)
    return Add(ta + tb)


def mul(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const):
        if a.value == 0.0:
            return ZERO
        if a.value == 1.0:
            return b
    if isinstance(b, Const):
        if b.value == 0.0:
            return ZERO
        if b.value == 1.0:
            return a
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value * b.value)
    fa = a.factors if isinstance(a, Mul) else (a,)
    fb = b.factors if isinstance(b, Mul) else (b,)
    return Mul(fa + fb)


def neg(a: Expr) -> Expr:
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def div(a: Expr, b: Expr) -> Expr:
    if isinstance(b, Const) and b.value == 1.0:
        return a
    return Div(a, b)


def power(a: Expr, k: int) -> Expr:
    if k == 1:
        return a
    if k == 0:
        return ONE
    if isinstance(a, Const) and k > 0:
        return Const(a.value**k)
    return Pow(a, k)


def sum_exprs(items) -> Expr:
    out = ZERO
    for item in items:
        out = add(out, as_expr(item))
    return out


# ---------------------------------------------------------------------------
# evaluation


def max_index(e: Expr) -> int:
    """Largest coordinate index referenced by ``e`` (-1 when constant)."""
    stack = [e]
    best = -1
    while stack:
        node = stack.pop()
        if isinstance(node, Var):
            best = max(best, node.index)
        else:
            stack.extend(_children(node))
    return best


def _children(e: Expr):
    if isinstance(e, Add):
        return e.terms
    if isinstance(e, Mul):
        return e.factors
    if isinstance(e, (Neg, Log)):
        return (e.arg,)
    if isinstance(e, Div):
        return (e.num, e.den)
    if isinstance(e, Pow):
        return (e.base,)
    return ()


def _ev(e: Expr, z):
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        return z[e.index]
    if isinstance(e, Add):
        acc = _ev(e.terms[0], z)
        for t in e.terms[1:]:
            acc = acc + _ev(t, z)
        return acc
    if isinstance(e, Mul):
        acc = _ev(e.factors[0], z)
        for f in e.factors[1:]:
            acc = acc * _ev(f, z)
        return acc
    if isinstance(e, Neg):
        return -_ev(e.arg, z)
    if isinstance(e, Div):
        num = _ev(e.num, z)
        den = _ev(e.den, z)
        if np.any(np.asarray(den) == 0.0):
            raise DomainError(f"division by zero in {to_sexpr(e)}")
        return num / den
    if isinstance(e, Pow):
        base = _ev(e.base, z)
        if e.exp < 0:
            if np.any(np.asarray(base) == 0.0):
                raise DomainError(f"negative power of zero in {to_sexpr(e)}")
            return 1.0 / base ** (-e.exp)
        return base**e.exp
    if isinstance(e, Log):
        arg = _ev(e.arg, z)
        if np.any(np.asarray(arg) <= 0.0):
            raise DomainError(f"ln of non-positive value in {to_sexpr(e)}")
        return np.log(arg)
    raise TypeError(f"not an expression: {e!r}")


def evaluate(e: Expr, pt) -> float:
    """Evaluate ``e`` at one point.

    Raises:
      DimensionError: ``pt`` has fewer coordinates than ``e`` references.
      DomainError: a quotient or logarithm is evaluated off its domain.
    """
    z = np.asarray(pt, dtype=float).reshape(-1)
    if max_index(e) >= z.shape[0]:
        raise DimensionError(
            f"point has {z.shape[0]} coordinates, expression needs {max_index(e) + 1}"
        )
    return float(_ev(e, z))


def evaluate_many(e: Expr, pts) -> np.ndarray:
    """Vectorised evaluation at every row of ``pts`` (shape ``(k, dim)``)."""
    pts = np.asarray(pts, dtype=float)
    if pts.ndim != 2:
        raise DimensionError("points must be a 2-d array (k, dim)")
    if max_index(e) >= pts.shape[1]:
        raise DimensionError(
            f"points have {pts.shape[1]} coordinates, expression needs {max_index(e) + 1}"
        )
    with np.errstate(all="ignore"):
        out = _ev(e, pts.T)
    return np.broadcast_to(np.asarray(out, dtype=float), (pts.shape[0],)).copy()


def domain_constraints(e: Expr) -> list[tuple[str, Expr]]:
    """List of ``("nonzero", expr)`` / ``("positive", expr)`` constraints."""
    out = []
    stack = [e]
    while stack:
        node = stack.pop()
        if isinstance(node, Div):
            out.append(("nonzero", node.den))
        elif isinstance(node, Pow) and node.exp < 0:
            out.append(("nonzero", node.base))
        elif isinstance(node, Log):
            out.append(("positive", node.arg))
        stack.extend(_children(node))
    return out


# ---------------------------------------------------------------------------
# differentiation and substitution


def diff(e: Expr, i: int) -> Expr:
    """Exact partial derivative with respect to coordinate ``i``."""
    if isinstance(e, Const):
        return ZERO
    if isinstance(e, Var):
        return ONE if e.index == i else ZERO
    if isinstance(e, Add):
        return sum_exprs(diff(t, i) for t in e.terms)
    if isinstance(e, Mul):
        out = ZERO
        fs = e.factors
        for k, f in enumerate(fs):
            df = diff(f, i)
            if isinstance(df, Const) and df.value == 0.0:
                continue
            term = df
            for j, g in enumerate(fs):
                if j != k:
                    term = mul(term, g)
            out = add(out, term)
        return out
    if isinstance(e, Neg):
        return neg(diff(e.arg, i))
    if isinstance(e, Div):
        dn = diff(e.num, i)
        dd = diff(e.den, i)
        if isinstance(dd, Const) and dd.value == 0.0:
            if isinstance(dn, Const) and dn.value == 0.0:
                return ZERO
            return Div(dn, e.den)
        return Div(add(mul(dn, e.den), neg(mul(e.num, dd))), Pow(e.den, 2))
    if isinstance(e, Pow):
        db = diff(e.base, i)
        if isinstance(db, Const) and db.value == 0.0:
            return ZERO
        return mul(mul(Const(e.exp), power(e.base, e.exp - 1)), db)
    if isinstance(e, Log):
        da = diff(e.arg, i)
        if isinstance(da, Const) and da.value == 0.0:
            return ZERO
        return Div(da, e.arg)
    raise TypeError(f"not an expression: {e!r}")


def substitute(e: Expr, mapping: Sequence[Expr]) -> Expr:
    """Replace every ``Var(i)`` by ``mapping[i]`` (composition with a map)."""
    if isinstance(e, Const):
        return e
    if isinstance(e, Var):
        if e.index >= len(mapping):
            raise DimensionError(f"substitution has no entry for coordinate {e.index}")
        return mapping[e.index]
    if isinstance(e, Add):
        return Add(tuple(substitute(t, mapping) for t in e.terms))
    if isinstance(e, Mul):
        return Mul(tuple(substitute(f, mapping) for f in e.factors))
    if isinstance(e, Neg):
        return Neg(substitute(e.arg, mapping))
    if isinstance(e, Div):
        return Div(substitute(e.num, mapping), substitute(e.den, mapping))
    if isinstance(e, Pow):
        return Pow(substitute(e.base, mapping), e.exp)
    if isinstance(e, Log):
        return Log(substitute(e.arg, mapping))
    raise TypeError(f"not an expression: {e!r}")


def shift(e: Expr, offset: int) -> Expr:
    """Re-index coordinates ``i -> i + offset``."""
    if offset == 0:
        return e
    top = max_index(e)
    return substitute(e, [Var(i + offset) for i in range(top + 1)])


# ---------------------------------------------------------------------------
# simplification
#
# Normal form: dict monomial -> coefficient, a monomial being a sorted tuple of
# (factor, exponent).  Factors are Var nodes or opaque atoms (logs and
# non-monomial denominators).  Exponents may be negative.


def _factor_key(f: Expr):
    if isinstance(f, Var):
        return (0, f.index, "")
    return (1, 0, to_sexpr(f))


def _mono_mul(m1, m2):
    if not m1:
        return m2
    if not m2:
        return m1
    exps = dict(m1)
    for f, k in m2:
        exps[f] = exps.get(f, 0) + k
    return tuple(
        sorted(((f, k) for f, k in exps.items() if k != 0), key=lambda fk: _factor_key(fk[0]))
    )


def _nf_add(p, q, scale=1.0):
    out = dict(p)
    for m, c in q.items():
        v = out.get(m, 0.0) + scale * c
        if v == 0.0:
            out.pop(m, None)
        else:
            out[m] = v
    return out


def _nf_mul(p, q):
    out = {}
    for m1, c1 in p.items():
        for m2, c2 in q.items():
            m = _mono_mul(m1, m2)
            v = out.get(m, 0.0) + c1 * c2
            if v == 0.0:
                out.pop(m, None)
            else:
                out[m] = v
    return out


def _nf_scale(p, c):
    if c == 0.0:
        return {}
    return {m: c * v for m, v in p.items()}


def _nf_pow(p, k):
    # k > 0
    if len(p) == 1:
        ((m, c),) = p.items()
        return {tuple((f, e * k) for f, e in m): c**k}
    out = {(): 1.0}
    for _ in range(k):
        out = _nf_mul(out, p)
    return out


def _nf_inverse(p, k):
    """Normal form of ``p ** (-k)``."""
    if len(p) == 1:
        ((m, c),) = p.items()
        return {tuple((f, -e * k) for f, e in m): c ** (-k)}
    atom = _rebuild(p)
    return {((atom, -k),): 1.0}


def _nf(e: Expr):
    if isinstance(e, Const):
        return {(): e.value} if e.value != 0.0 else {}
    if isinstance(e, Var):
        return {((e, 1),): 1.0}
    if isinstance(e, Add):
        out = {}
        for t in e.terms:
            out = _nf_add(out, _nf(t))
        return out
    if isinstance(e, Mul):
        out = {(): 1.0}
        for f in e.factors:
            out = _nf_mul(out, _nf(f))
            if not out:
                return out
        return out
    if isinstance(e, Neg):
        return _nf_scale(_nf(e.arg), -1.0)
    if isinstance(e, Pow):
        base = _nf(e.base)
        if e.exp == 0:
            return {(): 1.0}
        if e.exp > 0:
            if not base:
                return {}
            if len(base) > 1 and e.exp > 6:
                return {((_rebuild(base), e.exp),): 1.0}
            return _nf_pow(base, e.exp)
        if not base:
            return {((Pow(ZERO, e.exp), 1),): 1.0}
        return _nf_inverse(base, -e.exp)
    if isinstance(e, Div):
        num = _nf(e.num)
        den = _nf(e.den)
        if not den:
            return {((Div(_rebuild(num), ZERO), 1),): 1.0}
        if not num:
            return {}
        return _nf_mul(num, _nf_inverse(den, 1))
    if isinstance(e, Log):
        arg = simplify(e.arg)
        if isinstance(arg, Const) and arg.value > 0.0:
            v = math.log(arg.value)
            return {(): v} if v != 0.0 else {}
        return {((Log(arg), 1),): 1.0}
    raise TypeError(f"not an expression: {e!r}")


def _is_poly_mono(m):
    return all(isinstance(f, Var) and k > 0 for f, k in m)


def _lead(p):
    best = None
    bkey = None
    for m in p:
        key = _mono_order(m)
        if bkey is None or key > bkey:
            best, bkey = m, key
    return best


def _mono_order(m):
    # lex with x0 > x1 > ...: compare exponents of lowest index first
    top = max((f.index for f, _ in m), default=-1)
    vec = [0] * (top + 1)
    for f, k in m:
        vec[f.index] = k
    return tuple(vec)


def _mono_div(m1, m2):
    """m1 / m2 if it is a polynomial monomial, else None."""
    exps = dict(m1)
    for f, k in m2:
        have = exps.get(f, 0)
        if have < k:
            return None
        exps[f] = have - k
    return tuple(
        sorted(((f, k) for f, k in exps.items() if k != 0), key=lambda fk: _factor_key(fk[0]))
    )


def _poly_exact_div(q, p):
    """Exact multivariate division q / p, or None when p does not divide q."""
    if not p or not q:
        return None
    scale = max(abs(c) for c in q.values())
    lp = _lead(p)
    cp = p[lp]
    quot = {}
    rem = dict(q)
    for _ in range(4 * len(q) * len(p) + 16):
        rem = {m: c for m, c in rem.items() if abs(c) > 1e-13 * scale}
        if not rem:
            return quot
        lr = _lead(rem)
        t = _mono_div(lr, lp)
        if t is None:
            return None
        c = rem[lr] / cp
        quot = _nf_add(quot, {t: c})
        rem = _nf_add(rem, _nf_mul({t: c}, p), scale=-1.0)
        rem.pop(lr, None)
    return None


def _cancel(p):
    groups: dict = {}
    for m, c in p.items():
        atoms = tuple((f, k) for f, k in m if not isinstance(f, Var))
        poly = tuple((f, k) for f, k in m if isinstance(f, Var))
        groups.setdefault(atoms, {})[poly] = c
    if all(not any(k < 0 for _, k in atoms) for atoms in groups):
        return p
    out = {}
    for atoms, q in groups.items():
        atoms = list(atoms)
        changed = True
        while changed and all(_is_poly_mono(m) or not m for m in q):
            changed = False
            for idx, (f, k) in enumerate(atoms):
                if k >= 0:
                    continue
                fp = _nf(f)
                if not fp or not all(_is_poly_mono(m) or not m for m in fp):
                    continue
                res = _poly_exact_div(q, fp)
                if res is None:
                    continue
                q = res
                atoms[idx] = (f, k + 1)
                atoms = [(g, j) for g, j in atoms if j != 0]
                changed = True
                break
        atom_part = tuple(atoms)
        for m, c in q.items():
            mono = _mono_mul(m, atom_part)
            v = out.get(mono, 0.0) + c
            if v == 0.0:
                out.pop(mono, None)
            else:
                out[mono] = v
    return out


def _factor_expr(f, k):
    return f if k == 1 else Pow(f, k)


def _rebuild(p) -> Expr:
    if not p:
        return ZERO
    terms = []
    for m in sorted(p, key=lambda m: [(_factor_key(f), k) for f, k in m]):
        c = p[m]
        num = [_factor_expr(f, k) for f, k in m if k > 0]
        den = [_factor_expr(f, -k) for f, k in m if k < 0]
        sign = 1.0
        if c < 0:
            sign, c = -1.0, -c
        if c != 1.0 or not num:
            num = [Const(c)] + num
        body = num[0] if len(num) == 1 else Mul(tuple(num))
        if den:
            body = Div(body, den[0] if len(den) == 1 else Mul(tuple(den)))
        terms.append(Neg(body) if sign < 0 else body)
    return terms[0] if len(terms) == 1 else Add(tuple(terms))


def simplify(e: Expr) -> Expr:
    """Best-effort simplification.

    Expands the polynomial fragment, folds constants, collects like terms and
    cancels polynomial denominators that divide the numerator exactly.  The
    result is semantically equal on the admissible domain but is not a
    canonical form.
    """
    return _rebuild(_cancel(_nf(e)))


def is_zero(e: Expr) -> bool:
    return simplify(e) == ZERO


# ---------------------------------------------------------------------------
# s-expression serialisation

_OPS = {"+": Add, "*": Mul}


def default_names(n: int, prefix: str = "x") -> list[str]:
    return [f"{prefix}{i + 1}" for i in range(n)]


def _fmt_const(v: float) -> str:
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def to_sexpr(e: Expr, names: Sequence[str] | None = None) -> str:
    """Prefix s-expression, e.g. ``(/ (+ (^ x1 2) (^ x2 2)) 2)``."""
    if isinstance(e, Const):
        return _fmt_const(e.value)
    if isinstance(e, Var):
        if names is not None and e.index < len(names):
            return names[e.index]
        return f"x{e.index + 1}"
    if isinstance(e, Add):
        return "(+ " + " ".join(to_sexpr(t, names) for t in e.terms) + ")"
    if isinstance(e, Mul):
        return "(* " + " ".join(to_sexpr(f, names) for f in e.factors) + ")"
    if isinstance(e, Neg):
        return f"(- {to_sexpr(e.arg, names)})"
    if isinstance(e, Div):
        return f"(/ {to_sexpr(e.num, names)} {to_sexpr(e.den, names)})"
    if isinstance(e, Pow):
        return f"(^ {to_sexpr(e.base, names)} {e.exp})"
    if isinstance(e, Log):
        return f"(ln {to_sexpr(e.arg, names)})"
    raise TypeError(f"not an expression: {e!r}")


_TOKEN = re.compile(r"\s*(\(|\)|[^\s()]+)")
_DEFAULT_NAME = re.compile(r"^[A-Za-z_]+?(\d+)$")


def _tokenize(text: str):
    pos = 0
    out = []
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character at {pos} in {text!r}")
        out.append(m.group(1))
        pos = m.end()
    return out


def parse(text: str, names: Sequence[str] | None = None) -> Expr:
    """Parse a prefix s-expression.

    With ``names`` given, symbols are looked up in that list.  Without it any
    symbol ending in a 1-based integer (``x3``, ``u1``) maps to that index
    minus one.
    """
    if isinstance(text, (int, float)):
        return Const(float(text))
    tokens = _tokenize(str(text))
    if not tokens:
        raise ParseError("empty expression")
    lookup = {n: i for i, n in enumerate(names)} if names is not None else None
    expr, pos = _parse_at(tokens, 0, lookup)
    if pos != len(tokens):
        raise ParseError(f"trailing tokens in {text!r}")
    return expr


def _atom(tok: str, lookup) -> Expr:
    try:
        return Const(float(tok))
    except ValueError:
        pass
    if lookup is not None:
        if tok in lookup:
            return Var(lookup[tok])
        raise ParseError(f"unknown coordinate {tok!r}")
    m = _DEFAULT_NAME.match(tok)
    if not m or int(m.group(1)) < 1:
        raise ParseError(f"cannot interpret symbol {tok!r}")
    return Var(int(m.group(1)) - 1)


def _parse_at(tokens, pos, lookup):
    if pos >= len(tokens):
        raise ParseError("unexpected end of expression")
    tok = tokens[pos]
    if tok == ")":
        raise ParseError("unexpected ')'")
    if tok != "(":
        return _atom(tok, lookup), pos + 1
    if pos + 1 >= len(tokens):
        raise ParseError("unexpected end of expression")
    op = tokens[pos + 1]
    pos += 2
    args = []
    while True:
        if pos >= len(tokens):
            raise ParseError("missing ')'")
        if tokens[pos] == ")":
            pos += 1
            break
        arg, pos = _parse_at(tokens, pos, lookup)
        args.append(arg)
    if op in _OPS:
        if len(args) < 2:
            raise ParseError(f"({op} ...) needs at least two arguments")
        return _OPS[op](tuple(args)), pos
    if op == "-":
        if len(args) == 1:
            return Neg(args[0]), pos
        if len(args) == 2:
            return Add((args[0], Neg(args[1]))), pos
        raise ParseError("(- ...) takes one or two arguments")
    if op == "/":
        if len(args) != 2:
            raise ParseError("(/ a b) takes two arguments")
        return Div(args[0], args[1]), pos
    if op == "^":
        if len(args) != 2 or not isinstance(args[1], Const) or args[1].value != int(args[1].value):
            raise ParseError("(^ base k) needs an integer exponent")
        return Pow(args[0], int(args[1].value)), pos
    if op == "ln":
        if len(args) != 1:
            raise ParseError("(ln a) takes one argument")
        return Log(args[0]), pos
    raise ParseError(f"unknown operator {op!r}")


# ---------------------------------------------------------------------------
# source generation for the compiled kernels


def to_source(e: Expr, z: str = "z") -> str:
    """Python source evaluating ``e`` with coordinates ``z[i]`` (uses ``np.log``)."""
    if isinstance(e, Const):
        return repr(e.value)
    if isinstance(e, Var):
        return f"{z}[{e.index}]"
    if isinstance(e, Add):
        return "(" + " + ".join(to_source(t, z) for t in e.terms) + ")"
    if isinstance(e, Mul):
        return "(" + " * ".join(to_source(f, z) for f in e.factors) + ")"
    if isinstance(e, Neg):
        return f"(-{to_source(e.arg, z)})"
    if isinstance(e, Div):
        return f"({to_source(e.num, z)} / {to_source(e.den, z)})"
    if isinstance(e, Pow):
        if e.exp < 0:
            return f"(1.0 / {to_source(e.base, z)} ** {-e.exp})"
        return f"({to_source(e.base, z)} ** {e.exp})"
    if isinstance(e, Log):
        return f"np.log({to_source(e.arg, z)})"
    raise TypeError(f"not an expression: {e!r}")
