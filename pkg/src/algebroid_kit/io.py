"""JSON (de)serialisation of algebroids, forms, towers and Hamiltonian systems.

Expressions are stored as prefix s-expressions.  Structure and form indices
in JSON are 1-based, like the coordinate names ``x1 .. xn``.  Every loader
raises :class:`ParseError` on malformed input.
"""

from __future__ import annotations

import json
from pathlib import Path

from . import expr as ex
from .algebroid import AlgebroidSpec, make_algebroid
from .calculus import QForm
from .errors import AlgebroidKitError, DomainError, ParseError
from .limits import DirectSystemSpec, make_direct_system
from .mechanics import HamiltonianSystem, make_hamiltonian_system

__all__ = [
    "algebroid_to_dict",
    "algebroid_from_dict",
    "qform_to_dict",
    "qform_from_dict",
    "direct_system_to_dict",
    "direct_system_from_dict",
    "hamiltonian_to_dict",
    "hamiltonian_from_dict",
    "load_json",
    "dump_json",
]


def load_json(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as err:
        raise ParseError(f"cannot read {path}: {err}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as err:
        raise ParseError(f"{path}: invalid JSON ({err})") from None


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _need(obj, key, kind):
    if not isinstance(obj, dict):
        raise ParseError(f"{kind} must be a JSON object")
    if key not in obj:
        raise ParseError(f"{kind} is missing {key!r}")
    return obj[key]


def _int(v, what):
    if isinstance(v, bool) or not isinstance(v, int):
        raise ParseError(f"{what} must be an integer")
    return v


def _expr(text, names):
    if isinstance(text, bool):
        raise ParseError("expression must be a string or number")
    if isinstance(text, (int, float)):
        return ex.Const(float(text))
    if not isinstance(text, str):
        raise ParseError(f"expression must be a string, got {type(text).__name__}")
    return ex.parse(text, names)


def _box(obj, dim, key):
    box = obj.get(key)
    if box is None:
        return None
    try:
        box = [(float(lo), float(hi)) for lo, hi in box]
    except (TypeError, ValueError):
        raise ParseError(f"{key} must be a list of [lo, hi] pairs") from None
    if len(box) != dim:
        raise ParseError(f"{key} has {len(box)} intervals, expected {dim}")
    return box


# ---------------------------------------------------------------------------
# algebroids


def algebroid_to_dict(A: AlgebroidSpec) -> dict:
    names = list(A.names)
    return {
        "base_dim": A.base_dim,
        "rank": A.rank,
        "names": names,
        "anchor": [[ex.to_sexpr(e, names) for e in row] for row in A.anchor],
        "structure": [
            {"alpha": a + 1, "beta": b + 1, "gamma": g + 1, "expr": ex.to_sexpr(c, names)}
            for a, b, g, c in A.structure_entries()
        ],
        "sample_box": [list(b) for b in A.sample_box],
    }


def algebroid_from_dict(obj, validate: bool = True) -> AlgebroidSpec:
    n = _int(_need(obj, "base_dim", "algebroid"), "base_dim")
    m = _int(_need(obj, "rank", "algebroid"), "rank")
    names = obj.get("names")
    if names is not None and (len(names) != n or not all(isinstance(s, str) for s in names)):
        raise ParseError(f"names must list {n} strings")
    anchor = _need(obj, "anchor", "algebroid")
    if not isinstance(anchor, list) or len(anchor) != n:
        raise ParseError(f"anchor must have {n} rows")
    rows = []
    for row in anchor:
        if not isinstance(row, list) or len(row) != m:
            raise ParseError(f"each anchor row must have {m} entries")
        rows.append([_expr(e, names) for e in row])
    structure = {}
    for ent in obj.get("structure", []) or []:
        a, b, g = (_int(_need(ent, k, "structure entry"), k) - 1 for k in ("alpha", "beta", "gamma"))
        if not all(0 <= v < m for v in (a, b, g)):
            raise ParseError(f"structure index out of range 1..{m}: {ent}")
        key = (a, b, g)
        e = _expr(_need(ent, "expr", "structure entry"), names)
        structure[key] = structure[key] + e if key in structure else e
    try:
        return make_algebroid(rows, structure, _box(obj, n, "sample_box"), names,
                              label=str(obj.get("label", "")), validate=validate)
    except ParseError:
        raise
    except AlgebroidKitError as err:
        if isinstance(err, DomainError):
            raise
        raise ParseError(str(err)) from None


# ---------------------------------------------------------------------------
# forms


def qform_to_dict(w: QForm, names=None) -> dict:
    comps = []
    for idx, e in sorted(w.components.items()):
        if e != ex.ZERO:
            comps.append({"indices": [i + 1 for i in idx], "expr": ex.to_sexpr(e, names)})
    return {"degree": w.degree, "rank": w.rank, "components": comps}


def qform_from_dict(obj, rank: int | None = None, names=None) -> QForm:
    from .calculus import _make_form

    q = _int(_need(obj, "degree", "form"), "degree")
    m = obj.get("rank", rank)
    if m is None:
        raise ParseError("form rank unknown: give 'rank' or pass the algebroid")
    comps = {}
    for ent in _need(obj, "components", "form"):
        idx = tuple(_int(i, "index") - 1 for i in _need(ent, "indices", "component"))
        if len(idx) != q or not all(0 <= i < m for i in idx):
            raise ParseError(f"bad component indices {ent.get('indices')}")
        comps[idx] = _expr(_need(ent, "expr", "component"), names)
    try:
        return _make_form(q, m, comps)
    except AlgebroidKitError as err:
        raise ParseError(str(err)) from None


# ---------------------------------------------------------------------------
# direct systems


def direct_system_to_dict(sys: DirectSystemSpec) -> dict:
    out = {"levels": [algebroid_to_dict(A) for A in sys.levels], "depth": sys.depth}
    out["base_bondings"] = [
        [ex.to_sexpr(e, list(A.names)) for e in eps] for eps, A in zip(sys.base_bondings, sys.levels)
    ]
    out["fiber_bondings"] = [
        [[ex.to_sexpr(e, list(A.names)) for e in row] for row in lam]
        for lam, A in zip(sys.fiber_bondings, sys.levels)
    ]
    return out


def direct_system_from_dict(obj) -> DirectSystemSpec:
    levels = [algebroid_from_dict(L) for L in _need(obj, "levels", "direct system")]
    if not levels:
        raise ParseError("direct system needs at least one level")
    bb = obj.get("base_bondings")
    fb = obj.get("fiber_bondings")
    if bb is not None:
        if len(bb) != len(levels) - 1:
            raise ParseError(f"{len(levels)} levels need {len(levels) - 1} base bondings")
        bb = [[_expr(e, list(A.names)) for e in eps] for eps, A in zip(bb, levels)]
    if fb is not None:
        if len(fb) != len(levels) - 1:
            raise ParseError(f"{len(levels)} levels need {len(levels) - 1} fiber bondings")
        fb = [[[_expr(e, list(A.names)) for e in row] for row in lam] for lam, A in zip(fb, levels)]
    depth = obj.get("depth")
    if depth is not None:
        depth = _int(depth, "depth")
        if not 1 <= depth <= len(levels):
            raise ParseError(f"depth must lie in 1..{len(levels)}")
    try:
        return make_direct_system(levels, bb, fb, depth=depth)
    except AlgebroidKitError as err:
        raise ParseError(str(err)) from None


# ---------------------------------------------------------------------------
# Hamiltonian systems


def hamiltonian_to_dict(sys: HamiltonianSystem) -> dict:
    names = list(sys.names)
    structure = []
    for (a, b), row in sorted(sys.structure.items()):
        for g, c in enumerate(row):
            if c != ex.ZERO:
                structure.append({"alpha": a + 1, "beta": b + 1, "gamma": g + 1, "expr": ex.to_sexpr(c, names)})
    return {
        "base_dim": sys.n,
        "rank": sys.m,
        "names": names,
        "anchor": [[ex.to_sexpr(e, names) for e in row] for row in sys.anchor],
        "structure": structure,
        "hamiltonian": ex.to_sexpr(sys.H, names),
        "monitors": [{"name": k, "expr": ex.to_sexpr(e, names)} for k, e in sys.monitors],
        "start_box": [list(b) for b in sys.start_box],
    }


def hamiltonian_from_dict(obj) -> HamiltonianSystem:
    n = _int(_need(obj, "base_dim", "hamiltonian system"), "base_dim")
    m = _int(_need(obj, "rank", "hamiltonian system"), "rank")
    names = obj.get("names") or [f"x{i+1}" for i in range(n)] + [f"mu{a+1}" for a in range(m)]
    if len(names) != n + m:
        raise ParseError(f"names must list {n + m} phase coordinates")
    anchor = _need(obj, "anchor", "hamiltonian system")
    if len(anchor) != n or any(len(r) != m for r in anchor):
        raise ParseError(f"anchor must be {n} x {m}")
    rows = [[_expr(e, names) for e in row] for row in anchor]
    structure = {}
    for ent in obj.get("structure", []) or []:
        a, b, g = (_int(_need(ent, k, "structure entry"), k) - 1 for k in ("alpha", "beta", "gamma"))
        structure[(a, b, g)] = _expr(_need(ent, "expr", "structure entry"), names)
    H = _expr(_need(obj, "hamiltonian", "hamiltonian system"), names)
    monitors = tuple((str(_need(mo, "name", "monitor")), _expr(_need(mo, "expr", "monitor"), names))
                     for mo in obj.get("monitors", []) or [])
    try:
        return make_hamiltonian_system(rows, structure, H, _box(obj, n + m, "start_box"), names, monitors)
    except ParseError:
        raise
    except AlgebroidKitError as err:
        if isinstance(err, DomainError):
            raise
        raise ParseError(str(err)) from None
