"""Hamilton equations on the dual of a Lie algebroid.

Phase coordinates are ``(x^1..x^n, mu_1..mu_m)``; every coefficient is an
Expr over all ``n + m`` of them.  The equations are

    dx^i/dt   =  rho_a^i dH/dmu_a
    dmu_a/dt  = -rho_a^i dH/dx^i - mu_g C_ab^g dH/dmu_b
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import expr as ex
from ._kernels import jit_enabled, rk4_loop
from .algebroid import nijenhuis_structure
from .errors import DomainError, DomainExit, NonFinite, ShapeError
from .expr import ZERO, Expr, Var
from .report import DEFAULT_SAMPLES, sample_points

__all__ = [
    "HamiltonianSystem",
    "Trajectory",
    "make_hamiltonian_system",
    "hamilton_vector_field",
    "harmonic_oscillator_system",
    "integrate_rk4",
    "conserved_report",
    "oscillator_monitors",
    "closed_form_error",
]


@dataclass(frozen=True)
class HamiltonianSystem:
    """A Hamiltonian on ``E*`` in one chart.

    ``anchor[i][a]`` is rho_a^i, ``structure[(a, b)]`` the tuple C_ab^. for
    a < b, ``start_box`` the region initial conditions are drawn from.
    """

    n: int
    m: int
    anchor: tuple
    structure: dict
    H: Expr
    start_box: tuple
    names: tuple
    monitors: tuple = ()
    label: str = field(default="", compare=False)

    @property
    def dim(self) -> int:
        return self.n + self.m

    def C(self, a: int, b: int, g: int) -> Expr:
        if a == b:
            return ZERO
        if a < b:
            return self.structure.get((a, b), (ZERO,) * self.m)[g]
        return -self.structure.get((b, a), (ZERO,) * self.m)[g]

    def sample_points(self, n: int = DEFAULT_SAMPLES) -> np.ndarray:
        return sample_points(self.start_box, n)

    def monitor_exprs(self):
        """(name, Expr) pairs: H first, then any fixture monitors."""
        return (("H", self.H),) + tuple(self.monitors)


def _phase_names(n: int, m: int):
    return tuple(f"x{i+1}" for i in range(n)) + tuple(f"mu{a+1}" for a in range(m))


def make_hamiltonian_system(anchor, structure, H, start_box=None, names=None,
                            monitors=(), label: str = "", validate: bool = True) -> HamiltonianSystem:
    """Build and validate a system.

    ``anchor`` is n rows of m Exprs; ``structure`` a dict ``{(a, b, g): expr}``
    (0-based, antisymmetrised here).
    """
    anchor = tuple(tuple(ex.as_expr(v) for v in row) for row in anchor)
    n = len(anchor)
    m = len(anchor[0]) if n else 0
    if n == 0 or m == 0 or any(len(r) != m for r in anchor):
        raise ShapeError("anchor must be a non-empty n x m matrix")
    table: dict = {}
    for (a, b, g), e in dict(structure).items():
        if not (0 <= a < m and 0 <= b < m and 0 <= g < m):
            raise ShapeError(f"structure index {(a, b, g)} out of range for rank {m}")
        if a == b:
            continue
        e = ex.as_expr(e)
        lo, hi, sign = (a, b, 1) if a < b else (b, a, -1)
        row = list(table.get((lo, hi), (ZERO,) * m))
        row[g] = ex.simplify(row[g] + (e if sign > 0 else -e))
        table[(lo, hi)] = tuple(row)
    H = ex.as_expr(H)
    dim = n + m
    for e in [H] + [v for r in anchor for v in r] + [v for r in table.values() for v in r]:
        if ex.max_index(e) >= dim:
            raise ShapeError(f"expression uses coordinate {ex.max_index(e) + 1} > {dim}")
    box = tuple(tuple(float(v) for v in b) for b in (start_box or [(-1.0, 1.0)] * dim))
    if len(box) != dim:
        raise ShapeError(f"start_box needs {dim} intervals")
    sysm = HamiltonianSystem(n, m, anchor, table, H, box, tuple(names or _phase_names(n, m)),
                             tuple(monitors), label)
    if validate:
        pts = sysm.sample_points()
        for kind, g in ex.domain_constraints(H):
            vals = ex.evaluate_many(g, pts)
            bad = ~(vals > 0) if kind == "positive" else ~(vals != 0)
            if np.any(bad):
                raise DomainError(f"H's domain constraint {kind} fails on the start box")
    return sysm


def hamilton_vector_field(sys: HamiltonianSystem) -> tuple:
    """The n + m components of the Hamiltonian field, simplified."""
    n, m = sys.n, sys.m
    dH = [ex.diff(sys.H, k) for k in range(n + m)]
    dH_x, dH_mu = dH[:n], dH[n:]
    xdot = [ex.sum_exprs(sys.anchor[i][a] * dH_mu[a] for a in range(m)) for i in range(n)]
    mudot = []
    for a in range(m):
        terms = [-(sys.anchor[i][a] * dH_x[i]) for i in range(n)]
        for b in range(m):
            for g in range(m):
                c = sys.C(a, b, g)
                if c != ZERO:
                    terms.append(-(Var(n + g) * c * dH_mu[b]))
        mudot.append(ex.sum_exprs(terms))
    return tuple(ex.simplify(e) for e in xdot + mudot)


def harmonic_oscillator_system(n: int) -> HamiltonianSystem:
    """rho_a^i = delta (x_a^2 + mu_a^2)/2, H = prod ln(x_i^2 + mu_i^2).

    The Nijenhuis coordinates (x^k, y^k) are read as (x^k, mu_k).  The
    structure functions come from the Nijenhuis formula applied to the
    diagonal anchor, differentiating along the base coordinates only, which
    makes them vanish.  The start box keeps every pair away from the origin.
    """
    if n < 1:
        raise ShapeError("oscillator needs n >= 1")
    dim = 2 * n
    r2 = [Var(k) ** 2 + Var(n + k) ** 2 for k in range(n)]
    anchor = [[r2[i] / 2 if i == a else ZERO for a in range(n)] for i in range(n)]
    N = [[anchor[g][a] for a in range(n)] for g in range(n)]
    structure = nijenhuis_structure(N)
    H = ex.Const(1.0)
    for k in range(n):
        H = H * ex.ln(r2[k])
    H = ex.simplify(H)
    box = [(0.5, 1.5)] * n + [(0.5, 1.5)] * n
    monitors = tuple((f"r{k+1}^2", ex.simplify(r2[k])) for k in range(n))
    return make_hamiltonian_system(anchor, structure, H, box, monitors=monitors,
                                   label=f"oscillator:{n}")


@dataclass
class Trajectory:
    """Uniform RK4 samples ``times[k] = k * dt`` with monitor values per row."""

    dt: float
    times: np.ndarray
    states: np.ndarray
    monitors: dict
    names: tuple

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def to_csv(self, path_or_buf, fmt: str = "%.17g"):
        cols = ["t", *self.names, *self.monitors]
        data = np.column_stack([self.times, self.states] + [self.monitors[k] for k in self.monitors])
        own = isinstance(path_or_buf, (str, bytes)) or hasattr(path_or_buf, "__fspath__")
        fh = open(path_or_buf, "w", newline="") if own else path_or_buf
        try:
            fh.write(",".join(cols) + "\n")
            for row in data:
                fh.write(",".join(fmt % v for v in row) + "\n")
        finally:
            if own:
                fh.close()


def _monitor_values(sys, states):
    out = {}
    for name, e in sys.monitor_exprs():
        out[name] = ex.evaluate_many(e, states)
    return out


def _first_violation(exprs, states):
    """Index of the first row violating a domain constraint of ``exprs``, or None."""
    cons = {c for e in exprs for c in ex.domain_constraints(e)}
    first = None
    for kind, g in sorted(cons, key=lambda c: (c[0], ex.to_sexpr(c[1]))):
        try:
            vals = ex.evaluate_many(g, states)
        except DomainError:
            vals = np.array([_safe_eval(g, z) for z in states])
        bad = ~(vals > 0) if kind == "positive" else ~(vals != 0)
        if bad.any():
            k = int(np.argmax(bad))
            first = k if first is None else min(first, k)
    return first


def _safe_eval(e, z):
    try:
        return ex.evaluate(e, z)
    except DomainError:
        return np.nan


def integrate_rk4(sys: HamiltonianSystem, z0, dt: float, T: float, jit: bool | None = None) -> Trajectory:
    """Classical RK4 with a uniform step that lands exactly on ``T``.

    The step count is ``ceil(T / dt)`` and the step ``T / count``, so the
    effective step never exceeds ``dt``.
    """
    z0 = np.asarray(z0, dtype=float).ravel()
    if z0.shape[0] != sys.dim:
        raise ShapeError(f"z0 has {z0.shape[0]} entries, phase space has {sys.dim}")
    if not (dt > 0 and math.isfinite(dt)):
        raise ValueError("dt must be positive")
    if not (T >= 0 and math.isfinite(T)):
        raise ValueError("T must be nonnegative")
    field_ = hamilton_vector_field(sys)
    for e in field_:
        ex.evaluate(e, z0)  # raises DomainError if z0 is outside the domain
    nsteps = max(1, math.ceil(T / dt - 1e-9)) if T > 0 else 0
    h = T / nsteps if nsteps else 0.0
    states, last = rk4_loop(field_, z0, h, nsteps, jit=jit)
    k = _first_violation((sys.H,) + field_, states[: last + 1])
    if k == 0:
        raise DomainError("z0 lies outside the domain of H")
    if k is not None:
        t_last = (k - 1) * h
        raise DomainExit(f"left the domain after t={t_last:g}", t_last, states[k - 1].copy())
    if last < nsteps:
        t_last = last * h
        bad = states[last + 1]
        try:
            for e in field_:
                ex.evaluate(e, bad)
        except DomainError as err:
            raise DomainExit(f"left the domain after t={t_last:g}: {err}", t_last, states[last].copy()) from None
        raise NonFinite(f"non-finite state after t={t_last:g}", t_last, states[last].copy())
    times = np.arange(nsteps + 1) * h
    if nsteps:
        times[-1] = T
    return Trajectory(h, times, states, _monitor_values(sys, states), sys.names)


def conserved_report(sys: HamiltonianSystem, traj: Trajectory, quantities=None) -> dict:
    """max |q(z_t) - q(z_0)| per quantity; defaults to H and the fixture monitors.

    ``quantities`` may be a list of Expr or of (name, Expr) pairs.
    """
    if quantities is None:
        quantities = sys.monitor_exprs()
    out = {}
    for k, q in enumerate(quantities):
        name, e = q if isinstance(q, tuple) else (f"q{k+1}", q)
        vals = ex.evaluate_many(ex.as_expr(e), traj.states)
        out[name] = float(np.max(np.abs(vals - vals[0])))
    return out


def oscillator_monitors(n: int):
    return harmonic_oscillator_system(n).monitors


def closed_form_error(z0, traj: Trajectory) -> float:
    """Final-state error against the unit-speed rotation of each (x_a, mu_a) pair.

    Valid for n = 1 from any start, and for n > 1 when every r_a^2 = e.
    """
    z0 = np.asarray(z0, dtype=float)
    n = z0.shape[0] // 2
    t = traj.times[-1]
    c, s = math.cos(t), math.sin(t)
    x0, m0 = z0[:n], z0[n:]
    exact = np.concatenate([c * x0 + s * m0, -s * x0 + c * m0])
    return float(np.max(np.abs(traj.final - exact)))
