"""Compiled right-hand sides and the fixed-step RK4 loop.

The vector field is emitted as Python source from its Expr components and
executed once per system.  With ``ALGEBROID_KIT_JIT=1`` (default when numba
imports) both the field and the loop go through ``numba.njit``; with
``ALGEBROID_KIT_JIT=0`` the same source runs as plain Python over numpy
scalars.  Results agree to the last bit for the operations used here
(+, -, *, /, integer powers, log).
"""

from __future__ import annotations

import os

import numpy as np

from . import expr as ex

try:  # numba is optional at runtime
    import numba
except ImportError:  # pragma: no cover
    numba = None

__all__ = ["jit_enabled", "compile_field", "rk4_loop"]


def jit_enabled() -> bool:
    flag = os.environ.get("ALGEBROID_KIT_JIT", "1").strip().lower()
    return numba is not None and flag not in ("0", "false", "no", "off")


_LOOP_SRC = """
def rk4_loop(z0, h, nsteps, out):
    d = z0.shape[0]
    k1 = np.empty(d)
    k2 = np.empty(d)
    k3 = np.empty(d)
    k4 = np.empty(d)
    tmp = np.empty(d)
    for j in range(d):
        out[0, j] = z0[j]
    for s in range(nsteps):
        z = out[s]
        rhs(z, k1)
        for j in range(d):
            tmp[j] = z[j] + 0.5 * h * k1[j]
        rhs(tmp, k2)
        for j in range(d):
            tmp[j] = z[j] + 0.5 * h * k2[j]
        rhs(tmp, k3)
        for j in range(d):
            tmp[j] = z[j] + h * k3[j]
        rhs(tmp, k4)
        ok = True
        for j in range(d):
            v = z[j] + h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])
            out[s + 1, j] = v
            if not np.isfinite(v):
                ok = False
        if not ok:
            return s
    return nsteps
"""


def _field_source(components) -> str:
    lines = ["def rhs(z, out):"]
    for k, e in enumerate(components):
        lines.append(f"    out[{k}] = {ex.to_source(e, 'z')}")
    if not components:
        lines.append("    pass")
    return "\n".join(lines) + "\n"


_CACHE: dict = {}


def compile_field(components, jit: bool | None = None):
    """Return ``(rhs, loop)`` for the given Expr components.

    ``rhs(z, out)`` fills ``out`` with the field at ``z``; ``loop`` is the RK4
    driver bound to it.  Cached on (components, jit).
    """
    if jit is None:
        jit = jit_enabled()
    components = tuple(components)
    key = (components, bool(jit))
    hit = _CACHE.get(key)
    if hit is not None:
        return hit
    ns = {"np": np}
    exec(compile(_field_source(components), "<algebroid_kit.rhs>", "exec"), ns)
    exec(compile(_LOOP_SRC, "<algebroid_kit.rk4>", "exec"), ns)
    if jit:
        ns["rhs"] = numba.njit(error_model="numpy", cache=False)(ns["rhs"])
        ns["rk4_loop"] = numba.njit(error_model="numpy", cache=False)(ns["rk4_loop"])
    pair = (ns["rhs"], ns["rk4_loop"])
    _CACHE[key] = pair
    return pair


def rk4_loop(components, z0, h: float, nsteps: int, jit: bool | None = None):
    """Run ``nsteps`` RK4 steps; returns (states, last_valid_index).

    ``states`` has ``nsteps + 1`` rows.  When a step produces inf/nan the loop
    stops and the returned index points at the last finite row.
    """
    if jit is None:
        jit = jit_enabled()
    _, loop = compile_field(components, jit)
    z0 = np.ascontiguousarray(z0, dtype=float)
    out = np.full((nsteps + 1, z0.shape[0]), np.nan)
    if jit:
        last = loop(z0, float(h), int(nsteps), out)
    else:
        with np.errstate(all="ignore"):
            last = loop(z0, float(h), int(nsteps), out)
    return out, int(last)
