"""``algebroid-kit`` command line.

Exit codes: 0 all checks pass, 1 a check failed, 2 input could not be parsed,
3 a point left the domain of an expression.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

from . import expr as ex
from .algebroid import identity_suite
from .errors import DomainError, DomainExit, ParseError, ShapeError
from .fixtures import BUILTINS, resolve_algebroid, resolve_hamiltonian, resolve_tower
from .io import (
    algebroid_from_dict,
    algebroid_to_dict,
    direct_system_from_dict,
    dump_json,
    hamiltonian_from_dict,
    load_json,
)
from .limits import euler_field_family, prolong_system, verify_direct_system, verify_family
from .mechanics import closed_form_error, conserved_report, integrate_rk4
from .prolongation import Fibration, prolong
from .report import DEFAULT_SAMPLES, DEFAULT_TOL, VerificationReport

EXIT_OK, EXIT_CHECK, EXIT_PARSE, EXIT_DOMAIN = 0, 1, 2, 3


class CheckFailure(Exception):
    pass


def _is_path(spec: str) -> bool:
    return spec.endswith(".json") or Path(spec).exists()


def _load_algebroid(spec: str):
    if _is_path(spec):
        raw = load_json(spec)
        return algebroid_from_dict(raw), raw
    return resolve_algebroid(spec), {}


def _load_tower(spec: str):
    if _is_path(spec):
        return direct_system_from_dict(load_json(spec))
    return resolve_tower(spec)


def _load_hamiltonian(spec: str):
    if _is_path(spec):
        return hamiltonian_from_dict(load_json(spec))
    return resolve_hamiltonian(spec)


def _floats(text: str, what: str):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ParseError(f"{what}: expected comma-separated numbers, got {text!r}") from None


def _ints(text: str, what: str):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ParseError(f"{what}: expected comma-separated integers, got {text!r}") from None


def _emit(text: str, out: str | None, stdout):
    if out:
        Path(out).write_text(text)
    else:
        stdout.write(text)


def _report_doc(command: str, target: str, cfg, report: VerificationReport) -> str:
    doc = {
        "command": command,
        "target": target,
        "seed": cfg.seed,
        "samples": cfg.samples,
        "tol": cfg.tol,
        "pass": report.passed,
        "max_residual": float(report.max_residual),
        "results": [r.as_dict() for r in report.results],
        "notes": list(report.notes),
    }
    return dump_json(doc)


# ---------------------------------------------------------------------------
# commands


def cmd_verify(cfg, stdout) -> int:
    A, _ = _load_algebroid(cfg.input)
    report = identity_suite(A, seed=cfg.seed, n_random=cfg.forms, samples=cfg.samples, tol=cfg.tol)
    _emit(_report_doc("verify", cfg.input, cfg, report), cfg.out, stdout)
    if cfg.out:
        stdout.write(f"{len(report.results)} checks, max residual {report.max_residual:.3e}: "
                     f"{'PASS' if report.passed else 'FAIL'}\n")
    if not report.passed:
        raise CheckFailure(report.worst().site)
    return EXIT_OK


def cmd_prolong(cfg, stdout) -> int:
    A, raw = _load_algebroid(cfg.input)
    q = cfg.fiber_dim if cfg.fiber_dim is not None else raw.get("fiber_dim")
    if q is None:
        raise ParseError("prolong needs a fiber dimension: --fiber-dim or 'fiber_dim' in the input")
    if isinstance(q, bool) or not isinstance(q, int) or q < 0:
        raise ParseError("fiber_dim must be a nonnegative integer")
    box = raw.get("fiber_box")
    fib = Fibration(A.base_dim, q, tuple(tuple(b) for b in box) if box else ())
    P = prolong(A, fib)
    doc = algebroid_to_dict(P)
    doc["label"] = P.label
    _emit(dump_json(doc), cfg.out, stdout)
    return EXIT_OK


def cmd_limit_verify(cfg, stdout) -> int:
    sysm = _load_tower(cfg.input)
    report = verify_direct_system(sysm, seed=cfg.seed, samples=cfg.samples, tol=cfg.tol)
    if cfg.prolong:
        qs = _ints(cfg.prolong, "--prolong")
        pr = verify_direct_system(prolong_system(sysm, qs), seed=cfg.seed, samples=cfg.samples, tol=cfg.tol)
        for r in pr.results:
            r.check = f"prolonged:{r.check}"
        report.extend(pr)
    if cfg.family == "euler":
        report.extend(verify_family(sysm, euler_field_family(sysm), samples=cfg.samples, tol=cfg.tol))
    stdout.write(report.table() + "\n")
    stdout.write(f"overall: {'PASS' if report.passed else 'FAIL'} (max residual {report.max_residual:.3e})\n")
    if cfg.out:
        Path(cfg.out).write_text(_report_doc("limit-verify", cfg.input, cfg, report))
    if not report.passed:
        raise CheckFailure(report.worst().site)
    return EXIT_OK


def cmd_simulate(cfg, stdout) -> int:
    hs = _load_hamiltonian(cfg.system)
    z0 = _floats(cfg.z0, "--z0") if cfg.z0 else [1.0] + [0.0] * (hs.dim - 1)
    if len(z0) != hs.dim:
        raise ParseError(f"--z0 needs {hs.dim} values, got {len(z0)}")
    if not cfg.dt > 0 or not cfg.T >= 0:
        raise ParseError("--dt must be positive and --T nonnegative")
    traj = integrate_rk4(hs, z0, cfg.dt, cfg.T)
    if cfg.out:
        traj.to_csv(cfg.out)
    drift = conserved_report(hs, traj)
    summary = {
        "system": cfg.system,
        "steps": len(traj.times) - 1,
        "dt": traj.dt,
        "T": float(traj.times[-1]),
        "final": [float(v) for v in traj.final],
        "drift": drift,
    }
    if cfg.system.startswith("oscillator"):
        summary["closed_form_error"] = closed_form_error(z0, traj)
        if hs.n > 1:
            summary["note"] = "closed form assumes every x_a^2 + mu_a^2 = e"
    stdout.write(dump_json(summary))
    return EXIT_OK


def cmd_describe(cfg, stdout) -> int:
    spec = cfg.input
    lines = []
    tower = None
    if _is_path(spec):
        raw = load_json(spec)
        if isinstance(raw, dict) and "levels" in raw:
            tower = direct_system_from_dict(raw)
        elif isinstance(raw, dict) and "hamiltonian" in raw:
            hs = hamiltonian_from_dict(raw)
            lines += _describe_hamiltonian(hs)
        else:
            lines += _describe_algebroid(algebroid_from_dict(raw))
    else:
        name = spec.partition(":")[0]
        if name in BUILTINS["tower"]:
            tower = resolve_tower(spec)
        elif name in BUILTINS["hamiltonian"]:
            lines += _describe_hamiltonian(resolve_hamiltonian(spec))
        else:
            lines += _describe_algebroid(resolve_algebroid(spec))
    if tower is not None:
        lines.append(f"direct system: {len(tower)} levels, depth {tower.depth}")
        for k, A in enumerate(tower.levels, start=1):
            lines.append(f"  level {k}: base_dim {A.base_dim}, rank {A.rank}, "
                         f"{len(A.structure_entries())} nonzero structure functions")
    _emit("\n".join(lines) + "\n", cfg.out, stdout)
    return EXIT_OK


def _describe_algebroid(A):
    names = list(A.names)
    out = [f"algebroid {A.label or '(unnamed)'}: base_dim {A.base_dim}, rank {A.rank}",
           f"coordinates: {' '.join(names)}",
           "anchor rho(e_a) = rho_a^i d/dx^i:"]
    for a in range(A.rank):
        terms = [f"{ex.to_sexpr(A.anchor[i][a], names)} d/d{names[i]}"
                 for i in range(A.base_dim) if A.anchor[i][a] != ex.ZERO]
        out.append(f"  rho(e{a+1}) = " + (" + ".join(terms) if terms else "0"))
    entries = A.structure_entries()
    out.append(f"structure ({len(entries)} nonzero):")
    for a, b, g, c in entries:
        out.append(f"  C_{a+1}{b+1}^{g+1} = {ex.to_sexpr(c, names)}")
    return out


def _describe_hamiltonian(hs):
    names = list(hs.names)
    return [f"hamiltonian system {hs.label or '(unnamed)'}: n {hs.n}, m {hs.m}",
            f"phase coordinates: {' '.join(names)}",
            f"H = {ex.to_sexpr(hs.H, names)}"]


# ---------------------------------------------------------------------------
# parser


def _common(p):
    p.add_argument("--tol", type=float, default=DEFAULT_TOL, help="pass threshold on residuals")
    p.add_argument("--samples", type=int, default=DEFAULT_SAMPLES, help="sample points per check (>= 8)")
    p.add_argument("--seed", type=int, default=0, help="seed for random sections and forms")
    p.add_argument("--out", default=None, help="output file (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="algebroid-kit", description="Lie algebroids in coordinates.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="identity suite on one algebroid")
    p.add_argument("input", help="algebroid JSON or builtin (tangent:n, nijenhuis:n, poisson:k, almost-bad)")
    p.add_argument("--forms", type=int, default=10, help="random forms per degree for d^2")
    _common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("prolong", help="prolongation along a trivial fibration")
    p.add_argument("input", help="algebroid JSON (may carry fiber_dim) or builtin")
    p.add_argument("--fiber-dim", type=int, default=None)
    _common(p)
    p.set_defaults(func=cmd_prolong)

    p = sub.add_parser("limit-verify", help="verify a direct system of algebroids")
    p.add_argument("input", help="direct system JSON or builtin (tangent-tower:d, oscillator-tower:d)")
    p.add_argument("--prolong", default=None, help="comma-separated fiber dims; also verify the prolonged tower")
    p.add_argument("--family", choices=["euler"], default=None, help="also verify a compatible field family")
    _common(p)
    p.set_defaults(func=cmd_limit_verify)

    p = sub.add_parser("simulate", help="RK4 on the Hamilton equations")
    p.add_argument("--system", required=True, help="Hamiltonian JSON or oscillator:n")
    p.add_argument("--z0", default=None, help="comma-separated initial state (x..., mu...)")
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--T", type=float, default=1.0)
    _common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("describe", help="dimensions, anchor and structure summary")
    p.add_argument("input")
    _common(p)
    p.set_defaults(func=cmd_describe)
    return parser


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        cfg = parser.parse_args(argv)
    except SystemExit as err:
        return EXIT_PARSE if err.code else EXIT_OK
    if not cfg.tol > 0 or not math.isfinite(cfg.tol):
        stderr.write("error: --tol must be positive\n")
        return EXIT_PARSE
    if cfg.samples < 8:
        stderr.write("error: --samples must be at least 8\n")
        return EXIT_PARSE
    try:
        return cfg.func(cfg, stdout)
    except CheckFailure as err:
        stderr.write(f"check failed at {err}\n")
        return EXIT_CHECK
    except ParseError as err:
        stderr.write(f"parse error: {err}\n")
        return EXIT_PARSE
    except (ShapeError, ValueError) as err:
        stderr.write(f"invalid input: {err}\n")
        return EXIT_PARSE
    except (DomainError, DomainExit) as err:
        stderr.write(f"domain error: {err}\n")
        return EXIT_DOMAIN


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
