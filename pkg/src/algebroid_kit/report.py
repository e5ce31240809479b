"""Deterministic sample sets and verification reports."""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc

DEFAULT_SAMPLES = 64
DEFAULT_TOL = 1e-9


def sample_points(box, n: int = DEFAULT_SAMPLES) -> np.ndarray:
    """``n`` unscrambled Halton points inside ``box`` (list of ``[lo, hi]``).

    The first Halton point (the lower corner) is skipped so that symmetric
    boxes do not put every coordinate at zero simultaneously.
    """
    box = np.asarray(box, dtype=float)
    d = box.shape[0]
    gen = qmc.Halton(d=d, scramble=False)
    gen.fast_forward(1)
    unit = gen.random(n)
    return box[:, 0] + unit * (box[:, 1] - box[:, 0])


def worker_count() -> int:
    try:
        cap = int(os.environ.get("ALGEBROID_KIT_THREADS", "0"))
    except ValueError:
        cap = 0
    cpus = os.cpu_count() or 1
    return max(1, min(cap, cpus) if cap > 0 else cpus)


def parallel_map(fn, items):
    """Ordered map over ``items``; fans out to threads when allowed."""
    items = list(items)
    workers = min(worker_count(), len(items))
    if workers <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


@dataclass
class CheckResult:
    """One line of a report: a named check at one site."""

    check: str
    site: str
    max_residual: float
    passed: bool
    point: list | None = None
    note: str | None = None

    def as_dict(self):
        out = {
            "check": self.check,
            "site": self.site,
            "max_residual": float(self.max_residual),
            "pass": bool(self.passed),
        }
        if self.point is not None:
            out["point"] = [float(v) for v in self.point]
        if self.note:
            out["note"] = self.note
        return out


@dataclass
class VerificationReport:
    name: str
    results: list[CheckResult] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    @property
    def max_residual(self) -> float:
        return max((r.max_residual for r in self.results), default=0.0)

    def failures(self) -> list[CheckResult]:
        return [r for r in self.results if not r.passed]

    def worst(self) -> CheckResult | None:
        if not self.results:
            return None
        return max(self.results, key=lambda r: r.max_residual)

    def add(self, check, site, residuals, pts, tol=DEFAULT_TOL, note=None) -> CheckResult:
        """Record the max of ``residuals`` (shape ``(k,)`` or ``(c, k)``)."""
        res = np.abs(np.atleast_2d(np.asarray(residuals, dtype=float)))
        if res.size == 0:
            worst, where = 0.0, None
        else:
            bad = ~np.isfinite(res)
            flat = int(np.argmax(bad)) if bad.any() else int(np.argmax(res))
            c, k = np.unravel_index(flat, res.shape)
            worst = float("inf") if bad.any() else float(res[c, k])
            where = [float(v) for v in pts[k]] if pts is not None else None
        r = CheckResult(check, site, worst, bool(worst < tol), where, note)
        self.results.append(r)
        return r

    def extend(self, other: "VerificationReport"):
        self.results.extend(other.results)
        self.notes.extend(other.notes)
        return self

    def as_dict(self):
        return {
            "name": self.name,
            "pass": self.passed,
            "max_residual": float(self.max_residual),
            "results": [r.as_dict() for r in self.results],
            "notes": list(self.notes),
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True)

    def table(self) -> str:
        lines = [f"{'check':<28} {'site':<36} {'max_residual':>13}  verdict"]
        for r in self.results:
            verdict = "PASS" if r.passed else "FAIL"
            lines.append(f"{r.check:<28} {r.site:<36} {r.max_residual:13.3e}  {verdict}")
        return "\n".join(lines)
