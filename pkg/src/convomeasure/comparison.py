"""Pointwise comparison of perturbed and unperturbed convolution densities.

For a nonnegative strictly convex perturbation the n-fold density satisfies

    nu^{*n}(xi, tau) < nu_0^{*n}(xi, tau - n*phi(xi/n))

at every interior point.  This module evaluates both sides, with error bars,
over grids of ``(xi, tau)``.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ._parallel import ordered_map
from .density import Regime, density, paraboloid_closed_form, support_classify
from .errors import ContractViolation
from .quadrature import SphereRule
from .surfaces import SurfaceSpec, as_point, check_order

# roundoff allowance added to the error bars when judging strictness
ROUNDOFF = 1e-13


@dataclass(frozen=True)
class ComparisonRow:
    xi: tuple
    tau: float
    lhs: float
    lhs_err: float
    rhs: float
    rhs_err: float
    margin: float
    strict: bool

    @property
    def violation(self) -> bool:
        return self.margin < -(self.lhs_err + self.rhs_err)


@dataclass
class ComparisonReport:
    rows: list = field(default_factory=list)

    @property
    def violations(self) -> int:
        return int(sum(r.violation for r in self.rows))

    @property
    def min_margin(self) -> float:
        return min((r.margin for r in self.rows), default=math.inf)

    @property
    def all_strict(self) -> bool:
        return all(r.strict for r in self.rows)

    @property
    def summary(self) -> dict:
        return {"rows": len(self.rows), "min_margin": self.min_margin,
                "violations": self.violations, "all_strict": self.all_strict}

    @property
    def exit_status(self) -> int:
        return 1 if self.violations else 0

    def to_csv(self, stream=None) -> str:
        buf = io.StringIO()
        out = csv.writer(buf, lineterminator="\n")
        d = len(self.rows[0].xi) if self.rows else 1
        xi_cols = ["xi"] if d == 1 else [f"xi{k + 1}" for k in range(d)]
        out.writerow(xi_cols + ["tau", "lhs", "lhs_err", "rhs", "margin", "strict"])
        for r in self.rows:
            nums = list(r.xi) + [r.tau, r.lhs, r.lhs_err, r.rhs, r.margin]
            out.writerow([f"{v:.16e}" for v in nums] + [str(r.strict).lower()])
        text = buf.getvalue()
        if stream is not None:
            stream.write(text)
        return text


def compare_point(surface: SurfaceSpec, n: int, xi, tau: float,
                  rule: Optional[SphereRule] = None) -> ComparisonRow:
    """Both sides of the comparison at an interior ``(xi, tau)``.

    ``rhs`` is the closed-form unperturbed density at the shifted height
    ``tau - n*phi(xi/n)``; ``strict`` means the margin exceeds the combined
    error bar.
    """
    n = check_order(n)
    d = surface.dim
    xi = as_point(xi, d)
    if support_classify(surface, n, xi, tau) is not Regime.INTERIOR:
        raise ContractViolation(f"({xi.tolist()}, {tau}) is not interior to the support")
    lhs = density(surface, n, xi, tau, rule=rule)
    shifted = tau - n * float(surface.phi(xi / n))
    rhs = paraboloid_closed_form(d, n, xi, shifted)
    rhs_err = 4.0 * float(np.finfo(float).eps) * abs(rhs)
    margin = rhs - lhs.value
    strict = margin > lhs.error_estimate + rhs_err + ROUNDOFF * (1.0 + abs(rhs))
    return ComparisonRow(tuple(float(v) for v in xi), float(tau), lhs.value,
                         lhs.error_estimate, rhs, rhs_err, margin, bool(strict))


def shift_consistency(surface: SurfaceSpec, n: int, xi, tau: float,
                      rule: Optional[SphereRule] = None) -> tuple:
    """The shifted right-hand side two ways: closed form, and quadrature on the paraboloid.

    Returns ``(closed_form, quadrature, quadrature_error)``.
    """
    n = check_order(n)
    xi = as_point(xi, surface.dim)
    shifted = tau - n * float(surface.phi(xi / n))
    flat = SurfaceSpec.unperturbed(surface.dim)
    numeric = density(flat, n, xi, shifted, rule=rule)
    return paraboloid_closed_form(surface.dim, n, xi, shifted), numeric.value, numeric.error_estimate


def support_inclusion_check(surface: SurfaceSpec, n: int, grid) -> bool:
    """Every grid point inside the perturbed support is inside the unperturbed one.

    ``grid`` is an iterable of ``(xi, tau)`` pairs.
    """
    n = check_order(n)
    d = surface.dim
    for xi, tau in grid:
        xi = as_point(xi, d)
        if tau >= n * float(surface.psi(xi / n)) and tau < float(xi @ xi) / n:
            return False
    return True


def xi_points(xi_grid: Sequence[float], d: int) -> list:
    """Per-coordinate tensor grid of base points."""
    values = [float(v) for v in xi_grid]
    return [np.array(p) for p in itertools.product(values, repeat=d)]


def comparison_sweep(surface: SurfaceSpec, n: int, xi_grid: Sequence[float],
                     tau_offsets: Sequence[float], rule: Optional[SphereRule] = None,
                     workers: Optional[int] = None) -> ComparisonReport:
    """Compare at ``tau = n*psi(xi/n) + offset`` for every grid point and offset.

    Rows come back in grid order (xi outer, offset inner) regardless of how
    many workers ran them.
    """
    n = check_order(n)
    if any(not o > 0 for o in tau_offsets):
        raise ContractViolation("tau offsets must be positive")
    tasks = []
    for xi in xi_points(xi_grid, surface.dim):
        floor = n * float(surface.psi(xi / n))
        tasks.extend((xi, floor + float(o)) for o in tau_offsets)
    rows = ordered_map(lambda t: compare_point(surface, n, t[0], t[1], rule), tasks, workers)
    return ComparisonReport(rows)
