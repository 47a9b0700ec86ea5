"""Densities of n-fold convolutions of projection measure.

Inside the support ``tau > n*psi(xi/n)`` the density is an integral over the
unit sphere of ``R^{d(n-1)}``::

    alpha**(m-2) * W(xi; alpha*omega) / D(alpha, omega),
    D(alpha, omega) = g_n'(alpha, omega) / alpha,

where ``m = d*(n-1)`` and ``alpha = alpha(xi, tau, omega)`` solves
``g_n(alpha, omega) = tau - n*psi(xi/n)``.  ``W`` is the product weight (one
for the unweighted density).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import partial
from typing import Optional

import numpy as np

from .errors import ContractViolation, OutsideSupportError
from .implicit_maps import alpha_batch, solve_lambda_self
from .quadrature import SphereRule, default_rule, integrate_sphere
from .surfaces import (
    SurfaceSpec,
    WeightSpec,
    as_point,
    check_order,
    g_and_slope,
    hessian_at,
    weight_values,
)


class Regime(str, Enum):
    INTERIOR = "interior"
    BOUNDARY = "boundary"
    OUTSIDE = "outside-support"


@dataclass(frozen=True)
class DensityQuery:
    surface: SurfaceSpec
    n: int
    xi: object
    tau: float
    weight: Optional[WeightSpec] = None
    rule: Optional[SphereRule] = None

    def __post_init__(self):
        n = check_order(self.n)
        m = self.surface.dim * (n - 1)
        if self.rule is not None and self.rule.ambient_dim != m:
            raise ContractViolation(
                f"rule lives on S^{self.rule.ambient_dim - 1}, need S^{m - 1}")


@dataclass(frozen=True)
class DensityResult:
    value: float
    error_estimate: float
    regime: Regime
    nodes_used: int = 0


def boundary_eps(xi, tau) -> float:
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    return 1e-10 * (1.0 + float(xi @ xi) + abs(float(tau)))


def support_classify(surface: SurfaceSpec, n: int, xi, tau: float) -> Regime:
    n = check_order(n)
    xi = as_point(xi, surface.dim)
    c = tau - n * float(surface.psi(xi / n))
    if abs(c) <= boundary_eps(xi, tau):
        return Regime.BOUNDARY
    return Regime.OUTSIDE if c < 0 else Regime.INTERIOR


def alpha_floor(xi) -> float:
    """Below this ``alpha`` the difference quotient is replaced by its limit."""
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    return 1e-6 * (1.0 + float(np.linalg.norm(xi)))


def density_integrand(surface: SurfaceSpec, n: int, xi, level, nodes: np.ndarray,
                      weight: Optional[WeightSpec] = None) -> np.ndarray:
    """Sphere integrand at ``nodes`` (shape ``(N, d*(n-1))``) for levels ``c > 0``.

    A scalar ``level`` gives shape ``(N,)``; a 1-D array of ``K`` levels gives
    ``(K, N)``.
    """
    d = surface.dim
    xi = as_point(xi, d)
    base = xi / n
    m = d * (n - 1)
    level = np.asarray(level, dtype=float)
    Om = nodes.reshape(-1, n - 1, d)
    if level.ndim:
        Om = np.broadcast_to(Om, level.shape + Om.shape)
        level = level[..., None]
    a = alpha_batch(surface, base, level, Om)

    a_min = alpha_floor(xi)
    small = a < a_min
    a_eval = np.where(small, a_min, a)
    _, slope = g_and_slope(surface, base, a_eval, Om)
    quotient = slope / a_eval
    if np.any(small) and surface.has_hessian:
        H = hessian_at(surface, base)
        total = Om.sum(axis=-2)
        limit = (np.einsum("...i,ij,...j->...", total, H, total)
                 + np.einsum("...ki,ij,...kj->...", Om, H, Om))
        quotient = np.where(small, limit, quotient)

    vals = a ** (m - 2) / quotient
    if weight is not None:
        vals = vals * weight_values(weight, base, a[..., None, None] * Om)
    return vals


def nfold_density(q: DensityQuery) -> DensityResult:
    """Evaluate the (weighted) n-fold convolution density at ``(xi, tau)``."""
    surface, n = q.surface, check_order(q.n)
    d = surface.dim
    xi = as_point(q.xi, d)
    regime = support_classify(surface, n, xi, q.tau)
    if regime is Regime.OUTSIDE:
        return DensityResult(0.0, 0.0, regime)
    if regime is Regime.BOUNDARY:
        value = boundary_value(surface, n, xi, q.weight)
        if callable(value):
            value = math.inf
        return DensityResult(float(value), 0.0, regime)

    rule = q.rule if q.rule is not None else default_rule(d * (n - 1))
    c = q.tau - n * float(surface.psi(xi / n))
    est = integrate_sphere(rule, lambda nodes: density_integrand(surface, n, xi, c, nodes,
                                                                 q.weight))
    return DensityResult(est.value, est.error_estimate, regime, est.nodes_used)


def density(surface: SurfaceSpec, n: int, xi, tau: float, weight: Optional[WeightSpec] = None,
            rule: Optional[SphereRule] = None) -> DensityResult:
    """Shorthand for ``nfold_density(DensityQuery(...))``."""
    return nfold_density(DensityQuery(surface, n, xi, tau, weight, rule))


def closed_form_constant(d: int, n: int) -> float:
    """``pi**(d(n-1)/2) / (n**(d/2) * Gamma(d(n-1)/2))``."""
    half_m = d * (n - 1) / 2
    return math.pi ** half_m / (n ** (d / 2) * math.gamma(half_m))


def paraboloid_closed_form(d: int, n: int, xi, tau: float) -> float:
    """Exact density of the n-fold convolution on the unperturbed paraboloid."""
    n = check_order(n)
    xi = as_point(xi, d)
    gap = tau - float(xi @ xi) / n
    power = d * (n - 1) / 2 - 1
    const = closed_form_constant(d, n)
    if gap > 0:
        return const * gap ** power
    if gap < 0:
        return 0.0
    return const if power == 0 else (0.0 if power > 0 else math.inf)


def boundary_value(surface: SurfaceSpec, n: int, xi, weight: Optional[WeightSpec] = None):
    """Continuous extension of the density to ``(xi, n*psi(xi/n))``.

    For ``(d, n) = (1, 2)`` the density blows up at the boundary; a callable
    ``tau -> asymptotic_d1n2(surface, xi, tau)`` is returned instead.
    """
    n = check_order(n)
    d = surface.dim
    xi = as_point(xi, d)
    base = xi / n
    w = 1.0 if weight is None else float(weight.value(base))
    if (d, n) == (1, 2):
        return partial(asymptotic_d1n2, surface, xi, weight=weight)
    if (d, n) == (1, 3):
        curvature = float(hessian_at(surface, base)[0, 0])
        return 2.0 * math.pi * w ** 3 / (math.sqrt(3.0) * curvature)
    if (d, n) == (2, 2):
        det = float(np.linalg.det(hessian_at(surface, base)))
        return math.pi * w ** 2 / math.sqrt(det)
    return 0.0


def asymptotic_d1n2(surface: SurfaceSpec, xi, tau: float,
                    weight: Optional[WeightSpec] = None) -> float:
    """Comparator whose ratio to the d=1, n=2 density tends to 1 at the boundary."""
    if surface.dim != 1:
        raise ContractViolation("the asymptotic comparator is for d = 1, n = 2")
    xi = as_point(xi, 1)
    base = xi / 2
    c = tau - 2.0 * float(surface.psi(base))
    if c <= 0:
        raise OutsideSupportError("asymptotic comparator needs an interior point")
    root = math.sqrt(c)
    lam = solve_lambda_self(surface, 2, xi, [root]).lam
    curvature = float(hessian_at(surface, base)[0, 0])
    w = 1.0 if weight is None else float(weight.value(base))
    return w ** 2 / (curvature * root * lam)
