"""Quadrature on spheres and on intervals.

Sphere rules integrate against (unnormalised) surface measure on
``S^{m-1}``:

* ``m = 1``: the two points ``+1`` and ``-1`` with unit weights (exact);
* ``m = 2``: the periodic trapezoid rule, spectrally accurate for smooth
  integrands;
* ``m = 3``: Gauss-Legendre in ``cos(theta)`` times trapezoid in azimuth;
* ``m >= 4``: Monte Carlo with normalised Gaussian samples drawn from a
  counter-based Philox stream, in antithetic pairs ``(omega, -omega)``.

One-dimensional integrals are delegated to QUADPACK through
:func:`scipy.integrate.quad`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from .errors import ContractViolation, ConvergenceError

DEFAULT_CIRCLE_NODES = 512
DEFAULT_PRODUCT_NODES = (64, 128)
DEFAULT_MC_NODES = 200_000

KINDS = ("two-point", "uniform-circle", "product-rule", "monte-carlo")


@dataclass(frozen=True)
class SphereRule:
    ambient_dim: int
    nodes: np.ndarray
    weights: np.ndarray
    kind: str
    seed: Optional[int] = None
    antithetic: bool = False

    @property
    def size(self) -> int:
        return self.nodes.shape[0]


@dataclass(frozen=True)
class IntegralEstimate:
    value: float
    error_estimate: float
    nodes_used: int


def sphere_area(m: int) -> float:
    """Surface area of the unit sphere ``S^{m-1}`` in ``R^m``."""
    return 2.0 * math.pi ** (m / 2) / math.gamma(m / 2)


def two_point_rule() -> SphereRule:
    return SphereRule(1, np.array([[1.0], [-1.0]]), np.ones(2), "two-point")


def circle_rule(N: int = DEFAULT_CIRCLE_NODES) -> SphereRule:
    """``N`` equispaced points on the unit circle with weights ``2*pi/N``."""
    if N < 4:
        raise ContractViolation("circle rule needs at least 4 nodes")
    theta = 2.0 * np.pi * np.arange(N) / N
    nodes = np.column_stack([np.cos(theta), np.sin(theta)])
    return SphereRule(2, nodes, np.full(N, 2.0 * np.pi / N), "uniform-circle")


def product_rule(n_polar: int = DEFAULT_PRODUCT_NODES[0],
                 n_azimuth: int = DEFAULT_PRODUCT_NODES[1]) -> SphereRule:
    """Gauss-Legendre in ``z = cos(theta)`` times the trapezoid rule in azimuth on ``S^2``."""
    z, wz = np.polynomial.legendre.leggauss(n_polar)
    phi = 2.0 * np.pi * np.arange(n_azimuth) / n_azimuth
    Z, P = np.meshgrid(z, phi, indexing="ij")
    r = np.sqrt(1.0 - Z * Z)
    nodes = np.column_stack([(r * np.cos(P)).ravel(), (r * np.sin(P)).ravel(), Z.ravel()])
    weights = np.repeat(wz, n_azimuth) * (2.0 * np.pi / n_azimuth)
    return SphereRule(3, nodes, weights, "product-rule")


def philox(seed: int, stream: int = 0) -> np.random.Generator:
    """Counter-based generator keyed by ``(seed, stream)``."""
    key = np.array([int(seed) & 0xFFFFFFFFFFFFFFFF, int(stream)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def sphere_mc_rule(m: int, N: int = DEFAULT_MC_NODES, seed: int = 0,
                   antithetic: bool = True) -> SphereRule:
    """Monte Carlo nodes on ``S^{m-1}`` with equal weights ``area/N``.

    With ``antithetic`` the nodes come in consecutive pairs ``(omega, -omega)``
    and ``N`` is rounded up to an even number.
    """
    if m < 3:
        raise ContractViolation("Monte Carlo sphere rules are for m >= 3")
    rng = philox(seed)
    if antithetic:
        half = (N + 1) // 2
        g = rng.standard_normal((half, m))
        g = np.stack([g, -g], axis=1).reshape(2 * half, m)
    else:
        g = rng.standard_normal((N, m))
    nodes = g / np.linalg.norm(g, axis=1, keepdims=True)
    size = nodes.shape[0]
    return SphereRule(m, nodes, np.full(size, sphere_area(m) / size), "monte-carlo",
                      seed=int(seed), antithetic=antithetic)


def default_rule(m: int, nodes: Optional[int] = None, seed: int = 0) -> SphereRule:
    """The rule used for ``S^{m-1}`` unless the caller asks otherwise.

    ``nodes`` means: circle points (m=2), azimuthal points with half as many
    polar points (m=3), samples (m>=4); it is ignored for m=1.
    """
    if m == 1:
        return two_point_rule()
    if m == 2:
        return circle_rule(nodes or DEFAULT_CIRCLE_NODES)
    if m == 3:
        if nodes is None:
            return product_rule()
        return product_rule(max(nodes // 2, 2), nodes)
    return sphere_mc_rule(m, nodes or DEFAULT_MC_NODES, seed)


def _coarse_product(rule: SphereRule) -> SphereRule:
    n_pol = np.unique(rule.nodes[:, 2]).size
    n_az = rule.size // n_pol
    return product_rule(max(n_pol // 2, 2), max(n_az // 2, 4))


def integrate_sphere(rule: SphereRule, f: Callable[[np.ndarray], np.ndarray]) -> IntegralEstimate:
    """Integrate ``f`` (vectorised over nodes of shape ``(N, m)``) with ``rule``.

    Error estimates: zero for the exact two-point rule; the change from the
    half-resolution rule for the deterministic rules; the standard error of
    the mean for Monte Carlo.
    """
    vals = np.asarray(f(rule.nodes), dtype=float)
    contrib = rule.weights * vals
    value = float(np.sum(contrib))
    N = rule.size
    if rule.kind == "two-point":
        err = 0.0
    elif rule.kind == "uniform-circle":
        coarse = 2.0 * float(np.sum(contrib[::2])) if N % 2 == 0 else float(
            np.sum(circle_rule(N // 2).weights * f(circle_rule(N // 2).nodes)))
        err = abs(value - coarse)
    elif rule.kind == "product-rule":
        c = _coarse_product(rule)
        err = abs(value - float(np.sum(c.weights * np.asarray(f(c.nodes), dtype=float))))
    else:
        samples = vals * sphere_area(rule.ambient_dim)
        if rule.antithetic:
            samples = 0.5 * (samples[0::2] + samples[1::2])
        err = float(np.std(samples, ddof=1) / math.sqrt(samples.size))
    return IntegralEstimate(value, err, N)


def _quad(f, a, b, tol, limit):
    out = integrate.quad(f, a, b, epsabs=0.0, epsrel=tol, limit=limit, full_output=1)
    value, err, info = out[:3]
    # a fourth entry (the diagnostic message) appears only when QUADPACK gave up
    if len(out) > 3:
        raise ConvergenceError(f"adaptive quadrature failed: {out[3].splitlines()[0]}",
                               best=float(value))
    return IntegralEstimate(float(value), float(err), int(info["neval"]))


def adaptive_1d(f, a: float, b: float, tol: float = 1e-12, limit: int = 500) -> IntegralEstimate:
    """Adaptive Gauss-Kronrod on ``[a, b]`` to relative tolerance ``tol``."""
    return _quad(f, a, b, tol, limit)


def semi_infinite_1d(f, a: float, tol: float = 1e-12, limit: int = 500) -> IntegralEstimate:
    """Integral over ``[a, inf)``; QUADPACK maps it to ``(0, 1]`` by ``x = a + (1-t)/t``."""
    return _quad(f, a, np.inf, tol, limit)


def gauss_panels(a: float, b: float, panels: int, order: int):
    """Composite Gauss-Legendre nodes and weights on ``[a, b]``."""
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights
