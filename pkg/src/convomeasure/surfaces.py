"""Perturbed paraboloids and the scalar profiles built on them.

A surface is the graph of ``psi(y) = |y|**2 + phi(y)`` over ``R^d``, carrying
projection measure.  All callables in this module follow one array
convention: points live on the trailing axis, so ``value`` maps an array of
shape ``(..., d)`` to shape ``(...)``, ``gradient`` to ``(..., d)`` and
``hessian`` to ``(..., d, d)``.

Configurations ``y = (y_1, ..., y_{n-1})`` are passed to the public functions
as flat vectors of length ``d*(n-1)`` and handled internally as arrays of
shape ``(..., n-1, d)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

import numpy as np

from .errors import ContractViolation

ArrayFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class PerturbationSpec:
    """The convex perturbation ``phi`` added to ``|y|**2``.

    ``strictly_convex`` is declared by the caller; :meth:`validate` only
    spot-checks it (together with nonnegativity and the derivatives) on
    random samples.
    """

    dim: int
    value: ArrayFn
    gradient: ArrayFn
    hessian: Optional[ArrayFn] = None
    strictly_convex: bool = True
    name: str = "custom"
    params: tuple = ()

    def __post_init__(self):
        if int(self.dim) < 1:
            raise ContractViolation(f"dimension must be positive, got {self.dim}")

    def validate(self, samples: int = 64, seed: int = 0, radius: float = 2.0) -> None:
        """Spot-check the hypotheses on random points; raise ``ValueError``."""
        rng = np.random.default_rng(seed)
        d = self.dim
        pts = rng.uniform(-radius, radius, size=(samples, d))

        vals = np.asarray(self.value(pts), dtype=float)
        if np.any(vals < 0):
            raise ValueError(f"{self.name}: negative value at a sampled point")

        h = 1e-5
        eye = np.eye(d)
        fd = np.stack(
            [(self.value(pts + h * eye[k]) - self.value(pts - h * eye[k])) / (2 * h)
             for k in range(d)], axis=-1)
        grad = np.asarray(self.gradient(pts), dtype=float)
        scale = 1.0 + np.abs(grad)
        if np.any(np.abs(fd - grad) > 1e-6 * scale):
            raise ValueError(f"{self.name}: gradient disagrees with finite differences")

        if self.hessian is not None:
            fdh = np.stack(
                [(self.gradient(pts + h * eye[k]) - self.gradient(pts - h * eye[k])) / (2 * h)
                 for k in range(d)], axis=-1)
            hess = np.asarray(self.hessian(pts), dtype=float)
            if np.any(np.abs(fdh - hess) > 1e-5 * (1.0 + np.abs(hess))):
                raise ValueError(f"{self.name}: Hessian disagrees with finite differences")

        a = rng.uniform(-radius, radius, size=(samples, d))
        b = rng.uniform(-radius, radius, size=(samples, d))
        mid = self.value(0.5 * (a + b))
        chord = 0.5 * (self.value(a) + self.value(b))
        slack = 1e-12 * (1.0 + np.abs(chord))
        if np.any(mid > chord + slack):
            raise ValueError(f"{self.name}: midpoint convexity fails")
        if self.strictly_convex and np.any(mid >= chord):
            raise ValueError(f"{self.name}: declared strictly convex but a chord is flat")


@dataclass(frozen=True)
class SurfaceSpec:
    """The graph of ``psi = |.|**2 + phi`` in ``R^{d+1}``."""

    perturbation: PerturbationSpec

    @classmethod
    def unperturbed(cls, dim: int) -> "SurfaceSpec":
        return cls(zero_perturbation(dim))

    @property
    def dim(self) -> int:
        return self.perturbation.dim

    @property
    def name(self) -> str:
        return self.perturbation.name

    @property
    def is_unperturbed(self) -> bool:
        return self.perturbation.name == "zero"

    @property
    def has_hessian(self) -> bool:
        return self.perturbation.hessian is not None

    def phi(self, y):
        return self.perturbation.value(np.asarray(y, dtype=float))

    def psi(self, y):
        y = np.asarray(y, dtype=float)
        return np.sum(y * y, axis=-1) + self.perturbation.value(y)

    def grad_psi(self, y):
        y = np.asarray(y, dtype=float)
        return 2.0 * y + self.perturbation.gradient(y)

    def hess_psi(self, y):
        if self.perturbation.hessian is None:
            raise ContractViolation(f"perturbation {self.name!r} has no Hessian")
        y = np.asarray(y, dtype=float)
        return 2.0 * np.eye(self.dim) + self.perturbation.hessian(y)


def hessian_at(surface: SurfaceSpec, x, step: Optional[float] = None) -> np.ndarray:
    """Hessian of ``psi`` at a single point ``x``.

    Uses the analytic Hessian when the perturbation supplies one, otherwise
    central differences of the gradient with step ``1e-5*(1+|x|)``.
    """
    x = np.asarray(x, dtype=float).reshape(surface.dim)
    if surface.has_hessian:
        return np.asarray(surface.hess_psi(x), dtype=float)
    if step is None:
        step = 1e-5 * (1.0 + np.linalg.norm(x))
    eye = np.eye(surface.dim)
    cols = [(surface.grad_psi(x + step * e) - surface.grad_psi(x - step * e)) / (2 * step)
            for e in eye]
    hess = np.stack(cols, axis=-1)
    return 0.5 * (hess + hess.T)


@dataclass(frozen=True)
class WeightSpec:
    """A continuous weight ``w`` on ``R^d`` for weighted convolutions."""

    value: ArrayFn
    support_radius: Optional[float] = None
    name: str = "custom"


class ProfilePoint(NamedTuple):
    """``g_n`` (perturbed) and ``h_n`` (unperturbed) and their t-derivatives."""

    g: float
    dg: float
    h: float
    dh: float


# --- configuration helpers -------------------------------------------------

def as_blocks(y, n: int, d: int) -> np.ndarray:
    """Reshape a flat configuration (or a stack of them) to ``(..., n-1, d)``."""
    y = np.asarray(y, dtype=float)
    m = d * (n - 1)
    if y.ndim == 0 or y.shape[-1] != m:
        raise ContractViolation(
            f"configuration must have trailing length d*(n-1) = {m}, got shape {y.shape}")
    return y.reshape(y.shape[:-1] + (n - 1, d))


def check_order(n: int) -> int:
    if int(n) != n or n < 2:
        raise ContractViolation(f"convolution order must be an integer >= 2, got {n}")
    return int(n)


def as_point(xi, d: int) -> np.ndarray:
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    if xi.shape != (d,):
        raise ContractViolation(f"xi must have {d} components, got shape {xi.shape}")
    return xi


def quadratic_level(Y: np.ndarray) -> np.ndarray:
    """``|sum_i y_i|**2 + sum_i |y_i|**2``, i.e. ``h_n(1, y)`` for ``|.|**2``."""
    total = Y.sum(axis=-2)
    return np.sum(total * total, axis=-1) + np.sum(Y * Y, axis=(-2, -1))


# below this step the perturbation's second difference is formed from gradients
SMALL_STEP = 1e-2
_GL_S, _GL_W = np.polynomial.legendre.leggauss(8)
_GL_S, _GL_W = 0.5 * (_GL_S + 1.0), 0.5 * _GL_W


def _bregman_sum(pert: PerturbationSpec, base: np.ndarray, steps: np.ndarray) -> np.ndarray:
    """``sum_k phi(base + D_k) - phi(base) - <grad phi(base), D_k>`` for steps of shape (..., K, d).

    Written as ``int_0^1 <grad phi(base + s D) - grad phi(base), D> ds`` so that
    tiny steps lose only first-difference accuracy.
    """
    g0 = pert.gradient(base)
    total = np.zeros(steps.shape[:-2])
    for s, w in zip(_GL_S, _GL_W):
        total += w * np.sum((pert.gradient(base + s * steps) - g0) * steps, axis=(-2, -1))
    return total


def g_and_slope(surface: SurfaceSpec, base: np.ndarray, t, Y: np.ndarray):
    """Vectorised ``g_n(t, y)`` and ``g_n'(t, y)``.

    ``base`` is ``xi/n``; ``t`` broadcasts against ``Y.shape[:-2]``.  The
    quadratic part of ``psi`` contributes ``t**2 * h_n(1, y)`` exactly, so only
    the perturbation is differenced (this keeps large ``|xi|`` from cancelling
    away the significant digits).  The steps ``-t*y_i`` and ``t*sum(y)`` add
    to zero, so the perturbation part is a sum of Bregman divergences; for
    small steps it is integrated from gradients instead of differenced.
    """
    n = Y.shape[-2] + 1
    t = np.asarray(t, dtype=float)
    tb = t[..., None, None]
    minus = base - tb * Y
    plus = base + tb[..., 0, :] * Y.sum(axis=-2)
    q = quadratic_level(Y)
    pert = surface.perturbation
    g = (t * t * q + pert.value(minus).sum(axis=-1) + pert.value(plus)
         - n * pert.value(base))
    steps = np.concatenate([minus, plus[..., None, :]], axis=-2) - base
    small = np.max(np.abs(steps), axis=(-2, -1)) <= SMALL_STEP
    if np.any(small):
        g = np.array(g, dtype=float)
        g_small = t * t * q + _bregman_sum(pert, base, steps)
        g = np.where(small, g_small, g)
    grad_gap = pert.gradient(plus)[..., None, :] - pert.gradient(minus)
    dg = 2.0 * t * q + np.sum(grad_gap * Y, axis=(-2, -1))
    return g, dg


# --- public operations -----------------------------------------------------

def profile(surface: SurfaceSpec, n: int, xi, t: float, y) -> ProfilePoint:
    """Evaluate ``g_n(t, y)``, ``h_n(t, y)`` and their derivatives in ``t``.

    Examples
    --------
    >>> s = SurfaceSpec.unperturbed(1)
    >>> profile(s, 2, 0.0, 1.0, [1.0]).g
    2.0
    """
    n = check_order(n)
    d = surface.dim
    base = as_point(xi, d) / n
    Y = as_blocks(y, n, d)
    if Y.ndim != 2:
        raise ContractViolation("profile takes a single configuration")
    g, dg = g_and_slope(surface, base, t, Y)
    q = quadratic_level(Y)
    return ProfilePoint(float(g), float(dg), float(t * t * q), float(2.0 * t * q))


def weight_values(weight: WeightSpec, base: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Vectorised product weight ``W(xi; y_1, ..., y_{n-1})``."""
    plus = base + Y.sum(axis=-2)
    minus = base - Y
    return weight.value(plus) * np.prod(weight.value(minus), axis=-1)


def weight_product(weight: WeightSpec, n: int, xi, y) -> float:
    """``w(xi/n + sum y_i) * prod_i w(xi/n - y_i)``."""
    n = check_order(n)
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    d = xi.shape[0]
    Y = as_blocks(y, n, d)
    return float(weight_values(weight, xi / n, Y))


# --- catalogue -------------------------------------------------------------

def zero_perturbation(dim: int) -> PerturbationSpec:
    return PerturbationSpec(
        dim=dim,
        value=lambda y: np.zeros(np.shape(y)[:-1]),
        gradient=lambda y: np.zeros(np.shape(y)),
        hessian=lambda y: np.zeros(np.shape(y) + (np.shape(y)[-1],)),
        strictly_convex=False,
        name="zero",
    )


def quartic(dim: int, coefficient: float = 1.0) -> PerturbationSpec:
    """``phi(y) = k * sum_j y_j**4``; flat curvature at the origin."""
    k = float(coefficient)
    if k <= 0:
        raise ContractViolation("quartic coefficient must be positive")

    def hessian(y):
        y = np.asarray(y, dtype=float)
        return 12.0 * k * (y * y)[..., None] * np.eye(y.shape[-1])

    return PerturbationSpec(
        dim=dim,
        value=lambda y: k * np.sum(np.asarray(y) ** 4, axis=-1),
        gradient=lambda y: 4.0 * k * np.asarray(y) ** 3,
        hessian=hessian,
        strictly_convex=True,
        name="quartic",
        params=(k,) if k != 1.0 else (),
    )


def soft_hyperbola(dim: int, coefficient: float = 1.0) -> PerturbationSpec:
    """``phi(y) = k * (sqrt(1 + |y|**2) - 1)``; curvature decays at infinity."""
    k = float(coefficient)
    if k <= 0:
        raise ContractViolation("soft-hyperbola coefficient must be positive")

    def value(y):
        y = np.asarray(y, dtype=float)
        r2 = np.sum(y * y, axis=-1)
        # sqrt(1+r2)-1 without cancellation
        return k * r2 / (np.sqrt(1.0 + r2) + 1.0)

    def gradient(y):
        y = np.asarray(y, dtype=float)
        root = np.sqrt(1.0 + np.sum(y * y, axis=-1))
        return k * y / root[..., None]

    def hessian(y):
        y = np.asarray(y, dtype=float)
        r2 = np.sum(y * y, axis=-1)
        root = np.sqrt(1.0 + r2)
        eye = np.eye(y.shape[-1])
        outer = y[..., :, None] * y[..., None, :]
        return k * ((1.0 + r2)[..., None, None] * eye - outer) / (root ** 3)[..., None, None]

    return PerturbationSpec(
        dim=dim, value=value, gradient=gradient, hessian=hessian,
        strictly_convex=True, name="soft-hyperbola",
        params=(k,) if k != 1.0 else (),
    )


def exponential(dim: int, coefficient: float = 1.0) -> PerturbationSpec:
    """``phi(y) = k * exp(y_1)``; curvature decays as ``y_1 -> -inf``.

    Strictly convex only for ``dim == 1``.
    """
    k = float(coefficient)
    if k <= 0:
        raise ContractViolation("exponential coefficient must be positive")

    def gradient(y):
        y = np.asarray(y, dtype=float)
        out = np.zeros(y.shape)
        out[..., 0] = k * np.exp(y[..., 0])
        return out

    def hessian(y):
        y = np.asarray(y, dtype=float)
        out = np.zeros(y.shape + (y.shape[-1],))
        out[..., 0, 0] = k * np.exp(y[..., 0])
        return out

    return PerturbationSpec(
        dim=dim,
        value=lambda y: k * np.exp(np.asarray(y, dtype=float)[..., 0]),
        gradient=gradient,
        hessian=hessian,
        strictly_convex=(dim == 1),
        name="exponential",
        params=(k,) if k != 1.0 else (),
    )


PERTURBATIONS = {
    "zero": zero_perturbation,
    "quartic": quartic,
    "soft-hyperbola": soft_hyperbola,
    "exponential": exponential,
}


def make_perturbation(name: str, params=(), dim: int = 1) -> PerturbationSpec:
    """Look up a catalogue perturbation by name, as used in config files."""
    try:
        factory = PERTURBATIONS[name]
    except KeyError:
        raise ContractViolation(
            f"unknown perturbation {name!r}; choose from {sorted(PERTURBATIONS)}") from None
    params = list(params or [])
    if name == "zero":
        if params:
            raise ContractViolation("the zero perturbation takes no parameters")
        return factory(dim)
    if len(params) > 1:
        raise ContractViolation(f"{name} takes at most one parameter (a coefficient)")
    return factory(dim, *params)


def make_surface(name: str, params=(), dim: int = 1) -> SurfaceSpec:
    return SurfaceSpec(make_perturbation(name, params, dim))


def unit_weight() -> WeightSpec:
    return WeightSpec(lambda y: np.ones(np.shape(y)[:-1]), name="one")


def gaussian_weight(scale: float = 1.0) -> WeightSpec:
    """``w(y) = exp(-|y|**2 / scale**2)``."""
    s2 = float(scale) ** 2
    return WeightSpec(lambda y: np.exp(-np.sum(np.asarray(y) ** 2, axis=-1) / s2),
                      name="gaussian")


WEIGHTS = {"one": unit_weight, "gaussian": gaussian_weight}
