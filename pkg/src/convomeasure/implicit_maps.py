"""Implicit scalars matching profile levels, and the radial maps built on them.

For a nonzero configuration ``y`` the perturbed profile ``t -> g_n(t, y)`` is
strictly increasing on ``(0, inf)`` with ``g_n(0, y) = 0``, so every level
equation ``g_n(t, y) = target > 0`` has exactly one positive root.  All the
scalars here (``lambda``, ``rho``, ``alpha``) are roots of such equations.

The comparison profile is always the unperturbed ``|.|**2``, for which
``h_n(t, y) = t**2 * h_n(1, y)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation, ConvergenceError, DomainError, OutsideSupportError
from .surfaces import (
    SurfaceSpec,
    as_blocks,
    as_point,
    check_order,
    g_and_slope,
    quadratic_level,
)

TOL_ABS = 1e-12
TOL_REL = 1e-12
MAX_ITER = 200
MAX_DOUBLINGS = 200


@dataclass(frozen=True)
class LambdaSolution:
    lam: float
    residual: float
    iterations: int
    bracket: tuple


@dataclass(frozen=True)
class MapJacobian:
    determinant: float
    lambda_or_rho: float
    numerator: float
    denominator: float


def solve_increasing(fun, target, *, method="newton", tol_abs=TOL_ABS, tol_rel=TOL_REL,
                     max_iter=MAX_ITER, max_doublings=MAX_DOUBLINGS):
    """Positive roots of ``g(t) = target`` for increasing, unbounded ``g``.

    ``fun(t, sel)`` returns ``(g, g')`` at ``t`` for the problems indexed by
    ``sel`` (an integer index array into the flattened batch).  ``method`` is
    ``"newton"`` (safeguarded Newton with bisection fallback) or
    ``"bisection"``.

    Returns ``(t, residual, iterations, lo, hi)`` as flat arrays.
    """
    target = np.asarray(target, dtype=float).ravel()
    k = target.size
    if np.any(target <= 0):
        raise DomainError("level equation needs a positive target")
    lo = np.zeros(k)
    hi = np.ones(k)

    need = np.arange(k)
    for _ in range(max_doublings):
        val, _slope = fun(hi[need], need)
        short = val < target[need]
        if not np.any(short):
            break
        idx = need[short]
        lo[idx] = hi[idx]
        hi[idx] *= 2.0
        need = idx
    else:
        raise ConvergenceError("bracket expansion failed: profile never reached the target",
                               best=hi)

    tol = tol_abs + tol_rel * target
    t = hi.copy() if method == "newton" else 0.5 * (lo + hi)
    resid = np.full(k, np.inf)
    iters = np.zeros(k, dtype=int)
    active = np.arange(k)
    for it in range(1, max_iter + 1):
        ta = t[active]
        val, slope = fun(ta, active)
        r = val - target[active]
        resid[active] = np.abs(r)
        iters[active] = it
        lo_a = np.where(r < 0, ta, lo[active])
        hi_a = np.where(r > 0, ta, hi[active])
        lo[active], hi[active] = lo_a, hi_a

        mid = 0.5 * (lo_a + hi_a)
        if method == "newton":
            with np.errstate(divide="ignore", invalid="ignore"):
                step = r / slope
                cand = ta - step
            bad = ~np.isfinite(cand) | (slope <= 0) | (cand < lo_a) | (cand > hi_a)
            new = np.where(bad, mid, cand)
            moved = np.where(np.isfinite(step), np.abs(step), np.inf)
        else:
            new = mid
            moved = hi_a - lo_a
        small_move = moved <= 1e-13 * np.maximum(ta, 1e-300)
        collapsed = (hi_a - lo_a) <= 4e-16 * hi_a
        done = (r == 0) | collapsed | ((np.abs(r) <= tol[active]) & small_move)
        t[active] = np.where(done, ta, new)
        active = active[~done]
        if active.size == 0:
            break
    else:
        if np.any(resid[active] > tol[active]):
            raise ConvergenceError(f"root solve did not converge in {max_iter} iterations",
                                   best=t)
    return t, resid, iters, lo, hi


def _profile_fun(surface, base, Y):
    def fun(t, sel):
        return g_and_slope(surface, base, t, Y[sel])
    return fun


def _solve_profile(surface, base, Y, target, method):
    flat = Y.reshape((-1,) + Y.shape[-2:])
    t, resid, iters, lo, hi = solve_increasing(_profile_fun(surface, base, flat), target,
                                               method=method)
    return t, resid, iters, lo, hi


def _single(surface, n, xi, y):
    n = check_order(n)
    d = surface.dim
    base = as_point(xi, d) / n
    Y = as_blocks(y, n, d)
    if Y.ndim != 2:
        raise ContractViolation("expected a single configuration")
    if not np.any(Y):
        raise DomainError("lambda undefined at the origin")
    return n, d, base, Y


def _solution(t, resid, iters, lo, hi):
    return LambdaSolution(float(t[0]), float(resid[0]), int(iters[0]), (float(lo[0]), float(hi[0])))


def solve_lambda_self(surface: SurfaceSpec, n: int, xi, w, method: str = "newton") -> LambdaSolution:
    """Positive ``lam`` with ``g_n(lam, w) = |w|**2``."""
    n, d, base, Y = _single(surface, n, xi, w)
    target = np.array([np.sum(Y * Y)])
    return _solution(*_solve_profile(surface, base, Y[None], target, method))


def solve_lambda_cross(surface: SurfaceSpec, n: int, xi, y, method: str = "newton") -> LambdaSolution:
    """``lam`` in ``(0, 1]`` with ``g_n(lam, y) = h_n(1, y)``."""
    n, d, base, Y = _single(surface, n, xi, y)
    target = np.array([quadratic_level(Y)])
    return _solution(*_solve_profile(surface, base, Y[None], target, method))


def solve_rho_cross(surface: SurfaceSpec, n: int, xi, y) -> LambdaSolution:
    """``rho >= 1`` with ``h_n(rho, y) = g_n(1, y)``; closed form since h is quadratic."""
    n, d, base, Y = _single(surface, n, xi, y)
    q = quadratic_level(Y)
    g1, _ = g_and_slope(surface, base, 1.0, Y)
    rho = float(np.sqrt(g1 / q))
    return LambdaSolution(rho, float(abs(rho * rho * q - g1)), 0, (rho, rho))


def lambda_cross_batch(surface: SurfaceSpec, n: int, xi, ys) -> np.ndarray:
    """``lambda(y)`` for a stack of configurations of shape ``(k, d*(n-1))``."""
    n = check_order(n)
    base = as_point(xi, surface.dim) / n
    Y = as_blocks(np.atleast_2d(ys), n, surface.dim)
    return _solve_profile(surface, base, Y, quadratic_level(Y), "newton")[0]


def support_gap(surface: SurfaceSpec, n: int, xi, tau) -> float:
    """``tau - n*psi(xi/n)``: positive exactly in the interior of the support."""
    base = as_point(xi, surface.dim) / n
    return float(tau - n * surface.psi(base))


def alpha_batch(surface: SurfaceSpec, base: np.ndarray, level, Omega: np.ndarray) -> np.ndarray:
    """Solve ``g_n(alpha, omega) = level`` for every direction in ``Omega``.

    ``Omega`` has shape ``(..., n-1, d)``; ``level`` broadcasts against
    ``Omega.shape[:-2]``.  Returns an array of that shape.
    """
    shape = Omega.shape[:-2]
    level = np.broadcast_to(np.asarray(level, dtype=float), shape)
    flat = Omega.reshape((-1,) + Omega.shape[-2:])
    t = solve_increasing(_profile_fun(surface, base, flat), level.ravel())[0]
    return t.reshape(shape)


def alpha(surface: SurfaceSpec, n: int, xi, tau: float, omega) -> float:
    """``sqrt(c) * lambda(sqrt(c) * omega)`` with ``c = tau - n*psi(xi/n)``.

    Computed directly as the root of ``g_n(alpha, omega) = c``.
    """
    n = check_order(n)
    d = surface.dim
    base = as_point(xi, d) / n
    Om = as_blocks(omega, n, d)
    if Om.ndim != 2:
        raise ContractViolation("expected a single direction")
    if abs(np.sqrt(np.sum(Om * Om)) - 1.0) > 1e-12:
        raise ContractViolation("omega must be a unit vector")
    c = tau - n * float(surface.psi(base))
    if c <= 0:
        raise OutsideSupportError(f"tau = {tau} is not above n*psi(xi/n) = {tau - c}")
    return float(alpha_batch(surface, base, c, Om[None])[0])


def map_T(surface: SurfaceSpec, n: int, xi, y) -> np.ndarray:
    """``T(y) = lambda(y) * y``: carries unperturbed level sets to perturbed ones."""
    sol = solve_lambda_cross(surface, n, xi, y)
    return sol.lam * np.asarray(y, dtype=float)


def map_S(surface: SurfaceSpec, n: int, xi, y) -> np.ndarray:
    """``S(y) = rho(y) * y``, the inverse of :func:`map_T`."""
    sol = solve_rho_cross(surface, n, xi, y)
    return sol.lam * np.asarray(y, dtype=float)


def det_T_prime(surface: SurfaceSpec, n: int, xi, y) -> MapJacobian:
    """Jacobian determinant of ``T`` at ``y != 0``.

    ``det T'(y) = lam**(m-2) * h_n'(lam) / g_n'(lam)`` with ``m = d*(n-1)``.
    """
    n, d, base, Y = _single(surface, n, xi, y)
    lam = solve_lambda_cross(surface, n, xi, y).lam
    m = d * (n - 1)
    dh = 2.0 * lam * quadratic_level(Y)
    _, dg = g_and_slope(surface, base, lam, Y)
    dg = float(dg)
    return MapJacobian(lam ** (m - 2) * dh / dg, lam, float(dh), dg)


def det_S_prime(surface: SurfaceSpec, n: int, xi, y) -> MapJacobian:
    """Jacobian determinant of ``S``: ``rho**(m-2) * g_n'(1) / h_n'(1)``."""
    n, d, base, Y = _single(surface, n, xi, y)
    rho = solve_rho_cross(surface, n, xi, y).lam
    m = d * (n - 1)
    _, dg = g_and_slope(surface, base, 1.0, Y)
    dh = 2.0 * quadratic_level(Y)
    return MapJacobian(rho ** (m - 2) * float(dg) / dh, rho, float(dg), float(dh))


def contraction_margin(surface: SurfaceSpec, n: int, xi, y) -> float:
    """``1 - det T'(y)``; positive for strictly convex perturbations."""
    return 1.0 - det_T_prime(surface, n, xi, y).determinant
