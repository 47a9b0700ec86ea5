"""Brute-force evaluators used to check the sphere-integral formulas.

Nothing here calls into :mod:`convomeasure.density` or
:mod:`convomeasure.implicit_maps`; the only shared pieces are the surface
callables and the Philox stream constructor.

* :func:`thin_shell_density` counts Monte Carlo samples in the shell
  ``|g_n(1, y) - c| < eps`` and divides its volume by ``2*eps``.
* :func:`root_sum_density_1d` resolves the delta function for ``d=1, n=2``
  as a sum over the two roots of ``psi(y) + psi(xi - y) = tau``.
* :func:`extension_norm_roots` computes ``||f nu * f nu * f nu||_2**2`` for
  ``d=1`` by resolving both delta functions with root finding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigurationError, ContractViolation
from .quadrature import philox
from .surfaces import SurfaceSpec

ROOT_TOL = 1e-12
FOLD_GAP = 1e-8
BATCH = 1 << 16


@dataclass(frozen=True)
class OracleEstimate:
    value: float
    standard_error: float
    method: str
    refined_value: Optional[float] = None
    refined_standard_error: Optional[float] = None
    samples: int = 0


def _shell_level(surface: SurfaceSpec, n: int, xi, points: np.ndarray) -> np.ndarray:
    """``g_n(1, y)`` written out directly from the delta-function integrand."""
    d = surface.dim
    Y = points.reshape(points.shape[0], n - 1, d)
    last = xi[None, :] - Y.sum(axis=1)
    total = surface.psi(Y).sum(axis=1) + surface.psi(last)
    return total - n * float(surface.psi(xi / n))


def _centred(n, xi, pts):
    # y_i -> xi/n - y_i puts the minimum of the level function at the origin
    return np.tile(xi / n, n - 1)[None, :] - pts


def _face_min(surface, n, xi, radius, rng, per_face=2000):
    """Smallest level value found on the faces of ``[-radius, radius]^m``."""
    m = surface.dim * (n - 1)
    best = math.inf
    for axis in range(m):
        for sign in (-1.0, 1.0):
            if m == 1:
                pts = np.array([[sign * radius]])
            else:
                pts = rng.uniform(-radius, radius, size=(per_face, m))
                pts[:, axis] = sign * radius
            vals = _shell_level(surface, n, xi, _centred(n, xi, pts))
            best = min(best, float(vals.min()))
    return best


def containing_radius(surface: SurfaceSpec, n: int, xi, level: float, seed: int = 0) -> float:
    """Half-width of a cube around the origin whose faces sit above ``1.1*level``.

    Doubles from a small radius, then bisects back down (the face minimum is
    increasing in the radius because the level function is convex with its
    minimum at the origin).
    """
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    rng = philox(seed, stream=1 << 40)
    target = 1.1 * level
    lo, hi = 0.0, 1e-3 * max(math.sqrt(level), 1e-6)
    for _ in range(200):
        if _face_min(surface, n, xi, hi, rng) > target:
            break
        lo, hi = hi, 2.0 * hi
    else:
        raise ConfigurationError("could not find a containing box")
    for _ in range(30):
        mid = 0.5 * (lo + hi)
        if _face_min(surface, n, xi, mid, rng) > target:
            hi = mid
        else:
            lo = mid
    return hi


def thin_shell_density(surface: SurfaceSpec, n: int, xi, tau: float, epsilon: float = 1e-3,
                       N: int = 1_000_000, seed: int = 0,
                       box_radius: Optional[float] = None) -> OracleEstimate:
    """Monte Carlo shell-volume estimate of the n-fold convolution density.

    The shell ``{y : |g_n(1, y) - c| < eps}`` with ``c = tau - n*psi(xi/n)`` is
    sampled uniformly in a cube; the estimate at ``eps/2`` from the same
    samples is returned as ``refined_value``.
    """
    d = surface.dim
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    if xi.shape != (d,):
        raise ContractViolation(f"xi must have {d} components")
    m = d * (n - 1)
    c = tau - n * float(surface.psi(xi / n))
    if c <= 0:
        raise ContractViolation("thin-shell oracle needs an interior point")
    if epsilon <= 0 or epsilon >= c:
        raise ConfigurationError("epsilon must lie in (0, c)")

    need = containing_radius(surface, n, xi, c + epsilon, seed)
    if box_radius is None:
        box_radius = need
    elif box_radius < need:
        raise ConfigurationError(
            f"shell escapes the sampling box; box_radius must be at least {need:.6g}")

    hits = hits_half = 0
    done = 0
    batch = 0
    while done < N:
        size = min(BATCH, N - done)
        rng = philox(seed, stream=batch)
        pts = rng.uniform(-box_radius, box_radius, size=(size, m))
        gap = np.abs(_shell_level(surface, n, xi, _centred(n, xi, pts)) - c)
        hits += int(np.count_nonzero(gap < epsilon))
        hits_half += int(np.count_nonzero(gap < 0.5 * epsilon))
        done += size
        batch += 1

    volume = (2.0 * box_radius) ** m

    def estimate(count, eps):
        p = count / N
        return (volume * p / (2 * eps),
                volume * math.sqrt(p * (1 - p) / N) / (2 * eps))

    v, se = estimate(hits, epsilon)
    vh, seh = estimate(hits_half, 0.5 * epsilon)
    return OracleEstimate(v, se, "thin-shell", vh, seh, N)


def _bisect(fun, lo, hi, tol=ROOT_TOL, max_iter=200):
    """Vectorised bisection for ``fun`` increasing from ``lo`` to ``hi``."""
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        pos = fun(mid) > 0
        hi = np.where(pos, mid, hi)
        lo = np.where(pos, lo, mid)
        if np.all(hi - lo <= tol):
            break
    return 0.5 * (lo + hi)


def _expand(fun, start, step):
    """Move ``start + step*2**k`` outward until ``fun`` turns positive."""
    step = np.broadcast_to(np.asarray(step, dtype=float), np.shape(start)).copy()
    for _ in range(200):
        out = start + step
        short = fun(out) <= 0
        if not np.any(short):
            return out
        step = np.where(short, 2.0 * step, step)
    raise ConfigurationError("root bracket expansion failed")


def root_sum_density_1d(surface: SurfaceSpec, xi: float, tau: float) -> OracleEstimate:
    """``sum over roots y of 1/|psi'(y) - psi'(xi - y)|`` for ``psi(y) + psi(xi-y) = tau``."""
    if surface.dim != 1:
        raise ContractViolation("root-sum oracle is for d = 1")
    xi = float(np.atleast_1d(xi)[0])

    def psi(y):
        return surface.psi(np.asarray(y, dtype=float)[..., None])

    def dpsi(y):
        return surface.grad_psi(np.asarray(y, dtype=float)[..., None])[..., 0]

    def level(y):
        return psi(y) + psi(xi - y) - tau

    centre = 0.5 * xi   # the symmetric function psi(y) + psi(xi - y) is minimal here
    if level(centre) >= 0:
        raise ContractViolation("root-sum oracle needs an interior point")
    hi = _expand(level, centre, 1.0)
    right = _bisect(level, centre, hi)
    lo = _expand(lambda y: level(2 * centre - y), centre, 1.0)
    left = 2 * centre - _bisect(lambda y: level(2 * centre - y), centre, lo)
    roots = np.array([left, right])
    if not np.all(np.abs(level(roots)) < 1e-8 * (1 + abs(tau))):
        raise ArithmeticError("fewer than two roots resolved")
    gap = np.abs(dpsi(roots) - dpsi(xi - roots))
    value = float(np.sum(1.0 / gap))
    shifted = np.abs(dpsi(roots + ROOT_TOL) - dpsi(xi - roots - ROOT_TOL))
    err = float(np.sum(np.abs(1.0 / shifted - 1.0 / gap)))
    return OracleEstimate(value, err, "root-sum", samples=2)


def _legendre(a, b, panels, order):
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    return ((mid[:, None] + half[:, None] * x).ravel(), (half[:, None] * w).ravel())


def _fiber_integral(surface, f, S, T, order):
    """``(f nu * f nu * f nu)(S, T)`` by resolving both deltas; arrays ``S``, ``T``.

    The fibre is parametrised by ``z1``; for each ``z1`` the pair ``z2, z3``
    with ``z2 + z3 = S - z1`` and ``psi(z2) + psi(z3) = T - psi(z1)`` is the
    root pair of a symmetric convex function.  The ``z1`` range ``[A, B]`` is
    where such roots exist; the substitution ``z1 = mid - half*cos(theta)``
    absorbs the inverse square-root behaviour at its ends.
    """

    def psi(y):
        return surface.psi(y[..., None])

    def dpsi(y):
        return surface.grad_psi(y[..., None])[..., 0]

    S = np.asarray(S, dtype=float)
    T = np.asarray(T, dtype=float)
    alive = 3.0 * psi(S / 3.0) < T
    # dead points get a harmless stand-in problem and are zeroed at the end
    S = np.where(alive, S, 0.0)
    T = np.where(alive, T, 1.0)
    # psi(z1) + 2 psi((S - z1)/2) is the smallest T reachable for given z1;
    # it is convex with its minimum at z1 = S/3
    centre = S / 3.0

    def edge(sign):
        def fun(u):
            z1 = centre + sign * u
            return psi(z1) + 2.0 * psi(0.5 * (S - z1)) - T
        zero = np.zeros_like(S)
        return centre + sign * _bisect(fun, zero, _expand(fun, zero, np.ones_like(S)))

    A, B = edge(-1.0), edge(1.0)

    theta, wt = np.polynomial.legendre.leggauss(order)
    theta = 0.5 * np.pi * (theta + 1.0)
    wt = 0.5 * np.pi * wt
    mid = 0.5 * (A + B)
    half = 0.5 * (B - A)
    z1 = mid[..., None] - half[..., None] * np.cos(theta)
    jac = half[..., None] * np.sin(theta) * wt

    R = S[..., None] - z1
    rem = T[..., None] - psi(z1)

    def k(u):
        return psi(0.5 * R + u) + psi(0.5 * R - u) - rem

    far = _expand(k, np.zeros_like(R), np.ones_like(R))
    u = _bisect(k, np.zeros_like(R), far)
    z2 = 0.5 * R + u
    z3 = 0.5 * R - u
    gap = np.abs(dpsi(z2) - dpsi(z3))
    keep = gap > FOLD_GAP
    contrib = np.where(keep, 2.0 * f(z1) * f(z2) * f(z3) / np.where(keep, gap, 1.0), 0.0)
    return np.where(alive, np.sum(contrib * jac, axis=-1), 0.0)


def _norm_roots_once(surface, f, support, panels, order, inner):
    a, b = support
    # staggered orders keep nodes off the diagonal y1 = y2 = y3, where the
    # fibre degenerates to a point
    axes = [_legendre(a, b, panels, order + k) for k in range(3)]
    (y1, w1), (y2, w2), (y3, w3) = axes
    Y1, Y2, Y3 = np.meshgrid(y1, y2, y3, indexing="ij")
    W = ((w1 * f(y1))[:, None, None] * (w2 * f(y2))[None, :, None]
         * (w3 * f(y3))[None, None, :])
    S = (Y1 + Y2 + Y3).ravel()
    T = (surface.psi(Y1[..., None]) + surface.psi(Y2[..., None])
         + surface.psi(Y3[..., None])).ravel()
    Wf = W.ravel()
    live = Wf != 0
    total = 0.0
    idx = np.flatnonzero(live)
    for start in range(0, idx.size, 4096):
        sel = idx[start:start + 4096]
        total += float(np.sum(Wf[sel] * _fiber_integral(surface, f, S[sel], T[sel], inner)))
    return total


def extension_norm_roots(surface: SurfaceSpec, f, support, panels: int = 8, order: int = 6,
                         inner: int = 24) -> OracleEstimate:
    """``||f nu * f nu * f nu||_{L^2(R^2)}**2`` for ``d = 1``.

    Uses ``||F||**2 = int f(y1) f(y2) f(y3) F(y1+y2+y3, sum psi(y_i)) dy`` with a
    composite Gauss-Legendre rule over ``support**3`` (``panels`` panels of
    ``order`` points per axis) and the fibre integral for ``F``.  The error
    estimate is the change when the panel count is halved.
    """
    if surface.dim != 1:
        raise ContractViolation("the extension oracle is for d = 1")
    fine = _norm_roots_once(surface, f, support, panels, order, inner)
    coarse = _norm_roots_once(surface, f, support, max(panels // 2, 1), order, max(inner // 2, 4))
    return OracleEstimate(fine, abs(fine - coarse), "curve-trace")
