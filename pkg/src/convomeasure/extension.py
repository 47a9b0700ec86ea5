"""The trilinear extension functional on a convex curve and its extremizing families.

For ``d = 1`` and ``f`` on the line, ``F = f nu * f nu * f nu`` is a function
on the plane and

    Q(f) = ||F||_{L^2(R^2)}**2 / ||f||_{L^2(R)}**6.

On the parabola Gaussians give ``Q = pi/sqrt(3)``; on strictly convex
perturbations the supremum is still ``pi/sqrt(3)`` but is only approached by
weights concentrating where the curvature is that of the parabola.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence, Union

import numpy as np

from ._parallel import ordered_map
from .density import boundary_value, density_integrand
from .errors import ContractViolation, ConvergenceError
from .quadrature import circle_rule, gauss_panels, semi_infinite_1d
from .surfaces import SurfaceSpec, WeightSpec, hessian_at

PARABOLA_CONSTANT = math.pi / math.sqrt(3.0)
DEFAULT_A_LIST = (1.0, 2.0, 4.0, 8.0, 16.0, 32.0)
FLAT_CURVATURE_TOL = 1e-8


def _need_curve(surface: SurfaceSpec) -> None:
    if surface.dim != 1:
        raise ContractViolation("the extension functional is implemented for d = 1")


def _psi(surface, y):
    return surface.psi(np.asarray(y, dtype=float)[..., None])


def _dpsi(surface, y):
    return surface.grad_psi(np.asarray(y, dtype=float)[..., None])[..., 0]


def curvature_excess(surface: SurfaceSpec, y: float, step: float = 1e-5) -> float:
    """``phi''(y)``: analytic when available, else central differences of ``phi'``."""
    pert = surface.perturbation
    if pert.hessian is not None:
        return float(pert.hessian(np.array([float(y)]))[0, 0])
    up = float(pert.gradient(np.array([y + step]))[0])
    down = float(pert.gradient(np.array([y - step]))[0])
    return (up - down) / (2.0 * step)


@dataclass(frozen=True)
class ExtremizerSpec:
    """``f(y) = exp(-a * (psi(y) - psi(c) - psi'(c)(y - c)))`` on a curve.

    Case ``"i"`` requires a flat perturbation at the centre
    (``phi''(c) = 0``); case ``"ii"`` is for centres drifting to infinity.
    """

    surface: SurfaceSpec
    center: float
    exponent: float
    case: str = "i"

    def __post_init__(self):
        _need_curve(self.surface)
        if not self.exponent > 0:
            raise ContractViolation(f"exponent must be positive, got {self.exponent}")
        if self.case not in ("i", "ii"):
            raise ContractViolation(f"case must be 'i' or 'ii', got {self.case!r}")
        if self.case == "i":
            excess = curvature_excess(self.surface, self.center)
            if abs(excess) > FLAT_CURVATURE_TOL:
                raise ContractViolation(
                    f"case (i) needs phi''(center) = 0; found {excess:.3e} at {self.center}")


class Extremizer:
    """Callable weight built from an :class:`ExtremizerSpec`; ``f(center) = 1``."""

    def __init__(self, spec: ExtremizerSpec):
        self.spec = spec
        self.center = float(spec.center)
        self.exponent = float(spec.exponent)
        self._psi_c = float(_psi(spec.surface, self.center))
        self._slope_c = float(_dpsi(spec.surface, self.center))

    def divergence(self, y):
        """``psi(y) - psi(c) - psi'(c)(y - c) >= 0``."""
        y = np.asarray(y, dtype=float)
        # far tails may overflow to inf, which correctly sends f to 0
        with np.errstate(over="ignore", invalid="ignore"):
            gap = _psi(self.spec.surface, y) - self._psi_c - self._slope_c * (y - self.center)
        return np.maximum(gap, 0.0)

    def __call__(self, y):
        return np.exp(-self.exponent * self.divergence(y))

    def support(self, threshold: float = 1e-8) -> tuple:
        """Interval outside which ``f < threshold`` (so ``f <= 1`` is negligible)."""
        level = -math.log(threshold) / self.exponent
        ends = []
        for sign in (-1.0, 1.0):
            step = 1.0 / math.sqrt(self.exponent)
            while self.divergence(self.center + sign * step) < level:
                step *= 2.0
            lo, hi = 0.0, step
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                if self.divergence(self.center + sign * mid) < level:
                    lo = mid
                else:
                    hi = mid
            ends.append(self.center + sign * hi)
        return tuple(ends)

    def as_weight(self) -> WeightSpec:
        return WeightSpec(lambda y: self(np.asarray(y)[..., 0]), name="extremizer")

    def __repr__(self):
        return (f"Extremizer(center={self.center!r}, exponent={self.exponent!r}, "
                f"case={self.spec.case!r})")


def build_extremizer(spec: ExtremizerSpec) -> Extremizer:
    return Extremizer(spec)


@dataclass(frozen=True)
class QGrid:
    """Quadrature layout for :func:`q_functional`.

    ``support`` overrides the effective support of ``f``; otherwise it comes
    from ``f.support`` or a scan of ``[-scan_radius, scan_radius]``.
    """

    support: Optional[tuple] = None
    xi_panels: int = 8
    xi_order: int = 12
    r_panels: int = 6
    r_order: int = 12
    circle_nodes: int = 256
    threshold: float = 1e-8
    tail: float = 1e-12
    scan_radius: float = 50.0
    scan_points: int = 20001

    def halved(self) -> "QGrid":
        return QGrid(self.support, max(self.xi_panels // 2, 1), self.xi_order,
                     max(self.r_panels // 2, 1), self.r_order,
                     max(self.circle_nodes // 2, 16), self.threshold, self.tail,
                     self.scan_radius, self.scan_points)


@dataclass(frozen=True)
class QResult:
    """``q_value = norm6 / norm2**6`` where ``norm6 = ||F||**2`` and ``norm2 = ||f||``."""

    q_value: float
    norm6: float
    norm2: float
    error_estimate: float
    numerator_error: float = 0.0


def effective_support(f, grid: QGrid) -> tuple:
    if grid.support is not None:
        return tuple(float(v) for v in grid.support)
    if hasattr(f, "support"):
        return tuple(f.support(grid.threshold))
    ys = np.linspace(-grid.scan_radius, grid.scan_radius, grid.scan_points)
    vals = np.abs(np.asarray(f(ys), dtype=float))
    peak = vals.max()
    if not peak > 0:
        raise ContractViolation("f vanishes on the scan window; Q needs ||f|| > 0")
    hit = np.flatnonzero(vals >= grid.threshold * peak)
    step = ys[1] - ys[0]
    return float(ys[hit[0]] - step), float(ys[hit[-1]] + step)


def l2_norm(f, center: float = 0.0, tol: float = 1e-12) -> float:
    """``||f||_2`` over the whole line, split at ``center``."""
    right = semi_infinite_1d(lambda y: f(np.asarray(y)) ** 2, center, tol).value
    left = semi_infinite_1d(lambda u: f(center - np.asarray(u)) ** 2, 0.0, tol).value
    return math.sqrt(right + left)


def _convolution_cube(surface, weight, xi_nodes, levels, nodes):
    """``F(xi, level)`` on the tensor grid, shape ``(len(xi), len(levels))``."""
    out = np.empty((xi_nodes.size, levels.size))
    w_nodes = 2.0 * np.pi / nodes.shape[0]
    for i, xi in enumerate(xi_nodes):
        vals = density_integrand(surface, 3, [xi], levels, nodes, weight)
        out[i] = w_nodes * vals.sum(axis=-1)
    return out


def _probe_radius(surface, weight, xis, r_cap, nodes, tail):
    """Smallest doubled ``r`` at which ``F(xi, r**2)**2`` is below ``tail`` of its peak."""
    r = r_cap / 64.0
    peak = 0.0
    while r < r_cap:
        vals = _convolution_cube(surface, weight, xis, np.array([r * r]), nodes)[:, 0]
        sq = float(np.max(vals * vals))
        peak = max(peak, sq)
        if peak > 0 and sq < tail * peak:
            return r
        r *= 2.0
    return r_cap


def _numerator(surface, f, weight, support, grid: QGrid) -> float:
    lo, hi = support
    xi_nodes, xi_w = gauss_panels(3.0 * lo, 3.0 * hi, grid.xi_panels, grid.xi_order)
    ys = np.linspace(lo, hi, 257)
    # the level s = sum psi(y_i) - 3 psi(xi/3) never exceeds this on support**3
    s_cap = 3.0 * float(np.ptp(_psi(surface, ys))) + 1e-300
    nodes = circle_rule(grid.circle_nodes).nodes
    peak_xi = 3.0 * float(ys[np.argmax(np.abs(f(ys)))])
    probe_xis = np.array([peak_xi, 0.5 * (peak_xi + 3.0 * lo), 0.5 * (peak_xi + 3.0 * hi)])
    r_max = _probe_radius(surface, weight, probe_xis, math.sqrt(s_cap), nodes, grid.tail)
    r_nodes, r_w = gauss_panels(0.0, r_max, grid.r_panels, grid.r_order)
    F = _convolution_cube(surface, weight, xi_nodes, r_nodes ** 2, nodes)
    # ds = 2 r dr
    return float(xi_w @ (F * F) @ (2.0 * r_nodes * r_w))


def q_functional(surface: SurfaceSpec, f: Callable, grids: Optional[QGrid] = None) -> QResult:
    """``Q(f) = ||f nu * f nu * f nu||**2 / ||f||**6`` on a curve.

    The numerator is integrated in ``(xi, r)`` with ``tau = 3 psi(xi/3) + r**2``;
    the convolution at each node is the weighted triple density from
    :mod:`convomeasure.density`.  Its error is the change from a grid with
    half the panels and half the circle nodes.
    """
    _need_curve(surface)
    grid = grids or QGrid()
    support = effective_support(f, grid)
    ys = np.linspace(support[0], support[1], 1025)
    fy = np.asarray(f(ys), dtype=float)
    if not np.any(fy != 0):
        raise ContractViolation("Q is undefined for f = 0")
    center = float(ys[np.argmax(np.abs(fy))])
    norm2 = l2_norm(f, center)
    if not norm2 > 0:
        raise ContractViolation("Q is undefined for f = 0")

    weight = WeightSpec(lambda y: f(np.asarray(y)[..., 0]), name="f")
    fine = _numerator(surface, f, weight, support, grid)
    coarse = _numerator(surface, f, weight, support, grid.halved())
    num_err = abs(fine - coarse)
    q = fine / norm2 ** 6
    # first-order combination; the norm is resolved to ~1e-12 relative
    err = q * (num_err / abs(fine) + 6.0 * 1e-12) if fine else num_err / norm2 ** 6
    return QResult(q, fine, norm2, err, num_err)


def _tail_fraction(f: Extremizer, radius: float) -> float:
    c = f.center
    total = l2_norm(f, c) ** 2
    right = semi_infinite_1d(lambda y: f(np.asarray(y)) ** 2, c + radius).value
    left = semi_infinite_1d(lambda u: f(c - np.asarray(u)) ** 2, radius).value
    return (right + left) / total


def select_a_n(surface: SurfaceSpec, center_sequence, n: int, a_start: float = 1.0,
               a_max: float = 2.0 ** 16, grids: Optional[QGrid] = None) -> float:
    """Smallest doubled exponent ``a`` making ``f = exp(-a * divergence)`` admissible.

    ``center_sequence`` is a callable ``n -> y_n`` or a number.  Admissible
    means the L^2 mass of ``f`` outside ``|y - y_n| < 1/n`` is at most ``1/n``
    of the total, and ``|Q(f) - F_0(3 y_n, 3 psi(y_n))| <= 1/n`` where ``F_0``
    is the boundary value of the unweighted triple convolution.  A centre where
    the perturbation is flat short-circuits to ``a = n``.
    """
    _need_curve(surface)
    n = int(n)
    if n < 1:
        raise ContractViolation("sequence index must be positive")
    center = float(center_sequence(n) if callable(center_sequence) else center_sequence)
    if abs(curvature_excess(surface, center)) <= FLAT_CURVATURE_TOL:
        return float(n)
    target = float(boundary_value(surface, 3, [3.0 * center]))
    a = float(a_start)
    history = []
    while a <= a_max:
        f = build_extremizer(ExtremizerSpec(surface, center, a, case="ii"))
        tail = _tail_fraction(f, 1.0 / n)
        if tail <= 1.0 / n:
            q = q_functional(surface, f, grids).q_value
            history.append((a, tail, abs(q - target)))
            if abs(q - target) <= 1.0 / n:
                return a
        else:
            history.append((a, tail, None))
        a *= 2.0
    raise ConvergenceError(f"no admissible exponent up to {a_max}; (a, tail, |Q-F0|): {history}",
                           best=history)


def default_center(perturbation: str, k: int) -> float:
    """Centre ``y_k`` drifting to where the curvature of ``phi`` vanishes."""
    if perturbation == "soft-hyperbola":
        return 2.0 ** k
    if perturbation == "exponential":
        return -(2.0 ** k)
    raise ContractViolation(f"no default centre sequence for {perturbation!r}")


@dataclass(frozen=True)
class SweepRow:
    a: float
    center: float
    q_value: float
    q_err: float
    gap: float
    flag: str = ""


@dataclass
class SweepTable:
    rows: list = field(default_factory=list)

    @property
    def gaps(self) -> list:
        return [r.gap for r in self.rows]

    @property
    def gaps_positive(self) -> bool:
        return all(r.gap > 0 for r in self.rows)

    @property
    def gaps_decreasing(self) -> bool:
        return all(b.gap < a.gap for a, b in zip(self.rows, self.rows[1:]))

    @property
    def flagged(self) -> list:
        return [r for r in self.rows if r.flag]

    def to_csv(self, stream=None) -> str:
        buf = io.StringIO()
        out = csv.writer(buf, lineterminator="\n")
        out.writerow(["a", "center", "q_value", "q_err", "gap", "flag"])
        for r in self.rows:
            out.writerow([f"{r.a:.16e}", f"{r.center:.16e}", f"{r.q_value:.16e}",
                          f"{r.q_err:.16e}", f"{r.gap:.16e}", r.flag])
        text = buf.getvalue()
        if stream is not None:
            stream.write(text)
        return text


SpecFamily = Union[Callable[[float], ExtremizerSpec], Iterable[ExtremizerSpec]]


def sharp_constant_sweep(surface: SurfaceSpec, spec_family: Optional[SpecFamily] = None,
                         a_list: Sequence[float] = DEFAULT_A_LIST,
                         grids: Optional[QGrid] = None, workers: Optional[int] = None) -> SweepTable:
    """Tabulate ``Q`` along an extremizing family and its gap below ``pi/sqrt(3)``.

    ``spec_family`` maps an exponent to a spec (default: case (i) centred at 0)
    or is an explicit list of specs, in which case ``a_list`` is ignored.
    Rows whose gap grows by more than the combined error, or that sit above
    the constant by more than their error, carry a non-empty ``flag``.
    """
    _need_curve(surface)
    if spec_family is None:
        spec_family = lambda a: ExtremizerSpec(surface, 0.0, a, case="i")  # noqa: E731
    specs = [spec_family(a) for a in a_list] if callable(spec_family) else list(spec_family)

    def one(spec):
        res = q_functional(spec.surface, build_extremizer(spec), grids)
        return spec, res

    rows = []
    for spec, res in ordered_map(one, specs, workers):
        gap = PARABOLA_CONSTANT - res.q_value
        flag = ""
        if gap < -3.0 * res.error_estimate:
            flag = "above-bound"
        elif rows and gap > rows[-1].gap + res.error_estimate + rows[-1].q_err:
            flag = "non-monotone"
        rows.append(SweepRow(spec.exponent, spec.center, res.q_value, res.error_estimate, gap,
                             flag))
    return SweepTable(rows)


def case_ii_family(surface: SurfaceSpec, indices: Sequence[int],
                   center_rule: Optional[Callable[[int], float]] = None,
                   grids: Optional[QGrid] = None) -> list:
    """Specs ``(y_k, a_k)`` for a drifting centre, with ``a_k`` from :func:`select_a_n`."""
    if center_rule is None:
        name = surface.name
        center_rule = lambda k: default_center(name, k)  # noqa: E731
    specs = []
    for k in indices:
        a = select_a_n(surface, center_rule, k, grids=grids)
        specs.append(ExtremizerSpec(surface, center_rule(k), a, case="ii"))
    return specs


def boundary_curvature_limit(surface: SurfaceSpec, center: float) -> float:
    """``F_0(3c, 3 psi(c)) = 2 pi / (sqrt(3) psi''(c))`` for the unweighted triple convolution."""
    return 2.0 * math.pi / (math.sqrt(3.0) * float(hessian_at(surface, [center])[0, 0]))
