"""Acceptance suite: one printed PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -v`` (the lines are printed even
under output capture) or directly with ``python3 tests/test_acceptance.py``.
"""

import math
import sys
import time

import numpy as np
import pytest

from convomeasure.comparison import comparison_sweep
from convomeasure.density import (
    asymptotic_d1n2,
    density,
    paraboloid_closed_form,
)
from convomeasure.extension import (
    ExtremizerSpec,
    build_extremizer,
    q_functional,
    sharp_constant_sweep,
)
from convomeasure.implicit_maps import det_S_prime, det_T_prime, map_S, map_T
from convomeasure.oracle import extension_norm_roots, thin_shell_density
from convomeasure.surfaces import make_surface, profile, quadratic_level

SQRT3_PI = math.pi / math.sqrt(3)
CURVE_AND_PLANE = [(1, 2), (1, 3), (2, 2)]
PERTURBED = ["quartic", "soft-hyperbola"]

_terminal = None


@pytest.fixture(autouse=True)
def _grab_capture(capsys):
    global _terminal
    _terminal = capsys
    yield
    _terminal = None


def report(k: int, ok: bool, detail: str) -> None:
    line = f"ACCEPTANCE {k:>2} {'PASS' if ok else 'FAIL'}: {detail}"
    if _terminal is not None:
        with _terminal.disabled():
            print("\n" + line, flush=True)
    else:
        print(line, flush=True)


def interior_points(d, n, count, seed, surface=None, offsets=(0.05, 5.0)):
    rng = np.random.default_rng(seed)
    pts = []
    for _ in range(count):
        xi = rng.uniform(-2.0, 2.0, size=d)
        floor = (float(xi @ xi) / n if surface is None
                 else n * float(surface.psi(xi / n)))
        pts.append((xi, floor + math.exp(rng.uniform(*np.log(offsets)))))
    return pts


def test_criterion_01_closed_form_constants():
    worst_rel, worst_z, lines = 0.0, 0.0, []
    ok = True
    for d, n in [(1, 2), (1, 3), (2, 2), (2, 3), (3, 2)]:
        flat = make_surface("zero", (), d)
        m = d * (n - 1)
        for xi, tau in interior_points(d, n, 50, seed=100 + 10 * d + n):
            res = density(flat, n, xi, tau)
            exact = paraboloid_closed_form(d, n, xi, tau)
            diff = abs(res.value - exact)
            if m >= 4:
                z = diff / res.error_estimate
                worst_z = max(worst_z, z)
                ok &= z <= 3.0
            else:
                rel = diff / exact
                worst_rel = max(worst_rel, rel)
                # the product rule on S^2 is deterministic: hold it to 1e-8 too
                ok &= rel <= 1e-8 or diff <= 3.0 * res.error_estimate
    report(1, ok, f"max rel err {worst_rel:.2e} (deterministic rules), "
                  f"max |diff|/SE {worst_z:.2f} (Monte Carlo, 2e5 nodes)")
    assert ok


def test_criterion_02_parabola_constants():
    v13 = density(make_surface("zero", (), 1), 3, [0.0], 1.0).value
    v22 = density(make_surface("zero", (), 2), 2, [0.0, 0.0], 1.0).value
    e13, e22 = abs(v13 - SQRT3_PI), abs(v22 - math.pi / 2)
    ok = e13 <= 1e-8 and e22 <= 1e-8
    report(2, ok, f"(1,3) = {v13:.12f} (err {e13:.1e}); (2,2) = {v22:.12f} (err {e22:.1e})")
    assert ok


def test_criterion_03_comparison_principle():
    start = time.perf_counter()
    ok, parts = True, []
    for name in PERTURBED:
        for d, n in CURVE_AND_PLANE:
            s = make_surface(name, (), d)
            rep = comparison_sweep(s, n, np.linspace(-2, 2, 9), [0.1, 1.0, 10.0])
            good = rep.violations == 0 and rep.min_margin > 0 and rep.all_strict
            ok &= good
            parts.append(f"{name}{(d, n)}: {len(rep.rows)} rows, min margin "
                         f"{rep.min_margin:.3e}, violations {rep.violations}")
    elapsed = time.perf_counter() - start
    ok &= elapsed <= 120
    report(3, ok, f"{elapsed:.1f}s; " + "; ".join(parts))
    assert ok


def _random_configs(d, n, count, seed):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        y = rng.normal(size=d * (n - 1)) * math.exp(rng.uniform(-2, 1.5))
        yield y, rng.uniform(-2, 2, size=d)


def test_criterion_04_contraction():
    ok, worst_prod, det_range = True, 0.0, [1.0, 0.0]
    for d, n in CURVE_AND_PLANE:
        s = make_surface("quartic", (), d)
        for y, xi in _random_configs(d, n, 1000, seed=40 + 10 * d + n):
            det = det_T_prime(s, n, xi, y).determinant
            back = det_S_prime(s, n, xi, map_T(s, n, xi, y)).determinant
            det_range = [min(det_range[0], det), max(det_range[1], det)]
            worst_prod = max(worst_prod, abs(det * back - 1.0))
            ok &= 0.0 < det < 1.0
    ok &= worst_prod <= 1e-9
    report(4, ok, f"det T' in [{det_range[0]:.3e}, {det_range[1]:.6f}] over 3000 samples; "
                  f"max |det S' det T' - 1| = {worst_prod:.1e}")
    assert ok


def test_criterion_05_inverse_maps():
    worst_inv, worst_ell = 0.0, 0.0
    for d, n in CURVE_AND_PLANE:
        s = make_surface("quartic", (), d)
        for y, xi in _random_configs(d, n, 1000, seed=50 + 10 * d + n):
            Ty = map_T(s, n, xi, y)
            inv = np.linalg.norm(map_S(s, n, xi, Ty) - y) / (1 + np.linalg.norm(y))
            h = quadratic_level(y.reshape(n - 1, d))
            ell = abs(profile(s, n, xi, 1.0, Ty).g - h) / (1 + h)
            worst_inv, worst_ell = max(worst_inv, inv), max(worst_ell, ell)
    ok = worst_inv <= 1e-9 and worst_ell <= 1e-9
    report(5, ok, f"max |S(T(y))-y|/(1+|y|) = {worst_inv:.1e}; "
                  f"max ellipsoid defect = {worst_ell:.1e} over 3000 samples")
    assert ok


def test_criterion_06_boundary_values():
    q1, q2 = make_surface("quartic", (), 1), make_surface("quartic", (), 2)
    v13 = density(q1, 3, [0.0], 1e-8).value
    v22 = density(q2, 2, [0.0, 0.0], 1e-8).value
    v14 = [density(q1, 4, [0.0], 10.0 ** -k).value for k in range(2, 7)]
    decreasing = all(b < a for a, b in zip(v14, v14[1:]))
    ok = abs(v13 - SQRT3_PI) < 1e-3 and abs(v22 - math.pi / 2) < 1e-3 and decreasing
    # four decades of offset: a vanishing density must have dropped well below its start
    ok &= v14[-1] < 0.1 * v14[0]
    report(6, ok, f"(1,3) {v13:.8f} vs {SQRT3_PI:.8f}; (2,2) {v22:.8f} vs "
                  f"{math.pi / 2:.8f}; (1,4) " + ", ".join(f"{v:.3e}" for v in v14))
    assert ok


def test_criterion_07_two_fold_asymptotics():
    s = make_surface("quartic", (), 1)
    ratios = [density(s, 2, [0.0], 10.0 ** -k).value / asymptotic_d1n2(s, [0.0], 10.0 ** -k)
              for k in range(1, 7)]
    devs = [abs(r - 1.0) for r in ratios]
    ok = all(b < a for a, b in zip(devs, devs[1:])) and devs[-1] < 1e-2
    report(7, ok, "ratios " + ", ".join(f"{r:.6f}" for r in ratios))
    assert ok


def test_criterion_08_oracle_equivalence():
    start = time.perf_counter()
    worst, fails, total = 0.0, 0, 0
    for name in PERTURBED:
        for d, n in CURVE_AND_PLANE:
            s = make_surface(name, (), d)
            pts = interior_points(d, n, 20, seed=800 + 10 * d + n, surface=s,
                                  offsets=(0.1, 10.0))
            for k, (xi, tau) in enumerate(pts):
                lhs = density(s, n, xi, tau)
                mc = thin_shell_density(s, n, xi, tau, N=1_000_000, seed=k)
                z = abs(lhs.value - mc.value) / (lhs.error_estimate + mc.standard_error)
                worst = max(worst, z)
                fails += z > 3.0
                total += 1
    elapsed = time.perf_counter() - start
    ok = fails == 0 and elapsed <= 600
    report(8, ok, f"{total} points, {fails} beyond 3 combined errors, worst z = {worst:.2f}, "
                  f"{elapsed:.1f}s")
    assert ok


def test_criterion_09_sharp_constant():
    start = time.perf_counter()
    s = make_surface("quartic", (), 1)
    table = sharp_constant_sweep(s, a_list=(1, 2, 4, 8, 16, 32))
    q = [r.q_value for r in table.rows]
    gaps = table.gaps
    below = all(v < SQRT3_PI for v in q)
    increasing = all(b > a for a, b in zip(q, q[1:]))
    quarter = gaps[-1] < gaps[0] / 4
    small = gaps[-1] < 0.05
    agree = []
    for a in (1.0, 8.0):
        f = build_extremizer(ExtremizerSpec(s, 0.0, a))
        res = q_functional(s, f)
        oracle = extension_norm_roots(s, f, f.support(1e-8))
        scale = res.norm2 ** 6
        z = abs(res.q_value - oracle.value / scale) / (res.error_estimate
                                                       + oracle.standard_error / scale)
        agree.append(z)
    oracle_ok = all(z <= 3.0 for z in agree)
    elapsed = time.perf_counter() - start
    ok = below and increasing and quarter and small and oracle_ok and elapsed <= 600
    report(9, ok, "q = " + ", ".join(f"{v:.6f}" for v in q)
           + f"; below {below}, increasing {increasing}, gap(32) = {gaps[-1]:.4f} "
           f"(< gap(1)/4 = {gaps[0] / 4:.4f}: {quarter}; < 0.05: {small}); oracle z = "
           + ", ".join(f"{z:.2f}" for z in agree) + f"; {elapsed:.1f}s")
    assert ok


def test_criterion_10_scaling_invariance():
    s = make_surface("quartic", (), 1)
    f = build_extremizer(ExtremizerSpec(s, 0.0, 1.0))
    base = q_functional(s, lambda y: f(y)).q_value
    devs = {c: abs(q_functional(s, lambda y, c=c: c * f(y)).q_value / base - 1.0)
            for c in (0.1, 1.0, 10.0)}
    ok = all(v <= 1e-10 for v in devs.values())
    report(10, ok, "relative change " + ", ".join(f"c={c}: {v:.1e}" for c, v in devs.items()))
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
