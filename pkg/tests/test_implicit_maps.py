import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from convomeasure.errors import ContractViolation, DomainError, OutsideSupportError
from convomeasure.implicit_maps import (
    alpha,
    contraction_margin,
    det_S_prime,
    det_T_prime,
    map_S,
    map_T,
    solve_increasing,
    solve_lambda_cross,
    solve_lambda_self,
    solve_rho_cross,
)
from convomeasure.surfaces import make_surface, profile, quadratic_level

LAM_QUARTIC_SELF = math.sqrt((math.sqrt(3.0) - 1.0) / 2.0)
LAM_QUARTIC_CROSS = math.sqrt((math.sqrt(5.0) - 1.0) / 2.0)


def test_self_lambda_flat_formula(flat2, rng):
    for _ in range(20):
        w = rng.normal(size=4)
        blocks = w.reshape(2, 2)
        expected = np.linalg.norm(w) / math.sqrt(quadratic_level(blocks))
        assert solve_lambda_self(flat2, 3, [0.3, 0.1], w).lam == pytest.approx(expected, rel=1e-12)


def test_self_lambda_flat_three_fold(flat1):
    assert solve_lambda_self(flat1, 3, [0.0], [1.0, 1.0]).lam == pytest.approx(
        1 / math.sqrt(3.0), rel=1e-12)


@pytest.mark.parametrize("method", ["newton", "bisection"])
def test_self_lambda_quartic(quartic1, method):
    sol = solve_lambda_self(quartic1, 2, [0.0], [1.0], method=method)
    assert sol.lam == pytest.approx(LAM_QUARTIC_SELF, rel=1e-11)
    assert sol.residual <= 1e-12 * 2


def test_cross_lambda(quartic1, flat1, rng):
    assert solve_lambda_cross(quartic1, 2, [0.0], [1.0]).lam == pytest.approx(
        LAM_QUARTIC_CROSS, rel=1e-11)
    for y in rng.normal(size=(5, 2)):
        assert solve_lambda_cross(flat1, 3, [0.5], y).lam == pytest.approx(1.0, rel=1e-12)
        assert 0 < solve_lambda_cross(quartic1, 3, [0.0], y).lam <= 1.0


def test_rho(quartic1, flat1):
    assert solve_rho_cross(quartic1, 2, [0.0], [1.0]).lam == pytest.approx(math.sqrt(2.0),
                                                                            rel=1e-14)
    assert solve_rho_cross(flat1, 2, [0.0], [3.0]).lam == pytest.approx(1.0, rel=1e-14)


def test_origin_is_a_domain_error(quartic1):
    for fn in (solve_lambda_self, solve_lambda_cross, solve_rho_cross, map_T, map_S,
               det_T_prime):
        with pytest.raises(DomainError):
            fn(quartic1, 3, [0.0], [0.0, 0.0])


def test_alpha_examples(flat1, quartic1):
    assert alpha(flat1, 3, [0.0], 1.0, [1.0, 0.0]) == pytest.approx(1 / math.sqrt(2.0), rel=1e-12)
    assert alpha(quartic1, 2, [0.0], 1.0, [1.0]) == pytest.approx(LAM_QUARTIC_SELF, rel=1e-11)
    with pytest.raises(OutsideSupportError):
        alpha(quartic1, 3, [0.0], -0.1, [1.0, 0.0])
    with pytest.raises(ContractViolation):
        alpha(quartic1, 3, [0.0], 1.0, [1.0, 1.0])


def test_alpha_shrinks_at_the_boundary(hyperbola1):
    omega = np.array([0.6, 0.8])
    floor = 3 * float(hyperbola1.psi(np.array([0.2])))
    vals = [alpha(hyperbola1, 3, [0.6], floor + 10.0 ** -k, omega) for k in range(1, 9)]
    assert all(b < a for a, b in zip(vals, vals[1:]))
    assert vals[-1] < 1e-3


def test_maps_flat_are_identity(flat1):
    y = np.array([0.4, -1.1])
    np.testing.assert_allclose(map_T(flat1, 3, [0.2], y), y, rtol=1e-12)
    np.testing.assert_allclose(map_S(flat1, 3, [0.2], y), y, rtol=1e-12)
    assert det_T_prime(flat1, 3, [0.2], y).determinant == pytest.approx(1.0, rel=1e-12)


def test_map_T_quartic_value(quartic1):
    assert map_T(quartic1, 2, [0.0], [1.0])[0] == pytest.approx(LAM_QUARTIC_CROSS, rel=1e-11)


def test_det_T_quartic_two_fold(quartic1):
    # h' = 4 lam, g' = 4 lam + 8 lam**3, lam**(m-2) = 1/lam for m = 1
    lam = LAM_QUARTIC_CROSS
    expected = (4 * lam) / (lam * (4 * lam + 8 * lam ** 3))
    jac = det_T_prime(quartic1, 2, [0.0], [1.0])
    assert jac.determinant == pytest.approx(expected, rel=1e-10)
    h = 1e-6
    fd = (map_T(quartic1, 2, [0.0], [1.0 + h])[0] - map_T(quartic1, 2, [0.0], [1.0 - h])[0]) / (2 * h)
    assert jac.determinant == pytest.approx(fd, rel=1e-6)


def test_det_T_matches_finite_differences_2d(quartic2, rng):
    for _ in range(5):
        y = rng.normal(size=2)
        xi = rng.normal(size=2)
        h = 1e-6
        cols = [(map_T(quartic2, 2, xi, y + h * e) - map_T(quartic2, 2, xi, y - h * e)) / (2 * h)
                for e in np.eye(2)]
        fd = np.linalg.det(np.column_stack(cols))
        det = det_T_prime(quartic2, 2, xi, y).determinant
        assert 0 < det < 1
        assert det == pytest.approx(fd, rel=1e-4)


def test_bracket_never_inverts(quartic1):
    seen = []

    def fun(t, sel):
        g = profile(quartic1, 3, [0.3], float(t[0]), [0.5, -0.2]).g
        dg = profile(quartic1, 3, [0.3], float(t[0]), [0.5, -0.2]).dg
        seen.append(g)
        return np.array([g]), np.array([dg])

    t, _, _, lo, hi = solve_increasing(fun, np.array([5.0]), method="bisection")
    g_lo = profile(quartic1, 3, [0.3], float(lo[0]), [0.5, -0.2]).g
    g_hi = profile(quartic1, 3, [0.3], float(hi[0]), [0.5, -0.2]).g
    assert g_lo <= 5.0 <= g_hi


cases = st.sampled_from([(1, 2), (1, 3), (2, 2)])


@settings(max_examples=80, deadline=None)
@given(cases, st.sampled_from(["quartic", "soft-hyperbola", "exponential"]),
       st.integers(0, 2 ** 32 - 1))
def test_map_invariants(case, name, seed):
    d, n = case
    if name == "exponential" and d == 2:
        return
    s = make_surface(name, (), d)
    r = np.random.default_rng(seed)
    y = r.normal(size=d * (n - 1)) * r.uniform(0.1, 3.0)
    xi = r.uniform(-2, 2, size=d)
    Ty = map_T(s, n, xi, y)
    back = map_S(s, n, xi, Ty)
    assert np.linalg.norm(back - y) <= 1e-9 * (1 + np.linalg.norm(y))
    q = quadratic_level(y.reshape(n - 1, d))
    assert abs(profile(s, n, xi, 1.0, Ty).g - q) <= 1e-9 * (1 + q)
    det = det_T_prime(s, n, xi, y).determinant
    assert 0 < det < 1
    assert contraction_margin(s, n, xi, y) > 0
    assert det_S_prime(s, n, xi, Ty).determinant * det == pytest.approx(1.0, abs=1e-9)
    newton = solve_lambda_self(s, n, xi, y).lam
    bis = solve_lambda_self(s, n, xi, y, method="bisection").lam
    assert newton == pytest.approx(bis, rel=1e-10)
