"""Unperturbed convolution densities against their closed forms.

On the paraboloid the n-fold density depends on (xi, tau) only through
tau - |xi|^2/n, with an explicit constant in front.  For three points on a
curve it is the constant pi/sqrt(3) everywhere inside the support.
"""

import math

import numpy as np

from convomeasure import closed_form_constant, density, make_surface, paraboloid_closed_form

for d, n in [(1, 2), (1, 3), (2, 2), (1, 4), (2, 3), (3, 2)]:
    flat = make_surface("zero", (), d)
    xi = np.linspace(-0.5, 0.5, d)
    tau = float(xi @ xi) / n + 1.7
    res = density(flat, n, xi, tau)
    exact = paraboloid_closed_form(d, n, xi, tau)
    print(f"d={d} n={n}  c={closed_form_constant(d, n):.10f}  numeric={res.value:.10f} "
          f"+- {res.error_estimate:.1e}  exact={exact:.10f}")

print(f"\npi/sqrt(3) = {math.pi / math.sqrt(3):.10f},  pi/2 = {math.pi / 2:.10f}")
