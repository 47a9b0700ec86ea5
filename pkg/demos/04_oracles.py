"""Brute-force cross-checks of the sphere-integral formula.

The thin-shell Monte Carlo estimate never touches the implicit scalars, so
agreement is a genuine check.  For d=1, n=2 the root-sum is exact.
"""

from convomeasure import density, make_surface, root_sum_density_1d, thin_shell_density

s = make_surface("quartic", (), 1)
for n, xi, tau in [(2, 0.0, 1.0), (3, 0.0, 1.0), (3, 1.0, 3.0)]:
    formula = density(s, n, [xi], tau).value
    mc = thin_shell_density(s, n, [xi], tau)
    print(f"n={n} xi={xi} tau={tau}: formula {formula:.6f}  thin-shell {mc.value:.4f} "
          f"+- {mc.standard_error:.4f} (eps/2: {mc.refined_value:.4f})")

print("root-sum n=2:", root_sum_density_1d(s, 0.0, 1.0).value)
