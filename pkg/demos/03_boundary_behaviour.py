"""What happens as tau drops to the bottom of the support.

(1,3) and (2,2) densities tend to finite curvature-dependent limits, (1,4)
vanishes, and (1,2) blows up at the rate of an explicit comparator.
"""

from convomeasure import asymptotic_d1n2, boundary_value, density, make_surface

q1, q2 = make_surface("quartic", (), 1), make_surface("quartic", (), 2)

print("offset      (1,3)         (2,2)         (1,4)         (1,2)/comparator")
for k in range(1, 9):
    eps = 10.0 ** -k
    ratio = density(q1, 2, [0.0], eps).value / asymptotic_d1n2(q1, [0.0], eps)
    print(f"1e-{k}   {density(q1, 3, [0.0], eps).value:.10f}  "
          f"{density(q2, 2, [0.0, 0.0], eps).value:.10f}  "
          f"{density(q1, 4, [0.0], eps).value:.6e}  {ratio:.8f}")

print("limits:", boundary_value(q1, 3, [0.0]), boundary_value(q2, 2, [0.0, 0.0]))
