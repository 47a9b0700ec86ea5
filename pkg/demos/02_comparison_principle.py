"""The perturbed density sits strictly below the shifted paraboloid density.

We sweep xi over [-2, 2] and three heights above the support floor for a
quartic and a soft-hyperbola perturbation, then print the smallest margin.
"""

import numpy as np

from convomeasure import comparison_sweep, make_surface

grid = np.linspace(-2, 2, 9)
for name in ("quartic", "soft-hyperbola"):
    for d, n in [(1, 2), (1, 3), (2, 2)]:
        rep = comparison_sweep(make_surface(name, (), d), n, grid, [0.1, 1.0, 10.0])
        s = rep.summary
        print(f"{name:>14} d={d} n={n}: rows={s['rows']:>3} min_margin={s['min_margin']:.4e} "
              f"violations={s['violations']}")

# the flat surface is the equality case: margins vanish
flat = comparison_sweep(make_surface("zero", (), 1), 3, grid, [1.0])
print("flat control, largest |margin|:", max(abs(r.margin) for r in flat.rows))
