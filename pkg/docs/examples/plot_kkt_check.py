"""
Checking KKT conditions of the transformed problem
==================================================

With s = x / (-g(x)) and t = 1 / (-g(x)) the minimiser x = (1, 1) of the
first demo maps to (s, t) = (1/6, 1/6, 1/6).
"""

import numpy as np

from sosfrac import CctPoint, FractionalProgram, Polynomial, cct_map
from sosfrac.verify import kkt_residual_pcct

x1 = Polynomial.variable(0, 2)
x2 = Polynomial.variable(1, 2)
fp = FractionalProgram(
    2,
    f=x1**8 + x1**2 + x1 * x2 + x2**2,
    g=x1**2 + x2**2 - 8,
    h=[x1**2 + x2**2 - 4, 1 - x1, 1 - x2],
)

point = cct_map([1.0, 1.0], fp)
print("s, t:", point.s, point.t)

# constraints multiplied through by powers of t, so every row is a polynomial
print("cleared:", kkt_residual_pcct(fp, point, [0, 37 / 3, 13 / 3, 4]))

# rows kept as t h(s/t); the last multiplier is then the optimal value
print("uncleared:", kkt_residual_pcct(fp, point, [0, 37 / 3, 13 / 3, 2 / 3], clear_denominators=False))

# rounded inputs leave a visible residual
rounded = CctPoint(np.array([0.1667, 0.1667]), 0.1667)
print("rounded:", kkt_residual_pcct(fp, rounded, [0, 12.3333, 4.3333, 4]))
