"""
A brute-force cross-check
=========================

For small n the ratio can be evaluated on a grid.  The grid minimum sits
above the true minimum by at most the reported slack.
"""

from sosfrac import FractionalProgram, Polynomial
from sosfrac.verify import grid_oracle

x1 = Polynomial.variable(0, 2)
x2 = Polynomial.variable(1, 2)
fp = FractionalProgram(
    2,
    f=x1**8 + x1**2 + x1 * x2 + x2**2,
    g=x1**2 + x2**2 - 8,
    h=[x1**2 + x2**2 - 4, 1 - x1, 1 - x2],
)

for steps in (26, 51, 101, 201, 401):
    res = grid_oracle(fp, [-2.3, 2.1], steps)
    print(f"{steps:4d} steps  value={res.value:.6f}  argmin={res.argmin.round(4)}  slack={res.slack:.4f}")
