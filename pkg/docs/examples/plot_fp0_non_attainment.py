"""
A value that is not attained
============================

Minimise 1 / (-x) over x <= -1.  The infimum is 0 but no point reaches it.
"""

from sosfrac import FractionalProgram, Polynomial, solve_fractional

x = Polynomial.variable(0, 1)
fp = FractionalProgram(1, f=Polynomial.constant(1, 1.0), g=x, h=[x + 1])

report = solve_fractional(fp)
print("status:", report.status.value)
print("value: ", report.value)

# the moment mass collapses, so there is no point to read off
print("y0:    ", report.y0)
print("x_bar: ", report.x_bar)

# -g is unbounded on the feasible set
print("sup -g:", report.diagnostics["sup_neg_g"])
for note in report.notes:
    print("note:", note)
