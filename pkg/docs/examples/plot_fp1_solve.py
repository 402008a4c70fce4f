"""
Solving a fractional program with SOS-convex data
=================================================

Minimise (x1^8 + x1^2 + x1 x2 + x2^2) / (8 - x1^2 - x2^2) over the part of
the disk of radius 2 where x1 >= 1 and x2 >= 1.
"""

import numpy as np

from sosfrac import FractionalProgram, Polynomial, solve_fractional

x1 = Polynomial.variable(0, 2)
x2 = Polynomial.variable(1, 2)

fp = FractionalProgram(
    2,
    f=x1**8 + x1**2 + x1 * x2 + x2**2,
    g=x1**2 + x2**2 - 8,
    h=[x1**2 + x2**2 - 4, 1 - x1, 1 - x2],
)

# one pair of semidefinite programs, no parameter search
report = solve_fractional(fp)
print("status:", report.status.value)
print("value: ", report.value)
print("x_bar: ", np.round(report.x_bar, 6))

# the multipliers of the SOS problem and the moment mass
print("lambda:", np.round(report.lam, 4), "gamma:", round(report.gamma, 6))
print("y0:    ", report.y0)

# independent checks computed without the SDP backend
vr = report.verification
print("feasibility residual:", vr.feasibility_residual)
print("Dinkelbach residual: ", vr.dinkelbach_residual)
print("Gram residual:       ", vr.gram_residual)
print("grid oracle:         ", vr.oracle_value, "(slack", round(vr.oracle_slack, 3), ")")
