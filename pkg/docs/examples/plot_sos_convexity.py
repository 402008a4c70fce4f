"""
Screening for SOS-convexity
===========================

A polynomial is SOS-convex when w^T Hessian(x) w is a sum of squares.
"""

import numpy as np

from sosfrac import Polynomial, is_sos_convex
from sosfrac.sos import hessian_form
from sosfrac.verify import gram_residual

x1 = Polynomial.variable(0, 2)
x2 = Polynomial.variable(1, 2)

candidates = {
    "x1^8 + x1^2 + x1 x2 + x2^2": x1**8 + x1**2 + x1 * x2 + x2**2,
    "(x1 - 2 x2)^4 + x1^2": (x1 - 2 * x2) ** 4 + x1**2,
    "(x1 x2 - 1)^2 + x1^2": (x1 * x2 - 1) ** 2 + x1**2,
}

for name, p in candidates.items():
    res = is_sos_convex(p)
    print(f"{name:30s} {res.verdict.value}")
    if res.verdict.value == "Certified":
        # re-check the certificate with plain arithmetic
        print("    Gram residual:", gram_residual(hessian_form(p), res))
        print("    min eigenvalue:", np.linalg.eigvalsh(res.Q).min())
