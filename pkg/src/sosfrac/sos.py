"""Gram-matrix SOS tests, SOS-convexity tests and moment matrices."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence, Union

import numpy as np

from .poly import (
    MultiIndex,
    Polynomial,
    add_indices,
    grlex_key,
    hessian,
    monomial_basis,
)
from .sdp import ConeProgram, SolverSettings, SolveStatus, solve

PSD_TOL = 1e-8
GRAM_TOL = 1e-7


class Verdict(enum.Enum):
    CERTIFIED = "Certified"
    REFUTED = "Refuted"
    INDETERMINATE = "Indeterminate"


def locator_entries(basis: Sequence[MultiIndex]) -> dict[MultiIndex, list[tuple[int, int]]]:
    """For each exponent ``a``, the ordered index pairs ``(i, j)`` with ``b_i + b_j = a``."""
    out: dict[MultiIndex, list[tuple[int, int]]] = {}
    for i, bi in enumerate(basis):
        for j, bj in enumerate(basis):
            out.setdefault(add_indices(bi, bj), []).append((i, j))
    return out


@lru_cache(maxsize=None)
def _locators(n: int, d: int) -> dict[MultiIndex, np.ndarray]:
    basis = monomial_basis(n, d)
    size = len(basis)
    mats = {}
    for alpha in monomial_basis(n, 2 * d):
        mats[alpha] = np.zeros((size, size))
    for alpha, pairs in locator_entries(basis.entries).items():
        rows, cols = zip(*pairs)
        mats[alpha][rows, cols] = 1.0
    for M in mats.values():
        M.flags.writeable = False
    return mats


def coefficient_locator_matrices(n: int, d: int) -> dict[MultiIndex, np.ndarray]:
    """The 0/1 matrices ``B_a`` with ``sum_a y_a B_a = M_d(y)``, keyed by exponent."""
    if n < 1 or d < 0:
        raise ValueError(f"invalid (n, d) = {(n, d)}")
    return dict(_locators(n, d))


@dataclass(frozen=True)
class MomentVector:
    """Pseudo-moments ``y_a`` for all ``a`` of degree ``<= 2d``, in graded-lex order."""

    n: int
    d: int
    y: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        expected = len(monomial_basis(self.n, 2 * self.d))
        if y.shape != (expected,):
            raise ValueError(f"moment vector has shape {y.shape}, expected ({expected},)")
        object.__setattr__(self, "y", y)

    @classmethod
    def from_measure(cls, n: int, d: int, points, weights) -> MomentVector:
        """Moments of the atomic measure ``sum_k w_k delta_{p_k}``."""
        basis = monomial_basis(n, 2 * d)
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        w = np.asarray(weights, dtype=float)
        y = sum(wk * basis.evaluate(pk) for pk, wk in zip(pts, w))
        return cls(n, d, np.asarray(y))

    def __getitem__(self, alpha: Sequence[int]) -> float:
        return float(self.y[monomial_basis(self.n, 2 * self.d).index(alpha)])

    @property
    def y0(self) -> float:
        return float(self.y[0])

    def first_moments(self) -> np.ndarray:
        """``(L_y(x_1), ..., L_y(x_n))``; these sit right after ``y_0`` in graded-lex order."""
        return self.y[1:self.n + 1].copy()

    def moment_matrix(self) -> np.ndarray:
        return moment_matrix(self)


def moment_matrix(mv: MomentVector) -> np.ndarray:
    basis = monomial_basis(mv.n, mv.d)
    full = monomial_basis(mv.n, 2 * mv.d)
    size = len(basis)
    M = np.empty((size, size))
    for i, bi in enumerate(basis):
        for j in range(i, size):
            M[i, j] = M[j, i] = mv.y[full.index(add_indices(bi, basis[j]))]
    return M


def linear_functional(mv: MomentVector, p: Polynomial) -> float:
    """``L_y(p) = sum_a p_a y_a``."""
    if p.n != mv.n:
        raise ValueError(f"polynomial has {p.n} variables, moment vector has {mv.n}")
    if p.degree > 2 * mv.d:
        raise ValueError(f"degree {p.degree} exceeds moment order {2 * mv.d}")
    full = monomial_basis(mv.n, 2 * mv.d)
    return float(sum(c * mv.y[full.index(a)] for a, c in p.coeffs.items()))


# -- certificates -------------------------------------------------------


@dataclass
class GramCertificate:
    """PSD Gram matrix ``Q`` with ``p = m(x)^T Q m(x)`` on the monomial list ``basis``."""

    n: int
    basis: tuple[MultiIndex, ...]
    Q: np.ndarray
    min_eigenvalue: float
    coefficient_residual: float
    psd_tol: float = PSD_TOL
    gram_tol: float = GRAM_TOL

    verdict = Verdict.CERTIFIED

    @property
    def valid(self) -> bool:
        return (
            self.min_eigenvalue >= -self.psd_tol
            and self.coefficient_residual <= self.gram_tol
            and np.array_equal(self.Q, self.Q.T)
        )

    def to_dict(self) -> dict:
        return {
            "basis": [list(b) for b in self.basis],
            "gram": self.Q.tolist(),
            "min_eigenvalue": self.min_eigenvalue,
            "coefficient_residual": self.coefficient_residual,
        }


@dataclass
class Refutation:
    reason: str
    backend_status: str = ""
    verdict = Verdict.REFUTED


@dataclass
class Indeterminate:
    reason: str
    backend_status: str = ""
    details: dict = field(default_factory=dict)
    verdict = Verdict.INDETERMINATE


SosResult = Union[GramCertificate, Refutation, Indeterminate]


def _coefficient_residual(coeffs: dict, Q: np.ndarray, entries) -> float:
    worst = 0.0
    for alpha, pairs in entries.items():
        rows, cols = zip(*pairs)
        worst = max(worst, abs(float(Q[rows, cols].sum()) - coeffs.get(alpha, 0.0)))
    return worst


def polish_gram(coeffs: dict, Q: np.ndarray, entries) -> np.ndarray:
    """Orthogonal projection of ``Q`` onto ``{Q : <B_a, Q> = p_a for all a}``.

    The ``B_a`` have disjoint supports, so the projection spreads each
    coefficient mismatch evenly over the entries of its anti-diagonal.
    """
    Q = (Q + Q.T) / 2
    out = Q.copy()
    for alpha, pairs in entries.items():
        rows, cols = zip(*pairs)
        err = coeffs.get(alpha, 0.0) - float(Q[rows, cols].sum())
        out[rows, cols] += err / len(pairs)
    return (out + out.T) / 2


def make_certificate(n, basis, coeffs, Q, psd_tol=PSD_TOL, gram_tol=GRAM_TOL) -> GramCertificate:
    entries = locator_entries(basis)
    Q = polish_gram(coeffs, np.asarray(Q, dtype=float), entries)
    return GramCertificate(
        n=n,
        basis=tuple(basis),
        Q=Q,
        min_eigenvalue=float(np.linalg.eigvalsh(Q).min()) if Q.size else 0.0,
        coefficient_residual=_coefficient_residual(coeffs, Q, entries),
        psd_tol=psd_tol,
        gram_tol=gram_tol,
    )


def gram_program(coeffs: dict, basis: Sequence[MultiIndex]) -> tuple[ConeProgram, dict]:
    """Feasibility SDP ``find Q >= 0`` with ``<B_a, Q> = p_a``.

    Returns the program and the locator entries it was built from.  Raises
    ``LookupError`` if some coefficient of ``p`` cannot be reached by the basis.
    """
    entries = locator_entries(basis)
    unreachable = [a for a, c in coeffs.items() if a not in entries and c != 0]
    if unreachable:
        raise LookupError(f"monomials {unreachable[:3]} are outside the Gram basis span")
    prog = ConeProgram()
    blk = prog.add_block(len(basis))
    size = len(basis)
    for alpha in sorted(entries, key=grlex_key):
        B = np.zeros((size, size))
        rows, cols = zip(*entries[alpha])
        B[rows, cols] = 1.0
        prog.add_constraint(blocks={blk: B}, kind="==", rhs=coeffs.get(alpha, 0.0), name=str(alpha))
    prog.set_objective("min")
    return prog, entries


def _gram_test(n, coeffs, basis, psd_tol, gram_tol, settings) -> SosResult:
    if not any(coeffs.values()):
        size = len(basis)
        return make_certificate(n, basis, coeffs, np.zeros((size, size)), psd_tol, gram_tol)
    try:
        prog, _ = gram_program(coeffs, basis)
    except LookupError as exc:
        return Refutation(str(exc), "structural")
    res = solve(prog, settings)
    if res.status is SolveStatus.PRIMAL_INFEASIBLE:
        return Refutation("Gram feasibility problem is infeasible", res.backend_status)
    if not res.status.has_solution:
        return Indeterminate("SDP backend did not converge", res.backend_status)
    cert = make_certificate(n, basis, coeffs, res.blocks[0], psd_tol, gram_tol)
    if cert.valid:
        return cert
    return Indeterminate(
        "backend solution does not verify at the requested tolerances",
        res.backend_status,
        {"min_eigenvalue": cert.min_eigenvalue, "coefficient_residual": cert.coefficient_residual},
    )


def is_sos(
    p: Polynomial,
    psd_tol: float = PSD_TOL,
    gram_tol: float = GRAM_TOL,
    settings: SolverSettings | None = None,
) -> SosResult:
    """Decide whether ``p`` is a sum of squares via a Gram-matrix SDP."""
    if p.degree % 2:
        return Refutation(f"odd degree {p.degree}", "structural")
    basis = monomial_basis(p.n, p.degree // 2).entries
    return _gram_test(p.n, p.coeffs, basis, psd_tol, gram_tol, settings)


def hessian_form(p: Polynomial) -> Polynomial:
    """``w^T (Hessian p)(x) w`` as a polynomial in ``(x, w)`` (``2n`` variables)."""
    n = p.n
    H = hessian(p)
    w = [Polynomial.variable(n + i, 2 * n) for i in range(n)]
    q = Polynomial(2 * n)
    for i in range(n):
        for j in range(n):
            if not H[i][j].is_zero():
                q = q + H[i][j].embed(2 * n) * w[i] * w[j]
    return q


def sos_convexity_basis(n: int, degree: int) -> tuple[MultiIndex, ...]:
    """Monomials ``x^b w_j`` with ``|b| <= ceil((degree - 2) / 2)``."""
    k = max(0, -(-(degree - 2) // 2))
    out = []
    for beta in monomial_basis(n, k):
        for j in range(n):
            w = [0] * n
            w[j] = 1
            out.append(tuple(beta) + tuple(w))
    return tuple(sorted(out, key=grlex_key))


def is_sos_convex(
    p: Polynomial,
    psd_tol: float = PSD_TOL,
    gram_tol: float = GRAM_TOL,
    settings: SolverSettings | None = None,
) -> SosResult:
    """Test SOS-convexity by checking that ``w^T Hessian(x) w`` is SOS.

    The Gram basis only contains monomials of degree one in ``w``.
    """
    q = hessian_form(p)
    basis = sos_convexity_basis(p.n, p.degree)
    return _gram_test(2 * p.n, q.coeffs, basis, psd_tol, gram_tol, settings)
