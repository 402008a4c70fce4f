"""Sparse multivariate polynomials over the reals.

A :class:`Polynomial` stores a map from exponent tuples to float
coefficients.  Monomial bases are enumerated in graded lexicographic
order ``1, x1, ..., xn, x1^2, x1 x2, ..., xn^d``; every matrix built
downstream (Gram matrices, moment matrices) is indexed by that order.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from math import comb
from typing import Iterable, Mapping, Sequence

import numpy as np

ZERO_TOL = 1e-14

MultiIndex = tuple[int, ...]


def degree_of(alpha: Sequence[int]) -> int:
    return int(sum(alpha))


def add_indices(alpha: Sequence[int], beta: Sequence[int]) -> MultiIndex:
    return tuple(a + b for a, b in zip(alpha, beta))


def grlex_key(alpha: Sequence[int]) -> tuple:
    """Sort key: total degree first, then larger leading exponents first."""
    return (degree_of(alpha), tuple(-a for a in alpha))


def basis_size(n: int, d: int) -> int:
    """Number of monomials of degree at most ``d`` in ``n`` variables."""
    return comb(n + d, n)


@lru_cache(maxsize=None)
def _enumerate(n: int, d: int) -> tuple[MultiIndex, ...]:
    out: list[MultiIndex] = []
    for k in range(d + 1):
        # compositions of k into n parts, in decreasing lex order
        layer = [a for a in itertools.product(range(k, -1, -1), repeat=n) if sum(a) == k]
        out.extend(layer)
    return tuple(out)


@dataclass(frozen=True)
class MonomialBasis:
    """Graded-lex enumeration of all exponents of degree ``<= d``."""

    n: int
    d: int
    entries: tuple[MultiIndex, ...]

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, i: int) -> MultiIndex:
        return self.entries[i]

    def index(self, alpha: Sequence[int]) -> int:
        return _index_map(self.n, self.d)[tuple(alpha)]

    def evaluate(self, x) -> np.ndarray:
        """The vector of basis monomials at ``x``."""
        x = np.asarray(x, dtype=float)
        exps = np.array(self.entries, dtype=int)
        return np.prod(x[None, :] ** exps, axis=1)


@lru_cache(maxsize=None)
def _index_map(n: int, d: int) -> dict[MultiIndex, int]:
    return {a: i for i, a in enumerate(_enumerate(n, d))}


def monomial_basis(n: int, d: int) -> MonomialBasis:
    if n < 1:
        raise ValueError(f"need at least one variable, got n={n}")
    if d < 0:
        raise ValueError(f"degree bound must be nonnegative, got d={d}")
    return MonomialBasis(n, d, _enumerate(n, d))


class Polynomial:
    """Immutable sparse polynomial in ``n`` real variables.

    Coefficients with magnitude below ``ZERO_TOL`` are dropped on
    construction, so the zero polynomial has no terms and degree 0.
    """

    __slots__ = ("_n", "_coeffs", "_hash")

    def __init__(self, n: int, coeffs: Mapping[Sequence[int], float] | None = None):
        if n < 1:
            raise ValueError(f"need at least one variable, got n={n}")
        merged: dict[MultiIndex, float] = {}
        for alpha, c in (coeffs or {}).items():
            alpha = tuple(int(a) for a in alpha)
            if len(alpha) != n:
                raise ValueError(f"exponent {alpha} has length {len(alpha)}, expected {n}")
            if any(a < 0 for a in alpha):
                raise ValueError(f"negative exponent in {alpha}")
            merged[alpha] = merged.get(alpha, 0.0) + float(c)
        self._n = n
        self._coeffs = {a: c for a, c in merged.items() if abs(c) >= ZERO_TOL}
        self._hash = None

    # -- constructors -------------------------------------------------
    @classmethod
    def constant(cls, n: int, c: float) -> Polynomial:
        return cls(n, {(0,) * n: c})

    @classmethod
    def variable(cls, i: int, n: int) -> Polynomial:
        """The coordinate polynomial ``x_i`` (0-based)."""
        alpha = [0] * n
        alpha[i] = 1
        return cls(n, {tuple(alpha): 1.0})

    @classmethod
    def from_terms(cls, n: int, terms: Iterable[tuple[Sequence[int], float]]) -> Polynomial:
        p = cls(n)
        acc: dict[MultiIndex, float] = {}
        for alpha, c in terms:
            alpha = tuple(alpha)
            acc[alpha] = acc.get(alpha, 0.0) + c
        return cls(n, acc) if acc else p

    @classmethod
    def from_dense(cls, n: int, d: int, vec: Sequence[float]) -> Polynomial:
        """Inverse of :meth:`to_dense` on the degree-``d`` basis."""
        basis = monomial_basis(n, d)
        return cls(n, dict(zip(basis.entries, vec)))

    # -- basic accessors ----------------------------------------------
    @property
    def n(self) -> int:
        return self._n

    @property
    def coeffs(self) -> dict[MultiIndex, float]:
        return dict(self._coeffs)

    def terms(self):
        """Terms sorted in graded-lex order."""
        return sorted(self._coeffs.items(), key=lambda kv: grlex_key(kv[0]))

    @property
    def degree(self) -> int:
        return max((degree_of(a) for a in self._coeffs), default=0)

    def coeff(self, alpha: Sequence[int]) -> float:
        return self._coeffs.get(tuple(alpha), 0.0)

    def is_zero(self) -> bool:
        return not self._coeffs

    def to_dense(self, d: int | None = None) -> np.ndarray:
        """Coefficient vector on ``monomial_basis(n, d)``."""
        d = self.degree if d is None else d
        if self.degree > d:
            raise ValueError(f"degree {self.degree} exceeds basis degree {d}")
        basis = monomial_basis(self._n, d)
        vec = np.zeros(len(basis))
        for alpha, c in self._coeffs.items():
            vec[basis.index(alpha)] = c
        return vec

    # -- arithmetic ---------------------------------------------------
    def _coerce(self, other) -> Polynomial:
        if isinstance(other, Polynomial):
            if other._n != self._n:
                raise ValueError(f"variable count mismatch: {self._n} vs {other._n}")
            return other
        if isinstance(other, (int, float, np.floating, np.integer)):
            return Polynomial.constant(self._n, float(other))
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        acc = dict(self._coeffs)
        for a, c in other._coeffs.items():
            acc[a] = acc.get(a, 0.0) + c
        return Polynomial(self._n, acc)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(self._n, {a: -c for a, c in self._coeffs.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, float, np.floating, np.integer)):
            return Polynomial(self._n, {a: c * float(other) for a, c in self._coeffs.items()})
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        acc: dict[MultiIndex, float] = {}
        for a, ca in self._coeffs.items():
            for b, cb in other._coeffs.items():
                ab = add_indices(a, b)
                acc[ab] = acc.get(ab, 0.0) + ca * cb
        return Polynomial(self._n, acc)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, float, np.floating, np.integer)):
            return self * (1.0 / float(other))
        return NotImplemented

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValueError("only nonnegative integer powers are supported")
        out = Polynomial.constant(self._n, 1.0)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __eq__(self, other):
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self._n == other._n and self._coeffs == other._coeffs

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self._n, frozenset(self._coeffs.items())))
        return self._hash

    def allclose(self, other: Polynomial, atol: float = 1e-12) -> bool:
        diff = self - other
        return all(abs(c) <= atol for c in diff._coeffs.values())

    def __repr__(self):
        if not self._coeffs:
            return f"Polynomial(n={self._n}, 0)"
        parts = []
        for alpha, c in self.terms():
            mono = "*".join(
                f"x{i + 1}" if a == 1 else f"x{i + 1}^{a}" for i, a in enumerate(alpha) if a
            )
            parts.append(f"{c:g}" + (f"*{mono}" if mono else ""))
        return f"Polynomial(n={self._n}, {' + '.join(parts)})"

    # -- evaluation ---------------------------------------------------
    def _arrays(self):
        if not self._coeffs:
            return np.zeros((0, self._n), dtype=int), np.zeros(0)
        alphas, cs = zip(*self._coeffs.items())
        return np.array(alphas, dtype=int), np.array(cs, dtype=float)

    def __call__(self, x):
        return evaluate(self, x)

    # -- calculus -----------------------------------------------------
    def diff(self, i: int) -> Polynomial:
        """Partial derivative with respect to ``x_i`` (0-based)."""
        acc: dict[MultiIndex, float] = {}
        for alpha, c in self._coeffs.items():
            if alpha[i] == 0:
                continue
            beta = list(alpha)
            beta[i] -= 1
            acc[tuple(beta)] = c * alpha[i]
        return Polynomial(self._n, acc)

    def embed(self, n_total: int, offset: int = 0) -> Polynomial:
        """Same polynomial viewed in ``n_total`` variables, starting at ``offset``."""
        if offset + self._n > n_total:
            raise ValueError("embedding does not fit")
        acc = {}
        for alpha, c in self._coeffs.items():
            beta = [0] * n_total
            beta[offset:offset + self._n] = alpha
            acc[tuple(beta)] = c
        return Polynomial(n_total, acc)

    def homogenize(self, degree: int | None = None) -> Polynomial:
        """``t^k p(s/t)`` as a polynomial in ``(s, t)``, with ``k = degree``."""
        k = self.degree if degree is None else degree
        if k < self.degree:
            raise ValueError(f"homogenizing degree {k} below polynomial degree {self.degree}")
        acc = {}
        for alpha, c in self._coeffs.items():
            acc[alpha + (k - degree_of(alpha),)] = c
        return Polynomial(self._n + 1, acc)


def evaluate(p: Polynomial, x) -> float | np.ndarray:
    """Evaluate ``p`` at a point, or at a stack of points of shape ``(..., n)``."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1:] != (p.n,):
        raise ValueError(f"point has shape {x.shape}, expected trailing dimension {p.n}")
    exps, cs = p._arrays()
    if x.ndim == 1:
        total = 0.0
        for alpha, c in zip(exps, cs):
            term = c
            for xi, a in zip(x, alpha):
                if a:
                    term *= xi**a
            total += term
        return float(total)
    if not len(cs):
        return np.zeros(x.shape[:-1])
    powers = np.prod(x[..., None, :] ** exps, axis=-1)
    return powers @ cs


def gradient(p: Polynomial) -> list[Polynomial]:
    return [p.diff(i) for i in range(p.n)]


def hessian(p: Polynomial) -> list[list[Polynomial]]:
    """Matrix of second partials; entry ``(j, i)`` is the same object as ``(i, j)``."""
    grad = gradient(p)
    n = p.n
    H: list[list[Polynomial | None]] = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            # d/dx_j d/dx_i, computed once and mirrored
            H[i][j] = grad[i].diff(j)
            H[j][i] = H[i][j]
    return H  # type: ignore[return-value]


def evaluate_gradient(p: Polynomial, x) -> np.ndarray:
    return np.array([evaluate(gi, x) for gi in gradient(p)])


def evaluate_hessian(p: Polynomial, x) -> np.ndarray:
    return np.array([[evaluate(hij, x) for hij in row] for row in hessian(p)])


def perspective_eval(p: Polynomial, s, t: float) -> float:
    """``t * p(s / t)`` for ``t > 0``."""
    if not t > 0:
        raise ValueError(f"perspective needs t > 0, got t={t}")
    s = np.asarray(s, dtype=float)
    if s.shape != (p.n,):
        raise ValueError(f"s has shape {s.shape}, expected ({p.n},)")
    return t * evaluate(p, s / t)


def perspective_gradient(p: Polynomial, s, t: float) -> np.ndarray:
    """Gradient of ``(s, t) -> t * p(s/t)``, returned as ``(d/ds..., d/dt)``.

    Uses ``grad_s = grad p(x)`` and ``d/dt = p(x) - x . grad p(x)`` at
    ``x = s/t``, so no rational function is ever formed.
    """
    if not t > 0:
        raise ValueError(f"perspective needs t > 0, got t={t}")
    x = np.asarray(s, dtype=float) / t
    g = evaluate_gradient(p, x)
    return np.append(g, evaluate(p, x) - x @ g)
