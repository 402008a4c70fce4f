"""Solver-independent checks of a fractional-program solution.

Everything here uses plain polynomial arithmetic and numpy; nothing calls
the SDP backend.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import TYPE_CHECKING, Sequence

import numpy as np

from .poly import Polynomial, add_indices, evaluate, evaluate_gradient, perspective_eval, perspective_gradient

if TYPE_CHECKING:
    from .cct import CctPoint, FractionalProgram
    from .sos import GramCertificate

MAX_ORACLE_DIM = 3
_CHUNK = 200_000


class EmptyFeasibleGrid(ValueError):
    """No grid point satisfies the constraints."""


@dataclass
class VerificationReport:
    feasibility_residual: float
    dinkelbach_residual: float
    kkt_stationarity_norm: float
    kkt_complementarity_norm: float
    gram_residual: float
    oracle_value: float | None = None
    oracle_gap: float | None = None
    oracle_slack: float | None = None
    oracle_box: list | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def feasibility_residual(fp: FractionalProgram, x) -> float:
    return max(0.0, max(evaluate(h, x) for h in fp.h))


def dinkelbach_residual(fp: FractionalProgram, x, r: float) -> float:
    """``f(x) + r g(x)``, which vanishes at an optimal pair."""
    return evaluate(fp.f, x) + r * evaluate(fp.g, x)


def _cleared(p: Polynomial, value: float, grad: np.ndarray, t: float, clear: bool):
    """Multiply a perspective constraint by ``t^k``, ``k = max(deg p - 1, 0)``."""
    k = max(p.degree - 1, 0) if clear else 0
    if k == 0:
        return value, grad
    grad = t**k * grad
    grad[-1] += k * t ** (k - 1) * value
    return t**k * value, grad


def pcct_constraints(fp: FractionalProgram, s, t: float, clear_denominators: bool = True):
    """Values and gradients of the constraints of the perspective reformulation.

    Rows are ``t h_i(s/t)`` for each constraint and ``t g(s/t) + 1`` last.
    With ``clear_denominators`` each row is multiplied by ``t^(deg - 1)``,
    which turns it into a polynomial in ``(s, t)`` without changing the
    feasible set on ``t > 0``.
    """
    vals, grads = [], []
    for h in fp.h:
        v, gr = _cleared(h, perspective_eval(h, s, t), perspective_gradient(h, s, t), t, clear_denominators)
        vals.append(v)
        grads.append(gr)
    v, gr = _cleared(fp.g, perspective_eval(fp.g, s, t) + 1.0, perspective_gradient(fp.g, s, t), t, clear_denominators)
    vals.append(v)
    grads.append(gr)
    return np.array(vals), np.array(grads)


def kkt_residual_pcct(
    fp: FractionalProgram,
    point: CctPoint,
    multipliers: Sequence[float],
    clear_denominators: bool = True,
) -> tuple[float, float]:
    """Stationarity and complementarity norms of the KKT system at ``(s, t)``.

    ``multipliers`` holds one entry per constraint followed by the one for
    the normalisation row ``t g(s/t) + 1 <= 0``.
    """
    s, t = np.asarray(point.s, dtype=float), float(point.t)
    if not t > 0:
        raise ValueError(f"KKT residual needs t > 0, got t={t}")
    lam = np.asarray(multipliers, dtype=float)
    if lam.shape != (len(fp.h) + 1,):
        raise ValueError(f"expected {len(fp.h) + 1} multipliers, got {lam.shape}")
    vals, grads = pcct_constraints(fp, s, t, clear_denominators)
    stationarity = perspective_gradient(fp.f, s, t) + lam @ grads
    return float(np.abs(stationarity).max()), float(np.abs(lam * vals).max())


def ratio_gradient(fp: FractionalProgram, x) -> np.ndarray:
    """Gradient of ``f / (-g)`` at ``x``."""
    fx, gx = evaluate(fp.f, x), evaluate(fp.g, x)
    return (evaluate_gradient(fp.f, x) * (-gx) + fx * evaluate_gradient(fp.g, x)) / gx**2


@dataclass
class OracleResult:
    value: float
    argmin: np.ndarray
    feasible_count: int
    spacing: np.ndarray
    lipschitz: float

    @property
    def slack(self) -> float:
        """Bound on how far the grid minimum can sit above the true minimum."""
        return self.lipschitz * float(np.linalg.norm(self.spacing))


def _normalise_box(box, n):
    box = np.asarray(box, dtype=float)
    if box.shape == (2,):
        box = np.tile(box, (n, 1))
    if box.shape != (n, 2) or np.any(box[:, 1] <= box[:, 0]):
        raise ValueError(f"box must be {n} intervals (lo < hi), got {box.tolist()}")
    return box


def grid_oracle(fp: FractionalProgram, box, steps: int | Sequence[int]) -> OracleResult:
    """Brute-force minimum of ``f/(-g)`` over the feasible points of a grid.

    Grid points with every ``h_i <= 0`` and ``g < 0`` are kept.  The
    returned Lipschitz constant is the largest gradient norm of the ratio
    over those points, used to bound the discretisation error.
    """
    n = fp.n
    if n > MAX_ORACLE_DIM:
        raise ValueError(f"grid oracle limited to n <= {MAX_ORACLE_DIM}, got n={n}")
    box = _normalise_box(box, n)
    steps = np.broadcast_to(np.asarray(steps, dtype=int), (n,))
    if np.any(steps < 2):
        raise ValueError("need at least 2 grid steps per dimension")
    axes = [np.linspace(lo, hi, k) for (lo, hi), k in zip(box, steps)]
    spacing = np.array([(hi - lo) / (k - 1) for (lo, hi), k in zip(box, steps)])

    total = int(np.prod(steps))
    best_val, best_pt, count, lip = np.inf, None, 0, 0.0
    grad_f = [fp.f.diff(i) for i in range(n)]
    grad_g = [fp.g.diff(i) for i in range(n)]
    for start in range(0, total, _CHUNK):
        flat = np.arange(start, min(start + _CHUNK, total))
        idx = np.unravel_index(flat, tuple(steps))
        X = np.stack([axes[k][idx[k]] for k in range(n)], axis=-1)
        mask = evaluate(fp.g, X) < 0
        for h in fp.h:
            mask &= evaluate(h, X) <= 0
        if not mask.any():
            continue
        X = X[mask]
        fx, gx = evaluate(fp.f, X), evaluate(fp.g, X)
        ratio = fx / (-gx)
        k = int(np.argmin(ratio))
        if ratio[k] < best_val:
            best_val, best_pt = float(ratio[k]), X[k].copy()
        count += len(X)
        G = np.stack(
            [(evaluate(df, X) * (-gx) + fx * evaluate(dg, X)) / gx**2 for df, dg in zip(grad_f, grad_g)],
            axis=-1,
        )
        lip = max(lip, float(np.linalg.norm(G, axis=-1).max()))
    if best_pt is None:
        raise EmptyFeasibleGrid(f"no feasible point among {total} grid points in box {box.tolist()}")
    return OracleResult(best_val, best_pt, count, spacing, lip)


def default_box(x_bar=None, n: int = 1) -> list[list[float]]:
    if x_bar is not None:
        B = 1.0 + 2.0 * max(1.0, float(np.abs(np.asarray(x_bar)).max()))
        n = len(x_bar)
    else:
        B = 10.0
    return [[-B, B]] * n


def default_steps(n: int) -> int:
    return 401 if n <= 2 else 101


def gram_residual(p: Polynomial, cert: GramCertificate) -> float:
    """``max_a |<B_a, Q> - p_a|`` by expanding ``m(x)^T Q m(x)`` term by term."""
    if cert.n != p.n:
        raise ValueError(f"certificate has {cert.n} variables, polynomial has {p.n}")
    Q = np.asarray(cert.Q)
    if Q.shape != (len(cert.basis), len(cert.basis)):
        raise ValueError(f"Gram matrix shape {Q.shape} does not match basis of size {len(cert.basis)}")
    top = 2 * max((sum(b) for b in cert.basis), default=0)
    if p.degree > top:
        raise ValueError(f"polynomial degree {p.degree} exceeds certificate degree {top}")
    expanded: dict = {}
    for i, bi in enumerate(cert.basis):
        for j, bj in enumerate(cert.basis):
            a = add_indices(bi, bj)
            expanded[a] = expanded.get(a, 0.0) + Q[i, j]
    keys = set(expanded) | set(p.coeffs)
    return max((abs(expanded.get(a, 0.0) - p.coeff(a)) for a in keys), default=0.0)


def min_eigenvalue(cert: GramCertificate) -> float:
    Q = np.asarray(cert.Q)
    return float(np.linalg.eigvalsh((Q + Q.T) / 2).min()) if Q.size else 0.0


def weak_duality_check(value_D: float, value_Q: float, tol: float = 1e-6) -> bool:
    if not (np.isfinite(value_D) and np.isfinite(value_Q)):
        raise ValueError("weak duality check needs finite values")
    return value_D <= value_Q + tol
