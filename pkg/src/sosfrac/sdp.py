"""Backend-neutral conic programs and the single solver adapter.

A :class:`ConeProgram` has scalar variables (optionally nonnegative),
symmetric PSD matrix variables ("blocks"), linear equalities and
inequalities over both, and linear matrix inequalities over the scalar
variables.  :func:`solve` lowers it to cvxpy, equilibrates rows, tries the
configured solvers in order, and re-checks whatever comes back with plain
numpy before reporting a status.
"""

from __future__ import annotations

import enum
import logging
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import cvxpy as cp
import numpy as np

log = logging.getLogger(__name__)


class SolveStatus(enum.Enum):
    OPTIMAL = "Optimal"
    NEAR_OPTIMAL = "NearOptimal"
    PRIMAL_INFEASIBLE = "PrimalInfeasible"
    UNBOUNDED = "DualInfeasible/Unbounded"
    NUMERICAL_TROUBLE = "NumericalTrouble"

    @property
    def has_solution(self) -> bool:
        return self in (SolveStatus.OPTIMAL, SolveStatus.NEAR_OPTIMAL)


@dataclass
class LinearConstraint:
    """``sum_i a_i x_i + sum_j <A_j, X_j>  (== | <=)  rhs``."""

    scalar: dict[int, float]
    blocks: dict[int, np.ndarray]
    kind: str
    rhs: float
    name: str = ""

    def max_coef(self) -> float:
        vals = [abs(v) for v in self.scalar.values()]
        vals += [float(np.abs(A).max()) for A in self.blocks.values() if A.size]
        return max(vals, default=0.0)


@dataclass
class LMIConstraint:
    """``constant + sum_i x_i F_i`` is positive semidefinite."""

    constant: np.ndarray
    terms: dict[int, np.ndarray]
    name: str = ""

    @property
    def size(self) -> int:
        return self.constant.shape[0]

    def matrix(self, x: np.ndarray) -> np.ndarray:
        M = self.constant.astype(float).copy()
        for i, F in self.terms.items():
            M += x[i] * F
        return M


@dataclass
class ConeProgram:
    n_scalar: int = 0
    nonneg: list[bool] = field(default_factory=list)
    scalar_names: list[str] = field(default_factory=list)
    block_sizes: list[int] = field(default_factory=list)
    sense: str = "min"
    obj_scalar: dict[int, float] = field(default_factory=dict)
    obj_blocks: dict[int, np.ndarray] = field(default_factory=dict)
    obj_constant: float = 0.0
    constraints: list[LinearConstraint] = field(default_factory=list)
    lmis: list[LMIConstraint] = field(default_factory=list)

    def add_scalar(self, name: str = "", nonneg: bool = False) -> int:
        self.nonneg.append(nonneg)
        self.scalar_names.append(name or f"x{self.n_scalar}")
        self.n_scalar += 1
        return self.n_scalar - 1

    def add_scalars(self, count: int, prefix: str = "x", nonneg: bool = False) -> list[int]:
        return [self.add_scalar(f"{prefix}{k}", nonneg) for k in range(count)]

    def add_block(self, size: int) -> int:
        if size < 1:
            raise ValueError(f"PSD block size must be positive, got {size}")
        self.block_sizes.append(size)
        return len(self.block_sizes) - 1

    def add_constraint(self, scalar=None, blocks=None, kind="==", rhs=0.0, name="") -> None:
        if kind not in ("==", "<="):
            raise ValueError(f"unknown constraint kind {kind!r}")
        self.constraints.append(
            LinearConstraint(dict(scalar or {}), dict(blocks or {}), kind, float(rhs), name)
        )

    def add_lmi(self, constant, terms, name="") -> None:
        self.lmis.append(LMIConstraint(np.asarray(constant, dtype=float), dict(terms), name))

    def set_objective(self, sense="min", scalar=None, blocks=None, constant=0.0) -> None:
        if sense not in ("min", "max"):
            raise ValueError(f"unknown sense {sense!r}")
        self.sense = sense
        self.obj_scalar = dict(scalar or {})
        self.obj_blocks = dict(blocks or {})
        self.obj_constant = float(constant)

    @property
    def n_equalities(self) -> int:
        return sum(c.kind == "==" for c in self.constraints)

    @property
    def n_inequalities(self) -> int:
        return sum(c.kind == "<=" for c in self.constraints)

    def validate(self) -> None:
        def check_refs(scalar, blocks, what):
            for i in scalar:
                if not 0 <= i < self.n_scalar:
                    raise ValueError(f"{what}: unknown scalar variable {i}")
            for j, A in blocks.items():
                if not 0 <= j < len(self.block_sizes):
                    raise ValueError(f"{what}: unknown block {j}")
                k = self.block_sizes[j]
                if A.shape != (k, k):
                    raise ValueError(f"{what}: block {j} matrix has shape {A.shape}, expected {(k, k)}")
                if not np.allclose(A, A.T, atol=0, rtol=0):
                    raise ValueError(f"{what}: block {j} matrix is not symmetric")

        check_refs(self.obj_scalar, self.obj_blocks, "objective")
        for c in self.constraints:
            check_refs(c.scalar, c.blocks, c.name or "constraint")
        for L in self.lmis:
            k = L.size
            mats = [L.constant, *L.terms.values()]
            for F in mats:
                if F.shape != (k, k) or not np.array_equal(F, F.T):
                    raise ValueError(f"{L.name or 'lmi'}: matrices must be symmetric {k}x{k}")
            for i in L.terms:
                if not 0 <= i < self.n_scalar:
                    raise ValueError(f"{L.name or 'lmi'}: unknown scalar variable {i}")

    def objective_value(self, x: np.ndarray, blocks: Sequence[np.ndarray]) -> float:
        val = self.obj_constant + sum(c * x[i] for i, c in self.obj_scalar.items())
        val += sum(float(np.sum(C * blocks[j])) for j, C in self.obj_blocks.items())
        return float(val)


@dataclass
class SolverSettings:
    solvers: tuple[str, ...] = ("CVXOPT", "CLARABEL")
    feasibility_tol: float = 1e-8
    duality_gap_tol: float = 1e-7
    max_iters: int = 500
    equilibrate: bool = True

    def options(self, solver: str) -> dict:
        if solver == "CVXOPT":
            # cvxopt aborts instead of returning an inaccurate point below 1e-8
            return dict(abstol=1e-8, reltol=1e-8, feastol=1e-8, max_iters=self.max_iters)
        if solver == "CLARABEL":
            return dict(
                tol_gap_abs=1e-9, tol_gap_rel=1e-9, tol_feas=1e-9, max_iter=self.max_iters
            )
        if solver == "SCS":
            return dict(eps_abs=1e-9, eps_rel=1e-9, max_iters=100_000)
        return {}


@dataclass
class SolveResult:
    status: SolveStatus
    x: np.ndarray | None = None
    blocks: list[np.ndarray] | None = None
    primal_objective: float | None = None
    dual_objective: float | None = None
    eq_duals: np.ndarray | None = None
    ineq_duals: np.ndarray | None = None
    lmi_duals: list[np.ndarray] | None = None
    residuals: dict[str, float] = field(default_factory=dict)
    solver: str = ""
    backend_status: str = ""

    @property
    def value(self) -> float | None:
        return self.primal_objective

    @property
    def gap(self) -> float | None:
        if self.primal_objective is None or self.dual_objective is None:
            return None
        return abs(self.primal_objective - self.dual_objective)


def residuals(cp_: ConeProgram, x: np.ndarray, blocks: Sequence[np.ndarray]) -> dict[str, float]:
    """Constraint violations of a candidate point, computed without the backend.

    Rows are measured after dividing by their largest coefficient, and
    eigenvalue violations relative to ``max(1, ||M||_max)``, so the numbers are
    comparable with the feasibility tolerance handed to the solver.
    """
    eq = ineq = 0.0
    for c in cp_.constraints:
        lhs = sum(a * x[i] for i, a in c.scalar.items())
        lhs += sum(float(np.sum(A * blocks[j])) for j, A in c.blocks.items())
        scale = max(c.max_coef(), abs(c.rhs), 1e-300)
        r = (lhs - c.rhs) / scale
        if c.kind == "==":
            eq = max(eq, abs(r))
        else:
            ineq = max(ineq, r, 0.0)
    nn = max([-x[i] for i, flag in enumerate(cp_.nonneg) if flag] + [0.0])
    psd = 0.0
    for L in cp_.lmis:
        M = L.matrix(x)
        lam = float(np.linalg.eigvalsh((M + M.T) / 2).min())
        psd = max(psd, -lam / max(1.0, float(np.abs(M).max())))
    for X in blocks:
        lam = float(np.linalg.eigvalsh((X + X.T) / 2).min())
        psd = max(psd, -lam / max(1.0, float(np.abs(X).max())))
    return {"equality": eq, "inequality": ineq, "nonneg": max(nn, 0.0), "psd": psd}


def _lower(cp_: ConeProgram, equilibrate: bool):
    """Build the cvxpy problem.  Returns the problem, variables and row scales."""
    x = cp.Variable(cp_.n_scalar) if cp_.n_scalar else None
    Xs = [cp.Variable((k, k), symmetric=True) for k in cp_.block_sizes]

    def affine(scalar, blocks):
        parts = []
        if scalar:
            idx = np.array(list(scalar.keys()))
            coef = np.array(list(scalar.values()))
            parts.append(coef @ x[idx])
        for j, A in blocks.items():
            parts.append(cp.sum(cp.multiply(A, Xs[j])))
        return cp.sum(cp.hstack(parts)) if len(parts) > 1 else (parts[0] if parts else 0)

    obj_scale = 1.0
    if equilibrate:
        vals = [abs(v) for v in cp_.obj_scalar.values()]
        vals += [float(np.abs(C).max()) for C in cp_.obj_blocks.values() if C.size]
        obj_scale = 1.0 / max(vals) if vals and max(vals) > 0 else 1.0
    obj = affine(cp_.obj_scalar, cp_.obj_blocks)
    sign = 1.0 if cp_.sense == "min" else -1.0
    objective = cp.Minimize(sign * obj_scale * obj) if not isinstance(obj, int) else cp.Minimize(0)

    eq_cons, eq_scale, in_cons, in_scale = [], [], [], []
    for c in cp_.constraints:
        s = 1.0 / c.max_coef() if equilibrate and c.max_coef() > 0 else 1.0
        expr = affine(c.scalar, c.blocks)
        row = s * expr - s * c.rhs
        if c.kind == "==":
            eq_cons.append(row == 0)
            eq_scale.append(s)
        else:
            in_cons.append(row <= 0)
            in_scale.append(s)

    lmi_cons, lmi_scale = [], []
    for L in cp_.lmis:
        k = L.size
        mats = [L.constant, *L.terms.values()]
        s = 1.0
        if equilibrate:
            mx = max(float(np.abs(F).max()) for F in mats)
            s = 1.0 / mx if mx > 0 else 1.0
        idx = list(L.terms.keys())
        if idx:
            stack = np.array([L.terms[i].ravel(order="F") for i in idx]).T
            vec = stack @ x[np.array(idx)] + L.constant.ravel(order="F")
            M = cp.reshape(vec, (k, k), order="F")
        else:
            M = cp.Constant(L.constant)
        M = s * (M + M.T) / 2
        lmi_cons.append(M >> 0)
        lmi_scale.append(s)

    other = []
    if x is not None and any(cp_.nonneg):
        mask = np.flatnonzero(cp_.nonneg)
        other.append(x[mask] >= 0)
    for X in Xs:
        other.append(X >> 0)

    prob = cp.Problem(objective, eq_cons + in_cons + lmi_cons + other)
    meta = dict(
        sign=sign,
        obj_scale=obj_scale,
        eq=(eq_cons, np.array(eq_scale)),
        ineq=(in_cons, np.array(in_scale)),
        lmi=(lmi_cons, lmi_scale),
    )
    return prob, x, Xs, meta


_CVX_STATUS = {
    cp.OPTIMAL: SolveStatus.OPTIMAL,
    cp.OPTIMAL_INACCURATE: SolveStatus.NEAR_OPTIMAL,
    cp.INFEASIBLE: SolveStatus.PRIMAL_INFEASIBLE,
    cp.INFEASIBLE_INACCURATE: SolveStatus.PRIMAL_INFEASIBLE,
    cp.UNBOUNDED: SolveStatus.UNBOUNDED,
    cp.UNBOUNDED_INACCURATE: SolveStatus.UNBOUNDED,
}


def _solve_once(cp_: ConeProgram, solver: str, settings: SolverSettings) -> SolveResult:
    prob, x, Xs, meta = _lower(cp_, settings.equilibrate)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            prob.solve(solver=solver, **settings.options(solver))
    except (cp.error.SolverError, ValueError, ArithmeticError) as exc:
        log.info("solver %s failed: %s", solver, exc)
        return SolveResult(SolveStatus.NUMERICAL_TROUBLE, solver=solver, backend_status=str(exc))

    status = _CVX_STATUS.get(prob.status, SolveStatus.NUMERICAL_TROUBLE)
    result = SolveResult(status, solver=solver, backend_status=prob.status)
    if not status.has_solution:
        return result
    if (x is not None and x.value is None) or any(X.value is None for X in Xs):
        result.status = SolveStatus.NUMERICAL_TROUBLE
        return result

    xv = np.asarray(x.value, dtype=float) if x is not None else np.zeros(0)
    Xv = [np.asarray((X.value + X.value.T) / 2, dtype=float) for X in Xs]
    result.x, result.blocks = xv, Xv
    result.primal_objective = cp_.objective_value(xv, Xv)

    # Duals mapped back to the unscaled data; the dual objective is
    # -sum(mu_k b_k) - <Z, F0> for the minimisation form.
    sign, w = meta["sign"], meta["obj_scale"]
    eq_cons, eq_s = meta["eq"]
    in_cons, in_s = meta["ineq"]
    lmi_cons, lmi_s = meta["lmi"]
    try:
        eq_d = np.array([float(np.asarray(c.dual_value)) for c in eq_cons]) * eq_s / w
        in_d = np.array([float(np.asarray(c.dual_value)) for c in in_cons]) * in_s / w
        lmi_d = [np.asarray(c.dual_value, dtype=float) * s / w for c, s in zip(lmi_cons, lmi_s)]
        b_eq = np.array([c.rhs for c in cp_.constraints if c.kind == "=="])
        b_in = np.array([c.rhs for c in cp_.constraints if c.kind == "<="])
        dual_min = -eq_d @ b_eq - in_d @ b_in if len(b_eq) + len(b_in) else 0.0
        dual_min = float(dual_min) - sum(
            float(np.sum(Z * L.constant)) for Z, L in zip(lmi_d, cp_.lmis)
        )
        result.dual_objective = sign * dual_min + cp_.obj_constant
        result.eq_duals, result.ineq_duals, result.lmi_duals = eq_d, in_d, lmi_d
    except (TypeError, ValueError):
        result.dual_objective = None

    result.residuals = residuals(cp_, xv, Xv)
    if result.status is SolveStatus.OPTIMAL:
        worst = max(result.residuals.values())
        gap = result.gap
        scale = 1.0 + abs(result.primal_objective)
        if worst > 10 * settings.feasibility_tol or (
            gap is not None and gap > settings.duality_gap_tol * scale
        ):
            result.status = SolveStatus.NEAR_OPTIMAL
    return result


def solve(cp_: ConeProgram, settings: SolverSettings | None = None) -> SolveResult:
    """Solve ``cp_``, falling back through ``settings.solvers`` on trouble.

    The first Optimal, PrimalInfeasible or Unbounded answer is returned.
    Otherwise the best NearOptimal answer (smallest residual) is returned,
    and failing that a NumericalTrouble result.
    """
    settings = settings or SolverSettings()
    cp_.validate()
    fallback: SolveResult | None = None
    for solver in settings.solvers:
        res = _solve_once(cp_, solver, settings)
        log.debug("solver %s -> %s (%s)", solver, res.status.value, res.backend_status)
        if res.status in (
            SolveStatus.OPTIMAL,
            SolveStatus.PRIMAL_INFEASIBLE,
            SolveStatus.UNBOUNDED,
        ):
            return res
        if res.status is SolveStatus.NEAR_OPTIMAL:
            if fallback is None or max(res.residuals.values()) < max(fallback.residuals.values()):
                fallback = res
    return fallback or SolveResult(SolveStatus.NUMERICAL_TROUBLE, solver=",".join(settings.solvers))


# -- SDPA sparse format -----------------------------------------------------


def to_sdpa(cp_: ConeProgram) -> str:
    """Render ``cp_`` in SDPA sparse format.

    Block variables are expanded into one scalar per upper-triangle entry,
    equalities become pairs of inequalities and all linear rows share one
    diagonal block.  SDPA minimises, so a max objective is negated.
    """
    cp_.validate()
    # variable layout: scalars first, then upper triangles of each block
    block_vars: list[list[tuple[int, int]]] = []
    m = cp_.n_scalar
    offsets = []
    for k in cp_.block_sizes:
        pairs = [(i, j) for i in range(k) for j in range(i, k)]
        offsets.append(m)
        block_vars.append(pairs)
        m += len(pairs)

    def flat_row(scalar, blocks) -> dict[int, float]:
        row: dict[int, float] = {}
        for i, a in scalar.items():
            row[i] = row.get(i, 0.0) + a
        for j, A in blocks.items():
            for v, (p, q) in enumerate(block_vars[j]):
                coef = A[p, q] if p == q else 2 * A[p, q]
                if coef:
                    row[offsets[j] + v] = row.get(offsets[j] + v, 0.0) + coef
        return row

    sign = 1.0 if cp_.sense == "min" else -1.0
    c = np.zeros(m)
    for i, a in flat_row(cp_.obj_scalar, cp_.obj_blocks).items():
        c[i] = sign * a

    # linear rows as  rhs - a.x >= 0
    lp_rows: list[tuple[dict[int, float], float]] = []
    for i, flag in enumerate(cp_.nonneg):
        if flag:
            lp_rows.append(({i: 1.0}, 0.0))
    for con in cp_.constraints:
        row = flat_row(con.scalar, con.blocks)
        lp_rows.append(({k: -v for k, v in row.items()}, -con.rhs))
        if con.kind == "==":
            lp_rows.append((row, con.rhs))

    struct: list[int] = []
    entries: list[tuple[int, int, int, int, float]] = []
    blk = 0
    if lp_rows:
        blk += 1
        struct.append(-len(lp_rows))
        for r, (row, rhs) in enumerate(lp_rows, start=1):
            # row.x - rhs >= 0, so F_i = row coefficient and F_0 = rhs
            if rhs:
                entries.append((0, blk, r, r, rhs))
            for i, v in row.items():
                entries.append((i + 1, blk, r, r, v))
    for j, k in enumerate(cp_.block_sizes):
        blk += 1
        struct.append(k)
        for v, (p, q) in enumerate(block_vars[j]):
            entries.append((offsets[j] + v + 1, blk, p + 1, q + 1, 1.0))
    for L in cp_.lmis:
        blk += 1
        struct.append(L.size)
        for p in range(L.size):
            for q in range(p, L.size):
                if L.constant[p, q]:
                    entries.append((0, blk, p + 1, q + 1, -L.constant[p, q]))
        for i, F in L.terms.items():
            for p in range(L.size):
                for q in range(p, L.size):
                    if F[p, q]:
                        entries.append((i + 1, blk, p + 1, q + 1, F[p, q]))

    lines = [
        '"sosfrac conic program (scalars then block upper triangles)"',
        f"{m} = mDIM",
        f"{len(struct)} = nBLOCK",
        " ".join(str(s) for s in struct) + " = bLOCKsTRUCT",
        " ".join(repr(float(v)) for v in c),
    ]
    lines += [f"{a} {b} {i} {j} {float(v)!r}" for a, b, i, j, v in entries]
    return "\n".join(lines) + "\n"


def write_sdpa(cp_: ConeProgram, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(to_sdpa(cp_))
