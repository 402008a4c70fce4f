"""Charnes-Cooper reformulation of SOS-convex fractional programs.

The fractional program

    minimise f(x) / (-g(x))   subject to   h_i(x) <= 0

is rewritten with ``s = x / (-g(x))``, ``t = 1 / (-g(x))`` and solved as a
single pair of semidefinite programs: the SOS problem over multipliers
(``max gamma`` with ``f + sum lambda_i h_i + gamma g`` SOS) and its moment
dual (``min L_y(f)`` with ``1 + L_y(g) <= 0``, ``L_y(h_i) <= 0`` and a PSD
moment matrix).  A minimiser is read off the first moments divided by
``y_0`` when ``y_0`` stays away from zero.
"""

from __future__ import annotations

import enum
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import verify
from .poly import Polynomial, evaluate, monomial_basis
from .sdp import ConeProgram, SolverSettings, SolveResult, SolveStatus, solve
from .sos import (
    GramCertificate,
    MomentVector,
    Verdict,
    coefficient_locator_matrices,
    is_sos_convex,
    locator_entries,
    make_certificate,
)

log = logging.getLogger(__name__)


class AssumptionViolated(ValueError):
    """The data break a standing assumption (convexity, positive denominator)."""


class Status(enum.Enum):
    SOLVED = "Solved"
    SOLVED_VALUE_ONLY = "SolvedValueOnly"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"
    ASSUMPTION_VIOLATED = "AssumptionViolated"
    NUMERICAL_TROUBLE = "NumericalTrouble"


@dataclass(frozen=True)
class FractionalProgram:
    """``min f/(-g)`` over ``{x : h_i(x) <= 0}``.

    An empty constraint list is replaced by the single constraint ``-1 <= 0``
    so that every program has at least one row.
    """

    n: int
    f: Polynomial
    g: Polynomial
    h: tuple[Polynomial, ...]
    sentinel: bool = False

    def __init__(self, n: int, f: Polynomial, g: Polynomial, h: Sequence[Polynomial] = ()):
        h = tuple(h)
        sentinel = not h
        if sentinel:
            h = (Polynomial.constant(n, -1.0),)
        for name, p in [("f", f), ("g", g)] + [(f"h{i + 1}", q) for i, q in enumerate(h)]:
            if p.n != n:
                raise ValueError(f"{name} has {p.n} variables, expected {n}")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "sentinel", sentinel)

    @property
    def m(self) -> int:
        return len(self.h)

    @property
    def max_degree(self) -> int:
        return max(p.degree for p in (self.f, self.g, *self.h))

    @property
    def d(self) -> int:
        """Relaxation order; at least 1 so that first moments exist."""
        return max(1, math.ceil(self.max_degree / 2))

    def ratio(self, x) -> float:
        return evaluate(self.f, x) / (-evaluate(self.g, x))


@dataclass(frozen=True)
class CctPoint:
    s: np.ndarray
    t: float

    def __post_init__(self):
        if not self.t > 0:
            raise ValueError(f"t must be positive, got {self.t}")
        object.__setattr__(self, "s", np.asarray(self.s, dtype=float))

    def x(self) -> np.ndarray:
        return self.s / self.t


def cct_map(x, fp: FractionalProgram) -> CctPoint:
    """``(s, t) = (x / -g(x), 1 / -g(x))``."""
    x = np.asarray(x, dtype=float)
    gx = evaluate(fp.g, x)
    if gx >= 0:
        raise AssumptionViolated(f"denominator -g(x) = {-gx} is not positive at x = {x.tolist()}")
    return CctPoint(x / -gx, 1.0 / -gx)


# -- problem assembly --------------------------------------------------


def assemble_D(fp: FractionalProgram) -> ConeProgram:
    """The SOS multiplier problem.

    Scalar layout: ``lambda_1..lambda_m`` then ``gamma`` (all nonnegative);
    block 0 is the Gram matrix on ``monomial_basis(n, d)``.
    """
    n, d = fp.n, fp.d
    prog = ConeProgram()
    lam = [prog.add_scalar(f"lambda{i + 1}", nonneg=True) for i in range(fp.m)]
    gamma = prog.add_scalar("gamma", nonneg=True)
    blk = prog.add_block(len(monomial_basis(n, d)))
    locators = coefficient_locator_matrices(n, d)
    for alpha in monomial_basis(n, 2 * d):
        scalar = {li: -h.coeff(alpha) for li, h in zip(lam, fp.h) if h.coeff(alpha)}
        if fp.g.coeff(alpha):
            scalar[gamma] = -fp.g.coeff(alpha)
        prog.add_constraint(scalar, {blk: locators[alpha]}, "==", fp.f.coeff(alpha), name=f"coef{alpha}")
    prog.set_objective("max", {gamma: 1.0})
    return prog


def _moment_program(n: int, d: int) -> tuple[ConeProgram, list]:
    prog = ConeProgram()
    full = monomial_basis(n, 2 * d)
    ys = [prog.add_scalar("y" + "".join(map(str, a))) for a in full]
    locators = coefficient_locator_matrices(n, d)
    size = len(monomial_basis(n, d))
    prog.add_lmi(np.zeros((size, size)), {yi: locators[a] for yi, a in zip(ys, full)}, name="moment")
    return prog, ys


def _riesz(p: Polynomial, n: int, d: int, ys) -> dict[int, float]:
    full = monomial_basis(n, 2 * d)
    return {ys[full.index(a)]: c for a, c in p.coeffs.items()}


def assemble_Q(fp: FractionalProgram) -> ConeProgram:
    """The moment problem; scalar ``k`` is ``y_a`` for the ``k``-th exponent in graded-lex order."""
    n, d = fp.n, fp.d
    prog, ys = _moment_program(n, d)
    prog.add_constraint(_riesz(fp.g, n, d, ys), kind="<=", rhs=-1.0, name="normalisation")
    for i, h in enumerate(fp.h):
        prog.add_constraint(_riesz(h, n, d, ys), kind="<=", rhs=0.0, name=f"h{i + 1}")
    prog.set_objective("min", _riesz(fp.f, n, d, ys))
    return prog


# -- extraction ---------------------------------------------------------


@dataclass
class NonAttainment:
    """The moment mass ``y_0`` vanished: the infimum is not attained."""

    y0: float
    reason: str = "moment mass y0 below attainment tolerance"


def extract_solution(mv: MomentVector, attainment_tol: float = 1e-6):
    """``x_i = y_{e_i} / y_0``, or :class:`NonAttainment` when ``y_0 < attainment_tol``."""
    if mv.y0 < attainment_tol:
        return NonAttainment(mv.y0)
    return mv.first_moments() / mv.y0


@dataclass
class ConvexMinResult:
    status: SolveStatus
    value: float
    point: np.ndarray | None
    moments: MomentVector | None = None
    raw: SolveResult | None = None


def min_convex_poly(
    objective: Polynomial,
    constraints: Sequence[Polynomial],
    n: int,
    d: int,
    settings: SolverSettings | None = None,
) -> ConvexMinResult:
    """First-order moment relaxation of ``min objective`` over ``{constraints <= 0}``.

    Exact when all data are SOS-convex.  The minimiser is the vector of
    first moments (``y_0`` is fixed to 1).  Unbounded problems report
    ``-inf``, infeasible ones ``+inf``.
    """
    for p in (objective, *constraints):
        if p.degree > 2 * d:
            raise ValueError(f"degree {p.degree} exceeds relaxation order 2d = {2 * d}")
    prog, ys = _moment_program(n, d)
    prog.add_constraint({ys[0]: 1.0}, kind="==", rhs=1.0, name="mass")
    for i, h in enumerate(constraints):
        prog.add_constraint(_riesz(h, n, d, ys), kind="<=", rhs=0.0, name=f"c{i + 1}")
    prog.set_objective("min", _riesz(objective, n, d, ys), constant=0.0)
    res = solve(prog, settings)
    if res.status is SolveStatus.UNBOUNDED:
        return ConvexMinResult(res.status, -math.inf, None, raw=res)
    if res.status is SolveStatus.PRIMAL_INFEASIBLE:
        return ConvexMinResult(res.status, math.inf, None, raw=res)
    if not res.status.has_solution:
        return ConvexMinResult(res.status, math.nan, None, raw=res)
    mv = MomentVector(n, d, res.x)
    return ConvexMinResult(res.status, res.value, mv.first_moments(), mv, res)


class Slater(enum.Enum):
    YES = "yes"
    NO = "no"
    INDETERMINATE = "indeterminate"


@dataclass
class SlaterResult:
    satisfied: Slater
    witness: np.ndarray | None = None
    tau: float | None = None
    reason: str = ""


def slater_check(
    fp: FractionalProgram,
    margin: float = 1e-6,
    zero_tol: float = 1e-8,
    settings: SolverSettings | None = None,
) -> SlaterResult:
    """Look for a strictly feasible point with the phase-1 program ``min tau``.

    The program is ``h_i(x) - tau <= 0`` with ``tau >= -1`` so that it
    stays bounded.  ``tau* < -margin`` gives a witness (also required to
    have ``g < 0``); ``tau* >= -zero_tol`` means no strict interior.
    """
    n = fp.n
    tau = Polynomial.variable(n, n + 1)
    rows = [h.embed(n + 1) - tau for h in fp.h] + [-tau - 1.0]
    d = max(1, math.ceil(max(p.degree for p in rows) / 2))
    res = min_convex_poly(tau, rows, n + 1, d, settings)
    if res.status is SolveStatus.PRIMAL_INFEASIBLE:
        return SlaterResult(Slater.NO, reason="phase-1 program infeasible")
    if not res.status.has_solution:
        return SlaterResult(Slater.INDETERMINATE, reason=f"phase-1 solve: {res.status.value}")
    tau_star = float(res.value)
    x_hat = res.point[:n]
    if tau_star < -margin:
        if max(evaluate(h, x_hat) for h in fp.h) < 0 and evaluate(fp.g, x_hat) < 0:
            return SlaterResult(Slater.YES, x_hat, tau_star)
        return SlaterResult(
            Slater.INDETERMINATE, x_hat, tau_star, "phase-1 point is not strictly feasible or has g >= 0"
        )
    if tau_star >= -zero_tol:
        return SlaterResult(Slater.NO, x_hat, tau_star, "no strictly feasible point")
    return SlaterResult(Slater.INDETERMINATE, x_hat, tau_star, "phase-1 value within the margin")


# -- pipeline -----------------------------------------------------------


@dataclass
class SolveConfig:
    psd_tol: float = 1e-8
    gram_tol: float = 1e-7
    gap_tol: float = 1e-5
    attainment_tol: float = 1e-6
    feas_tol: float = 1e-6
    kkt_tol: float = 1e-7
    slater_margin: float = 1e-6
    screen: bool = True
    oracle: bool | None = None  # None: run when n <= 2
    oracle_box: list | None = None
    oracle_steps: int | None = None
    solver: SolverSettings = field(default_factory=SolverSettings)

    def echo(self) -> dict:
        return {
            "psd_tol": self.psd_tol,
            "gram_tol": self.gram_tol,
            "gap_tol": self.gap_tol,
            "attainment_tol": self.attainment_tol,
            "feas_tol": self.feas_tol,
            "kkt_tol": self.kkt_tol,
            "slater_margin": self.slater_margin,
            "screen": self.screen,
            "oracle": self.oracle,
            "oracle_box": self.oracle_box,
            "oracle_steps": self.oracle_steps,
            "solvers": list(self.solver.solvers),
        }


@dataclass
class SolveReport:
    status: Status
    value: float | None = None
    x_bar: np.ndarray | None = None
    y0: float | None = None
    lam: np.ndarray | None = None
    gamma: float | None = None
    value_D: float | None = None
    value_Q: float | None = None
    certificate: GramCertificate | None = None
    moments: MomentVector | None = None
    verification: verify.VerificationReport | None = None
    slater: SlaterResult | None = None
    screening: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)
    config: SolveConfig | None = None


def _dual_certificate(fp: FractionalProgram, res: SolveResult, cfg: SolveConfig) -> GramCertificate:
    lam, gamma = res.x[: fp.m], res.x[fp.m]
    target = fp.f + gamma * fp.g
    for li, h in zip(lam, fp.h):
        target = target + li * h
    basis = monomial_basis(fp.n, fp.d).entries
    # zero coefficients are still pinned by the projection
    coeffs = {a: target.coeff(a) for a in locator_entries(basis)}
    return make_certificate(fp.n, basis, coeffs, res.blocks[0], cfg.psd_tol, cfg.gram_tol)


def screen_sos_convexity(fp: FractionalProgram, cfg: SolveConfig) -> dict[str, Verdict]:
    named = {"f": fp.f, "g": fp.g}
    if not fp.sentinel:
        named.update({f"h{i + 1}": h for i, h in enumerate(fp.h)})
    return {
        name: is_sos_convex(p, cfg.psd_tol, cfg.gram_tol, cfg.solver).verdict
        for name, p in sorted(named.items(), key=lambda kv: (kv[0][0], len(kv[0]), kv[0]))
    }


def solve_fractional(fp: FractionalProgram, config: SolveConfig | None = None) -> SolveReport:
    """Run the full pipeline and return a :class:`SolveReport`.

    Steps: SOS-convexity screening, Slater check, the moment and SOS
    programs, the duality-gap check, extraction, independent verification
    and the boundedness diagnostic for ``sup_K -g``.
    """
    cfg = config or SolveConfig()
    report = SolveReport(Status.NUMERICAL_TROUBLE, config=cfg)
    timings: dict[str, float] = {}
    report.diagnostics["timings"] = timings
    t0 = time.perf_counter()

    if cfg.screen:
        report.screening = screen_sos_convexity(fp, cfg)
        timings["screening"] = time.perf_counter() - t0
        refuted = [k for k, v in report.screening.items() if v is Verdict.REFUTED]
        if refuted:
            report.status = Status.ASSUMPTION_VIOLATED
            report.notes.append(f"not SOS-convex: {', '.join(refuted)}")
            return report
        unsure = [k for k, v in report.screening.items() if v is Verdict.INDETERMINATE]
        if unsure:
            report.notes.append(f"SOS-convexity indeterminate for: {', '.join(unsure)}")

    t = time.perf_counter()
    report.slater = slater_check(fp, cfg.slater_margin, settings=cfg.solver)
    timings["slater"] = time.perf_counter() - t

    t = time.perf_counter()
    res_Q = solve(assemble_Q(fp), cfg.solver)
    res_D = solve(assemble_D(fp), cfg.solver)
    timings["sdp"] = time.perf_counter() - t
    report.diagnostics["Q"] = _result_summary(res_Q)
    report.diagnostics["D"] = _result_summary(res_D)

    if res_Q.status is SolveStatus.PRIMAL_INFEASIBLE:
        report.status = Status.INFEASIBLE
        report.notes.append("moment problem infeasible: the feasible set is empty or -g is never positive on it")
        return report
    if res_Q.status is SolveStatus.UNBOUNDED:
        report.status = Status.UNBOUNDED
        report.value = -math.inf
        report.notes.append("moment problem unbounded below: f is not nonnegative on the feasible set")
        return report
    if not res_Q.status.has_solution:
        report.notes.append(f"moment problem: {res_Q.status.value} ({res_Q.backend_status})")
        return report

    mv = MomentVector(fp.n, fp.d, res_Q.x)
    report.moments = mv
    report.value_Q = res_Q.value
    report.value = res_Q.value
    report.y0 = mv.y0

    if res_D.status.has_solution:
        report.value_D = res_D.value
        report.lam = res_D.x[: fp.m].copy()
        report.gamma = float(res_D.x[fp.m])
        report.certificate = _dual_certificate(fp, res_D, cfg)
        weak = verify.weak_duality_check(res_D.value, res_Q.value, cfg.gap_tol)
        gap = abs(res_D.value - res_Q.value)
        report.diagnostics["duality_gap"] = gap
        report.diagnostics["weak_duality"] = weak
        if not weak or gap > cfg.gap_tol:
            report.notes.append(f"SOS and moment values disagree by {gap:.3e}")
            return report
    else:
        report.notes.append(f"SOS problem: {res_D.status.value}; value taken from the moment problem alone")

    t = time.perf_counter()
    bound = min_convex_poly(fp.g, fp.h, fp.n, fp.d, cfg.solver)
    timings["boundedness"] = time.perf_counter() - t
    sup_neg_g = -bound.value if not math.isnan(bound.value) else None
    report.diagnostics["sup_neg_g"] = sup_neg_g
    report.diagnostics["denominator_bounded"] = (
        None if sup_neg_g is None else bool(np.isfinite(sup_neg_g))
    )
    if sup_neg_g is not None and not np.isfinite(sup_neg_g):
        report.notes.append("sup of -g over the feasible set is +inf: attainment is not guaranteed")

    extracted = extract_solution(mv, cfg.attainment_tol)
    if isinstance(extracted, NonAttainment):
        report.status = Status.SOLVED_VALUE_ONLY
        report.notes.append(f"optimal value not attained (y0 = {mv.y0:.3e})")
        report.diagnostics["attained"] = False
        timings["total"] = time.perf_counter() - t0
        return report

    x_bar = extracted
    report.x_bar = x_bar
    report.diagnostics["attained"] = True
    fx, gx = evaluate(fp.f, x_bar), evaluate(fp.g, x_bar)
    if fx < -cfg.feas_tol or gx >= 0:
        report.status = Status.ASSUMPTION_VIOLATED
        report.notes.append(f"at x_bar: f = {fx:.3e}, g = {gx:.3e}; need f >= 0 and g < 0")
        return report

    t = time.perf_counter()
    report.verification = _verify(fp, report, cfg)
    timings["verify"] = time.perf_counter() - t
    report.diagnostics["denominator_bound"] = mv.y0 - 1.0 / (-gx)
    report.diagnostics["value_at_point"] = fx / (-gx)
    if report.verification.feasibility_residual > cfg.feas_tol:
        report.notes.append(
            f"extracted point violates constraints by {report.verification.feasibility_residual:.3e}"
        )
        return report
    report.status = Status.SOLVED
    timings["total"] = time.perf_counter() - t0
    return report


def _verify(fp: FractionalProgram, report: SolveReport, cfg: SolveConfig) -> verify.VerificationReport:
    x_bar, value = report.x_bar, report.value
    stat = comp = math.nan
    if report.lam is not None:
        point = cct_map(x_bar, fp)
        stat, comp = verify.kkt_residual_pcct(
            fp, point, np.append(report.lam, report.gamma), clear_denominators=False
        )
    gram = math.nan
    if report.certificate is not None:
        target = fp.f + report.gamma * fp.g
        for li, h in zip(report.lam, fp.h):
            target = target + li * h
        gram = verify.gram_residual(target, report.certificate)
    vr = verify.VerificationReport(
        feasibility_residual=verify.feasibility_residual(fp, x_bar),
        dinkelbach_residual=abs(verify.dinkelbach_residual(fp, x_bar, value)),
        kkt_stationarity_norm=stat,
        kkt_complementarity_norm=comp,
        gram_residual=gram,
    )
    run_oracle = cfg.oracle if cfg.oracle is not None else fp.n <= 2
    if run_oracle and fp.n <= verify.MAX_ORACLE_DIM:
        box = cfg.oracle_box or verify.default_box(x_bar)
        steps = cfg.oracle_steps or verify.default_steps(fp.n)
        try:
            orc = verify.grid_oracle(fp, box, steps)
            vr.oracle_value = orc.value
            vr.oracle_gap = orc.value - value
            vr.oracle_slack = orc.slack
        except verify.EmptyFeasibleGrid:
            report.notes.append("grid oracle found no feasible grid point")
        vr.oracle_box = [list(map(float, b)) for b in np.broadcast_to(np.asarray(box, float), (fp.n, 2))]
    return vr


def _result_summary(res: SolveResult) -> dict:
    return {
        "status": res.status.value,
        "solver": res.solver,
        "primal_objective": res.primal_objective,
        "dual_objective": res.dual_objective,
        "residuals": dict(res.residuals),
    }
