import math

import numpy as np
import pytest

from conftest import xs
from sosfrac import (
    AssumptionViolated,
    CctPoint,
    FractionalProgram,
    MomentVector,
    NonAttainment,
    Polynomial,
    Slater,
    SolveConfig,
    Status,
    assemble_D,
    assemble_Q,
    cct_map,
    evaluate,
    extract_solution,
    min_convex_poly,
    perspective_eval,
    slater_check,
    solve_fractional,
)
from sosfrac.sdp import SolveStatus, solve
from sosfrac.verify import grid_oracle


# -- the transformation --------------------------------------------------------


def test_cct_map_at_fp1_minimiser(fp1):
    pt = cct_map([1.0, 1.0], fp1)
    assert np.allclose(pt.s, [1 / 6, 1 / 6])
    assert pt.t == pytest.approx(1 / 6)
    assert np.allclose(pt.x(), [1.0, 1.0])
    assert perspective_eval(fp1.g, pt.s, pt.t) + 1 == pytest.approx(0.0, abs=1e-14)


def test_cct_map_rejects_nonnegative_denominator(fp1):
    with pytest.raises(AssumptionViolated):
        cct_map([3.0, 0.0], fp1)
    with pytest.raises(ValueError):
        CctPoint(np.zeros(2), 0.0)


def test_perspective_reproduces_ratio(fp1, rng):
    # sample points with -g > 0
    for _ in range(100):
        r = 2.5 * math.sqrt(rng.uniform())
        th = rng.uniform(0, 2 * math.pi)
        x = np.array([r * math.cos(th), r * math.sin(th)])
        pt = cct_map(x, fp1)
        assert perspective_eval(fp1.f, pt.s, pt.t) == pytest.approx(fp1.ratio(x), rel=1e-10, abs=1e-12)
        assert np.allclose(pt.x(), x, atol=1e-12, rtol=0)
        assert perspective_eval(fp1.g, pt.s, pt.t) + 1 == pytest.approx(0.0, abs=1e-12)


# -- problem sizes ---------------------------------------------------------------


def test_fp1_dimensions(fp1):
    assert (fp1.n, fp1.m, fp1.max_degree, fp1.d) == (2, 3, 8, 4)
    D = assemble_D(fp1)
    assert D.block_sizes == [15]
    assert D.n_scalar == 4
    assert D.n_equalities == 45
    Q = assemble_Q(fp1)
    assert Q.n_scalar == 45
    assert Q.n_inequalities == 4
    assert Q.lmis[0].size == 15


def test_relaxation_order_is_at_least_one():
    (x,) = xs(1)
    fp = FractionalProgram(1, Polynomial.constant(1, 1.0), x - 2, [x - 1])
    assert fp.d == 1


def test_empty_constraint_list_gets_sentinel():
    (x,) = xs(1)
    fp = FractionalProgram(1, x**2, Polynomial.constant(1, -1.0))
    assert fp.sentinel
    assert fp.m == 1
    assert evaluate(fp.h[0], [123.0]) == -1.0


# -- the two conic programs ------------------------------------------------------


def test_fp1_sos_program_value(fp1):
    res = solve(assemble_D(fp1))
    assert res.status.has_solution
    assert res.value == pytest.approx(2 / 3, abs=1e-6)
    lam = res.x[:3]
    assert lam[0] == pytest.approx(0.0, abs=1e-5)
    assert lam[1] == pytest.approx(37 / 3, abs=1e-4)
    assert lam[2] == pytest.approx(13 / 3, abs=1e-4)


def test_fp1_moment_program_value(fp1):
    res = solve(assemble_Q(fp1))
    assert res.status.has_solution
    assert res.value == pytest.approx(2 / 3, abs=1e-6)
    mv = MomentVector(2, 4, res.x)
    assert mv.y0 == pytest.approx(1 / 6, abs=1e-6)
    assert np.allclose(mv.first_moments(), [1 / 6, 1 / 6], atol=1e-6)


def test_fp0_sos_program_value(fp0):
    res = solve(assemble_D(fp0))
    assert res.value == pytest.approx(0.0, abs=1e-6)


def test_fp0_moment_family_is_feasible(fp0):
    # Dirac at x = -1/eps scaled by eps: y0 = eps, y1 = -1, objective eps
    prog = assemble_Q(fp0)
    for eps in (1.0, 0.1, 0.01):
        mv = MomentVector.from_measure(1, 1, [[-1 / eps]], [eps])
        assert max(_q_residuals(prog, mv.y)) <= 1e-12
        assert prog.objective_value(mv.y, []) == pytest.approx(eps)


def _q_residuals(prog, y):
    from sosfrac.sdp import residuals

    return residuals(prog, y, []).values()


def test_unit_denominator_sos_value(unit_denominator):
    assert solve(assemble_D(unit_denominator)).value == pytest.approx(0.0, abs=1e-6)


# -- extraction ------------------------------------------------------------------


def test_extraction_of_a_dirac():
    mv = MomentVector.from_measure(2, 1, [[1.0, 1.0]], [1 / 6])
    assert np.allclose(extract_solution(mv), [1.0, 1.0])


def test_extraction_reports_vanishing_mass():
    mv = MomentVector(1, 1, np.array([1e-9, -1.0, 1e9]))
    out = extract_solution(mv, 1e-6)
    assert isinstance(out, NonAttainment)
    assert out.y0 == 1e-9


# -- convex polynomial minimisation ----------------------------------------------


def test_min_of_g_over_fp1_set(fp1):
    res = min_convex_poly(fp1.g, fp1.h, 2, 1)
    assert res.value == pytest.approx(-6.0, abs=1e-6)
    assert np.allclose(res.point, [1.0, 1.0], atol=1e-5)


def test_projection_onto_fp1_set(fp1):
    x1, x2 = xs(2)
    obj = (x1 - 3) ** 2 + (x2 - 3) ** 2
    res = min_convex_poly(obj, fp1.h, 2, 1)
    expected = 2 * (3 - math.sqrt(2)) ** 2
    assert res.value == pytest.approx(expected, abs=1e-6)
    assert np.allclose(res.point, [math.sqrt(2)] * 2, atol=1e-4)
    grid = grid_oracle(FractionalProgram(2, obj, Polynomial.constant(2, -1.0), fp1.h), [-2, 2], 401)
    assert res.value - 1e-6 <= grid.value <= res.value + grid.slack


def test_unbounded_linear_minimisation():
    (x,) = xs(1)
    res = min_convex_poly(x, [x - 1], 1, 1)
    assert res.status is SolveStatus.UNBOUNDED
    assert res.value == -math.inf


def test_min_convex_poly_rejects_high_degree():
    (x,) = xs(1)
    with pytest.raises(ValueError):
        min_convex_poly(x**4, [], 1, 1)


# -- Slater ------------------------------------------------------------------------


def test_slater_fp1(fp1):
    res = slater_check(fp1)
    assert res.satisfied is Slater.YES
    assert max(evaluate(h, res.witness) for h in fp1.h) < 0
    assert evaluate(fp1.g, res.witness) < 0


def test_hand_picked_interior_point_of_fp1(fp1):
    x_hat = [6 / 5, 6 / 5]
    assert [evaluate(h, x_hat) for h in fp1.h] == pytest.approx([-1.12, -0.2, -0.2])
    assert evaluate(fp1.g, x_hat) == pytest.approx(-5.12)


def test_slater_fails_on_a_single_point():
    (x,) = xs(1)
    fp = FractionalProgram(1, x**2, Polynomial.constant(1, -1.0), [x**2])
    res = slater_check(fp)
    assert res.satisfied is Slater.NO
    assert res.tau >= -1e-8


def test_slater_half_line():
    (x,) = xs(1)
    fp = FractionalProgram(1, x**2, Polynomial.constant(1, -1.0), [x - 1])
    res = slater_check(fp)
    assert res.satisfied is Slater.YES
    assert res.tau == pytest.approx(-1.0, abs=1e-6)


# -- the full pipeline -----------------------------------------------------------


def test_solve_fp1(fp1):
    rep = solve_fractional(fp1)
    assert rep.status is Status.SOLVED
    assert rep.value == pytest.approx(2 / 3, abs=1e-6)
    assert np.allclose(rep.x_bar, [1.0, 1.0], atol=1e-5)
    assert rep.y0 == pytest.approx(1 / 6, abs=1e-6)
    assert rep.gamma == pytest.approx(2 / 3, abs=1e-6)
    assert rep.certificate.valid
    vr = rep.verification
    assert vr.feasibility_residual <= 1e-6
    assert vr.dinkelbach_residual <= 1e-5
    assert vr.gram_residual <= 1e-7
    assert rep.value - 1e-6 <= vr.oracle_value <= rep.value + vr.oracle_slack
    assert rep.diagnostics["denominator_bounded"] is True
    assert rep.diagnostics["sup_neg_g"] == pytest.approx(6.0, abs=1e-6)


def test_solve_fp1_invariants(fp1):
    rep = solve_fractional(fp1, SolveConfig(oracle=False))
    assert rep.value_D <= rep.value_Q + 1e-6
    assert rep.value_D == pytest.approx(rep.value_Q, abs=1e-5)
    assert rep.y0 >= 1 / (-evaluate(fp1.g, rep.x_bar)) - 1e-6
    assert rep.diagnostics["value_at_point"] == pytest.approx(rep.value, abs=1e-5)


def test_solve_fp0_is_not_attained(fp0):
    rep = solve_fractional(fp0)
    assert rep.status is Status.SOLVED_VALUE_ONLY
    assert rep.value == pytest.approx(0.0, abs=1e-6)
    assert rep.y0 < 1e-6
    assert rep.x_bar is None
    assert rep.diagnostics["denominator_bounded"] is False


def test_solve_unit_denominator(unit_denominator):
    rep = solve_fractional(unit_denominator)
    assert rep.status is Status.SOLVED
    assert rep.value == pytest.approx(0.0, abs=1e-6)
    assert rep.x_bar[0] == pytest.approx(0.0, abs=1e-4)


def test_solve_without_constraints():
    x1, x2 = xs(2)
    fp = FractionalProgram(2, (x1 - 1) ** 2 + x2**2 + 1, Polynomial.constant(2, -2.0))
    rep = solve_fractional(fp)
    assert rep.status is Status.SOLVED
    assert rep.value == pytest.approx(0.5, abs=1e-6)
    assert np.allclose(rep.x_bar, [1.0, 0.0], atol=1e-4)


def test_nonconvex_data_is_rejected():
    x1, x2 = xs(2)
    f = x1**4 - x2**2 + 5  # Hessian indefinite
    fp = FractionalProgram(2, f, Polynomial.constant(2, -1.0), [x1**2 + x2**2 - 1])
    rep = solve_fractional(fp)
    assert rep.status is Status.ASSUMPTION_VIOLATED
    assert rep.screening["f"].value == "Refuted"


def test_empty_feasible_set_is_infeasible():
    (x,) = xs(1)
    fp = FractionalProgram(1, x**2, Polynomial.constant(1, -1.0), [x**2 + 1])
    assert solve_fractional(fp).status is Status.INFEASIBLE


def test_negative_objective_is_unbounded():
    # f = x over x <= 1 is not nonnegative, so the moment problem runs off to -inf
    (x,) = xs(1)
    fp = FractionalProgram(1, x, Polynomial.constant(1, -1.0), [x - 1])
    rep = solve_fractional(fp)
    assert rep.status is Status.UNBOUNDED
