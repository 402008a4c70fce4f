import cvxpy as cp
import numpy as np
import pytest

from sosfrac import assemble_D, assemble_Q
from sosfrac.sdp import ConeProgram, SolverSettings, SolveStatus, residuals, solve, to_sdpa


def _one_by_one():
    prog = ConeProgram()
    t = prog.add_scalar("t")
    prog.add_lmi(np.zeros((1, 1)), {t: np.ones((1, 1))})
    prog.set_objective("min", {t: 1.0})
    return prog


def test_trivial_psd_scalar():
    res = solve(_one_by_one())
    assert res.status is SolveStatus.OPTIMAL
    assert res.x[0] == pytest.approx(0.0, abs=1e-8)


def test_infeasible_bounds():
    prog = ConeProgram()
    x = prog.add_scalar("x", nonneg=True)
    prog.add_constraint({x: 1.0}, kind="<=", rhs=-1.0)
    prog.set_objective("min", {x: 1.0})
    assert solve(prog).status is SolveStatus.PRIMAL_INFEASIBLE


def test_determinant_bound():
    # [[1, 3], [3, y]] >= 0  iff  y >= 9
    prog = ConeProgram()
    y = prog.add_scalar("y")
    prog.add_lmi([[1.0, 3.0], [3.0, 0.0]], {y: np.array([[0.0, 0.0], [0.0, 1.0]])})
    prog.set_objective("min", {y: 1.0})
    res = solve(prog)
    assert res.status is SolveStatus.OPTIMAL
    assert res.value == pytest.approx(9.0, abs=1e-6)
    assert res.gap <= 1e-7 * (1 + abs(res.value))


def test_block_form_same_problem():
    prog = ConeProgram()
    b = prog.add_block(2)
    prog.add_constraint(blocks={b: np.array([[1.0, 0.0], [0.0, 0.0]])}, rhs=1.0)
    prog.add_constraint(blocks={b: np.array([[0.0, 0.5], [0.5, 0.0]])}, rhs=3.0)
    prog.set_objective("max", blocks={b: -np.array([[0.0, 0.0], [0.0, 1.0]])})
    res = solve(prog)
    assert res.status is SolveStatus.OPTIMAL
    assert res.value == pytest.approx(-9.0, abs=1e-6)


def test_unbounded():
    prog = ConeProgram()
    x = prog.add_scalar("x")
    prog.add_constraint({x: 1.0}, kind="<=", rhs=1.0)
    prog.set_objective("min", {x: 1.0})
    assert solve(prog).status is SolveStatus.UNBOUNDED


def test_validation_catches_bad_references():
    prog = ConeProgram()
    prog.add_constraint({3: 1.0}, rhs=0.0)
    with pytest.raises(ValueError):
        prog.validate()
    prog = ConeProgram()
    b = prog.add_block(2)
    prog.add_constraint(blocks={b: np.array([[0.0, 1.0], [0.0, 0.0]])}, rhs=0.0)
    with pytest.raises(ValueError):
        prog.validate()
    with pytest.raises(ValueError):
        ConeProgram().add_block(0)


def test_optimal_solutions_recheck_independently(fp1):
    settings = SolverSettings()
    for prog in (assemble_Q(fp1), assemble_D(fp1)):
        res = solve(prog, settings)
        assert res.status.has_solution
        r = residuals(prog, res.x, res.blocks)
        assert max(r.values()) <= 10 * settings.feasibility_tol


def test_deterministic(fp1):
    a = solve(assemble_Q(fp1))
    b = solve(assemble_Q(fp1))
    assert np.array_equal(a.x, b.x)


def test_numerical_trouble_when_no_solver_works():
    res = solve(_one_by_one(), SolverSettings(solvers=("NOT_A_SOLVER",)))
    assert res.status is SolveStatus.NUMERICAL_TROUBLE


# -- SDPA round trip through an independent reader -----------------------------


def read_sdpa(text):
    lines = [ln for ln in text.splitlines() if ln and ln[0] not in '"*']
    m = int(lines[0].split()[0])
    nblocks = int(lines[1].split()[0])
    struct = [int(v) for v in lines[2].replace("=", " ").split()[:nblocks]]
    c = np.array([float(v) for v in lines[3].split()[:m]])
    F = [[np.zeros((abs(k), abs(k))) for k in struct] for _ in range(m + 1)]
    for ln in lines[4:]:
        i, b, r, s, v = ln.split()
        i, b, r, s, v = int(i), int(b) - 1, int(r) - 1, int(s) - 1, float(v)
        F[i][b][r, s] = v
        F[i][b][s, r] = v
    return c, F, struct


def solve_sdpa(c, F, struct):
    x = cp.Variable(len(c))
    cons = []
    for b, k in enumerate(struct):
        M = sum(x[i] * F[i + 1][b] for i in range(len(c))) - F[0][b]
        if k < 0:
            cons.append(cp.diag(M) >= 0)
        else:
            cons.append((M + M.T) / 2 >> 0)
    prob = cp.Problem(cp.Minimize(c @ x), cons)
    prob.solve(solver="CLARABEL")
    return prob.value


def test_sdpa_dump_of_determinant_problem():
    prog = ConeProgram()
    y = prog.add_scalar("y")
    prog.add_lmi([[1.0, 3.0], [3.0, 0.0]], {y: np.array([[0.0, 0.0], [0.0, 1.0]])})
    prog.set_objective("min", {y: 1.0})
    assert solve_sdpa(*read_sdpa(to_sdpa(prog))) == pytest.approx(9.0, abs=1e-5)


def test_sdpa_dump_with_block_and_equalities():
    prog = ConeProgram()
    b = prog.add_block(2)
    prog.add_constraint(blocks={b: np.array([[1.0, 0.0], [0.0, 0.0]])}, rhs=1.0)
    prog.add_constraint(blocks={b: np.array([[0.0, 0.5], [0.5, 0.0]])}, rhs=3.0)
    prog.set_objective("max", blocks={b: -np.array([[0.0, 0.0], [0.0, 1.0]])})
    # SDPA minimises the negated objective
    assert solve_sdpa(*read_sdpa(to_sdpa(prog))) == pytest.approx(9.0, abs=1e-5)


@pytest.mark.parametrize("which", ["Q", "D"])
def test_sdpa_dump_of_fp1_programs(fp1, which):
    prog = assemble_Q(fp1) if which == "Q" else assemble_D(fp1)
    value = solve_sdpa(*read_sdpa(to_sdpa(prog)))
    expected = 2 / 3 if which == "Q" else -2 / 3
    assert value == pytest.approx(expected, abs=1e-5)
