import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cpsclp import lp, mip
from cpsclp.instance import RobustConfig, generate
from cpsclp.mip import (BranchRule, CallbackHooks, MipStatus, Node, NodeSelection, SolverParams,
                        branch, separate_cone_cut, solve_mip)
from cpsclp.model import (BINARY, CONTINUOUS, FormulationKind, LinearRow, ModelIR, VarDecl,
                          build_extended_robust, build_perspective)


def binary_model(c, rows, kind=FormulationKind.DETERMINISTIC_MIQP):
    vars_ = tuple(VarDecl(f"y[{k}]", BINARY, 0.0, 1.0, float(ck)) for k, ck in enumerate(c))
    lin = tuple(LinearRow(tuple((k, float(a)) for k, a in enumerate(coefs) if a), s, float(b))
                for coefs, s, b in rows)
    return ModelIR(kind, vars_, lin)


def test_cone_cut_example():
    cut = separate_cone_cut((2.0, 1.0, 1.0), 1e-9)
    assert cut is not None
    # 4v - u - 4y <= 0 up to positive scaling; violated by 3 at the point
    scale = 4.0 / cut.cv
    np.testing.assert_allclose(np.array([cut.cv, cut.cu, cut.cy]) * scale, [4.0, -1.0, -4.0])
    assert cut.violation(2.0, 1.0, 1.0) * scale == pytest.approx(3.0)


def test_no_cut_on_cone_or_origin():
    assert separate_cone_cut((1.0, 1.0, 1.0), 1e-9) is None
    assert separate_cone_cut((0.0, 0.0, 0.0), 1e-9) is None


def test_apex_point_gets_a_cut():
    cut = separate_cone_cut((1.0, 0.0, 0.0), 1e-9)
    assert cut is not None and cut.violation(1.0, 0.0, 0.0) > 0


@settings(max_examples=300, deadline=None)
@given(st.tuples(st.floats(-50, 50), st.floats(0, 50), st.floats(0, 1)),
       st.tuples(st.floats(-30, 30), st.floats(0, 1)))
def test_cone_cuts_are_globally_valid(point, cone_pt):
    cut = separate_cone_cut(point, 1e-9)
    if cut is None:
        return
    assert cut.violation(*point) > 0
    v, y = cone_pt
    if y <= 0:
        return
    u = v * v / y
    for t in (1.0, 2.0, 10.0):
        assert cut.violation(v * t, u * t, y * t) <= 1e-9 * max(1.0, abs(v * t), u * t)


def test_branch_examples():
    root = Node(np.zeros(2), np.ones(2))
    b = np.array([0, 1])
    assert branch(root, np.array([0.5, 0.0]), b)[0].branch_var == 0
    assert branch(root, np.array([0.3, 0.5]), b)[0].branch_var == 1
    lo, hi = branch(root, np.array([0.5, 0.5]), b)
    assert lo.branch_var == 0 and lo.ub[0] == 0.0 and hi.lb[0] == 1.0
    with pytest.raises(mip.MipError):
        branch(root, np.array([1.0, 0.0]), b)


def test_knapsack_toy():
    rep = solve_mip(binary_model([-1, -1], [([1, 1], "<", 1)]))
    assert rep.status is MipStatus.OPTIMAL
    assert rep.objective == pytest.approx(-1.0)
    assert rep.nodes <= 3


def test_pure_lp_matches_lp_solve():
    vars_ = (VarDecl("a", CONTINUOUS, 0, 4, -1.0), VarDecl("b", CONTINUOUS, 0, 4, -2.0))
    rows = (LinearRow(((0, 1.0), (1, 1.0)), "<", 5.0), LinearRow(((0, 1.0), (1, -1.0)), "<", 1.0))
    ir = ModelIR(FormulationKind.DETERMINISTIC_MIQP, vars_, rows)
    rep = solve_mip(ir)
    ref = lp.solve(ir.to_lp_problem())
    assert rep.objective == pytest.approx(ref.objective, abs=1e-12)
    assert rep.nodes == 1


def test_infeasible_model():
    rep = solve_mip(binary_model([1, 1], [([1, 1], ">", 3)]))
    assert rep.status is MipStatus.INFEASIBLE and rep.incumbent is None


def enumerate_binary(c, rows):
    best = math.inf
    for bits in itertools.product((0, 1), repeat=len(c)):
        x = np.array(bits, dtype=float)
        ok = True
        for coefs, s, b in rows:
            a = float(np.dot(coefs, x))
            ok &= a <= b + 1e-9 if s == "<" else a >= b - 1e-9
        if ok:
            best = min(best, float(np.dot(c, x)))
    return best


@pytest.mark.parametrize("rule,sel", [(BranchRule.MOST_FRACTIONAL, NodeSelection.BEST_BOUND),
                                      (BranchRule.PSEUDO_COST, NodeSelection.DEPTH_FIRST)])
def test_branch_and_bound_vs_enumeration(rule, sel):
    rng = np.random.default_rng(31)
    params = SolverParams(branch_rule=rule, node_selection=sel)
    for _ in range(25):
        n = int(rng.integers(3, 13))
        m = int(rng.integers(1, 5))
        c = rng.integers(-10, 11, n)
        rows = [(rng.integers(-3, 8, n), "<" if rng.random() < 0.7 else ">",
                 float(rng.integers(0, 3 * n))) for _ in range(m)]
        ref = enumerate_binary(c, rows)
        rep = solve_mip(binary_model(c, rows), params)
        if math.isinf(ref):
            assert rep.status is MipStatus.INFEASIBLE
        else:
            assert rep.status is MipStatus.OPTIMAL
            assert rep.objective == pytest.approx(ref, abs=1e-9)
            trace = np.array(rep.extra["bound_trace"])
            trace = trace[np.isfinite(trace)]
            assert np.all(np.diff(trace) >= -1e-9 * max(1.0, abs(ref)))


def test_lazy_hook_is_respected():
    calls = []

    def on_int(pt):
        calls.append(pt.copy())
        if pt[0] > 0.5:
            return [LinearRow(((0, 1.0),), "<", 0.0, "lazy")]
        return None

    rep = solve_mip(binary_model([-3, -1], []), hooks=CallbackHooks(on_integer_candidate=on_int))
    assert rep.objective == pytest.approx(-1.0)
    assert rep.value("y[0]") == 0.0
    assert rep.lazy_cuts == 1
    assert calls


def test_perspective_and_extended_agree():
    inst = generate(0, 4, 10, 30.0, 0.5)
    cfg = RobustConfig(3)
    a = solve_mip(build_extended_robust(inst, cfg))
    b = solve_mip(build_perspective(inst, cfg))
    assert a.objective == pytest.approx(b.objective, rel=1e-6)
    assert b.bound <= b.objective + 1e-9 * abs(b.objective)
    ir = build_perspective(inst, cfg)
    x = b.incumbent
    assert ir.max_row_violation(x) <= 1e-7
    for cone in ir.cone_rows:
        assert x[cone.v] ** 2 - x[cone.u] * x[cone.y] <= 1e-6 * max(1.0, x[cone.v] ** 2)


def test_time_limit_report():
    inst = generate(3, 8, 30, 30.0, 0.5)
    rep = solve_mip(build_extended_robust(inst, RobustConfig(10)), SolverParams(time_limit=0.3))
    assert rep.status in (MipStatus.TIME_LIMIT, MipStatus.OPTIMAL)
    if rep.status is MipStatus.TIME_LIMIT:
        assert rep.bound <= rep.objective or math.isinf(rep.objective)


def test_report_json_roundtrip():
    rep = solve_mip(binary_model([-1, -1], [([1, 1], "<", 1)]))
    data = json.loads(rep.to_json())
    assert data["status"] == "Optimal"
    assert data["gap"] == 0.0
    assert set(data["incumbent"]) == {"y[0]", "y[1]"}


def test_relative_gap():
    assert mip.relative_gap(10.0, 9.0) == pytest.approx(0.1)
    assert mip.relative_gap(0.5, 0.0) == pytest.approx(0.5)
    assert math.isinf(mip.relative_gap(math.inf, 0.0))


def test_params_validation():
    with pytest.raises(ValueError):
        SolverParams(int_tol=0.0)
    with pytest.raises(ValueError):
        SolverParams(mip_gap=-1.0)
    assert SolverParams(node_selection="DepthFirst").node_selection is NodeSelection.DEPTH_FIRST


def test_requires_minimization():
    ir = ModelIR(FormulationKind.BENDERS_SUBPROBLEM, (VarDecl("a", CONTINUOUS, 0, 1, 1.0),), (),
                 sense="max")
    with pytest.raises(mip.MipError):
        solve_mip(ir)
