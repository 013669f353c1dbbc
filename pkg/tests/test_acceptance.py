"""End-to-end acceptance checks; each test prints one ``criterion N: PASS|FAIL`` line."""
import math
import time

import numpy as np
import pytest

from cpsclp import lp, mip, oracle, runner
from cpsclp.instance import CostParams, InstanceError, Mode, RobustConfig, generate
from cpsclp.model import build_extended_robust, build_perspective
from cpsclp.oracle import ProtectionQuery

from test_lp import check_optimality, fd_probes, random_box_lp, vertex_optimum

pytestmark = pytest.mark.slow


def rel_diff(a, b):
    return abs(a - b) / max(abs(a), abs(b), 1.0)


@pytest.fixture(scope="module")
def suite():
    """Twenty generated instances solved by all six methods."""
    t0 = time.perf_counter()
    cases = []
    for k in range(20):
        nf, nc = 5 + k % 3, 16 + 4 * (k % 3)
        inst = generate(100 + k, nf, nc, 30.0, 0.5)
        cfg = RobustConfig(runner.parse_gamma(f"{(10, 30, 50)[k % 3]}%", nc))
        runs = {m: runner.run_method(inst, cfg, m) for m in runner.METHODS}
        cases.append((inst, cfg, runs))
    return cases, time.perf_counter() - t0


@pytest.fixture(scope="module")
def sweeps():
    """Gamma sweeps of five instances in every mode, plus the deterministic optimum."""
    out = []
    for k in range(5):
        inst = generate(200 + k, 5, 20, 30.0, 0.5)
        rows = {}
        for mode in (Mode.LOAD_ONLY, Mode.COVERAGE_ONLY, Mode.BOTH):
            for g in runner.gamma_grid(inst.n_customers):
                rows[mode, g] = runner.run_method(inst, RobustConfig(g, mode), "misocp").row
        det = runner.run_method(inst, RobustConfig(0, Mode.DETERMINISTIC), "misocp").row
        out.append((inst, rows, det))
    return out


def test_dualized_protection_matches_bruteforce(verdict):
    rng = np.random.default_rng(1)
    t0 = time.perf_counter()
    worst, n = 0.0, 0
    while n < 240:
        nj = int(rng.integers(1, 13))
        g = int(rng.integers(0, nj + 1))
        dh = rng.integers(0, 30, nj) * rng.random(nj)
        if n % 2 == 0:
            q = ProtectionQuery(rng.random(nj) * (rng.random(nj) < 0.8), dh, g)
            terms, ref = q.alpha_terms(), oracle.alpha_bruteforce(q, "enumerate")
        else:
            x = rng.random((int(rng.integers(1, 4)), nj))
            x /= np.maximum(1.0, x.sum(axis=0))
            q = ProtectionQuery(x, dh, g)
            method = "enumerate" if g <= oracle.ENUM_MAX_BETA_GAMMA else "sort"
            terms, ref = q.beta_terms(), oracle.beta_bruteforce(q, method)
        _, r, s = oracle.protection_dual(terms, g)
        worst = max(worst, abs(g * r + float(np.sum(s)) - ref))
        n += 1
    elapsed = time.perf_counter() - t0
    verdict(1, worst <= 1e-8 and elapsed < 30,
            f"{n} queries, max |dual - bruteforce| = {worst:.2e}, {elapsed:.1f}s")


def test_extended_model_matches_enumeration(verdict):
    t0 = time.perf_counter()
    worst, n, seed = 0.0, 0, 0
    modes = list(Mode)
    while n < 20:
        try:
            inst = generate(seed, 4, 8, 40.0, 0.5, cost_params=CostParams(a=0.0))
            cfg = RobustConfig(seed % 9, modes[seed % len(modes)])
            ref = oracle.robust_lp_optimum_bruteforce(inst, cfg)
        except InstanceError:
            seed += 1
            continue
        got = mip.solve_mip(build_extended_robust(inst, cfg)).objective
        worst = max(worst, rel_diff(got, ref))
        n += 1
        seed += 1
    elapsed = time.perf_counter() - t0
    verdict(2, worst <= 1e-7 and elapsed < 120,
            f"{n} tiny instances, max rel diff = {worst:.2e}, {elapsed:.1f}s")


def test_six_methods_agree(suite, verdict):
    cases, elapsed = suite
    worst = 0.0
    ok = True
    for _, _, runs in cases:
        objs = [r.report.objective for r in runs.values()]
        ok &= all(r.report.status is mip.MipStatus.OPTIMAL for r in runs.values())
        worst = max(worst, (max(objs) - min(objs)) / max(abs(min(objs)), 1.0))
    verdict(3, ok and worst <= 1e-5 and elapsed < 900,
            f"{len(cases)} instances x {len(runner.METHODS)} methods, max spread = {worst:.2e}, "
            f"{elapsed:.0f}s")


def test_perspective_root_bound_dominates(suite, verdict):
    cases, _ = suite
    ok, strict = True, 0
    for inst, cfg, _ in cases:
        ext = mip.solve_relaxation(build_extended_robust(inst, cfg)).lower
        per = mip.solve_relaxation(build_perspective(inst, cfg)).lower
        ok &= per >= ext - 1e-9 * max(abs(ext), 1.0)
        strict += per > ext + 1e-9 * max(abs(ext), 1.0)
    verdict(4, ok and strict >= len(cases) / 2,
            f"dominates on all: {ok}, strictly greater on {strict}/{len(cases)}")


def test_gamma_sensitivity_shape(sweeps, verdict):
    notes = []
    mono = load_cov = saturated = ordered = True
    cov_over_load = total = 0
    for inst, rows, det in sweeps:
        grid = runner.gamma_grid(inst.n_customers)
        D = inst.target_demand
        for mode in (Mode.LOAD_ONLY, Mode.COVERAGE_ONLY, Mode.BOTH):
            vals = [rows[mode, g].objval for g in grid]
            mono &= all(b >= a - 1e-6 * max(abs(a), 1.0) for a, b in zip(vals, vals[1:]))
            star = runner.gamma_star([rows[mode, g] for g in grid], {rows[mode, 0].id: inst.n_customers})
            gs = next(iter(star.values()))
            saturated &= gs is not None and all(
                rel_diff(rows[mode, g].objval, vals[-1]) <= 1e-6 for g in grid if g >= gs)
            if mode is Mode.LOAD_ONLY:
                load_cov &= all(abs(rows[mode, g].cov - D) <= 1e-6 for g in grid)
        for g in grid:
            b, c, lo = (rows[m, g].objval for m in (Mode.BOTH, Mode.COVERAGE_ONLY, Mode.LOAD_ONLY))
            tol = 1e-6 * max(abs(b), 1.0)
            ordered &= b >= c - tol and b >= lo - tol and c >= det.objval - tol and lo >= det.objval - tol
            cov_over_load += c >= lo - tol
            total += 1
    notes.append(f"(a) monotone {mono}, (b) load-only Cov = D {load_cov}, (c) saturation {saturated}, "
                 f"(d) orderings {ordered}; coverage-only >= load-only at {cov_over_load}/{total} points")
    verdict(5, mono and load_cov and saturated and ordered, notes[0])


def test_epsilon_reduces_benders_cuts(suite, verdict):
    cases, _ = suite
    mean = {m: float(np.mean([runs[m].row.bcuts for _, _, runs in cases]))
            for m in ("st-ben", "steps-ben", "mt-ben", "mteps-ben")}
    red_st = 100 * (1 - mean["steps-ben"] / mean["st-ben"])
    red_mt = 100 * (1 - mean["mteps-ben"] / mean["mt-ben"])
    verdict(6, mean["steps-ben"] < mean["st-ben"] and mean["mteps-ben"] < mean["mt-ben"],
            f"mean BCuts ST {mean['st-ben']:.2f} -> STeps {mean['steps-ben']:.2f} ({red_st:.1f}% fewer), "
            f"MT {mean['mt-ben']:.2f} -> MTeps {mean['mteps-ben']:.2f} ({red_mt:.1f}% fewer)")


def test_benders_cut_audit(suite, verdict):
    cases, _ = suite
    n = 0
    worst_anchor, worst_opt = -math.inf, math.inf
    for inst, _, runs in cases:
        direct = runs["misocp"]
        for m in ("st-ben", "steps-ben", "mt-ben", "mteps-ben"):
            for cut in runs[m].report.extra["cut_pool"].cuts:
                n += 1
                worst_anchor = max(worst_anchor, cut.slack(cut.y_bar, cut.v_bar))
                worst_opt = min(worst_opt, cut.slack(direct.y, direct.v))
    verdict(7, n > 0 and worst_anchor < 0 and worst_opt >= -1e-7,
            f"{n} cuts, max anchor slack = {worst_anchor:.3g}, min slack at direct optimum = {worst_opt:.2e}")


def test_lp_core_against_oracles(verdict):
    rng = np.random.default_rng(2024)
    worst, mismatched = 0.0, 0
    for _ in range(500):
        A, senses, rhs, lb, ub, c, mx = random_box_lp(rng)
        ref = vertex_optimum(A, np.array(senses), rhs, lb, ub, c, mx)
        p = lp.LpProblem(A, senses, rhs, lb, ub, c, maximize=mx)
        s = lp.solve(p)
        if ref is None:
            mismatched += s.status is not lp.Status.INFEASIBLE
            continue
        if s.status is not lp.Status.OPTIMAL:
            mismatched += 1
            continue
        check_optimality(p, s)
        worst = max(worst, abs(s.objective - ref) / max(1.0, abs(ref)))
    smooth = fd_bad = 0
    for left, right, rc in fd_probes(np.random.default_rng(77), 100):
        if abs(left - right) <= 1e-6 * max(1.0, abs(left)):
            smooth += 1
            fd_bad += abs(rc - right) > 1e-3 * max(1.0, abs(right))
    verdict(8, mismatched == 0 and worst <= 1e-9 and smooth >= 100 and fd_bad == 0,
            f"500 LPs, max rel error {worst:.1e}, status mismatches {mismatched}; "
            f"{smooth} finite-difference probes, {fd_bad} disagreements")


def test_perturbed_back_conversion(suite, verdict):
    cases, _ = suite
    diffs = [abs(a - b) for _, _, runs in cases for m in ("steps-ben", "mteps-ben")
             for a, b in runs[m].report.extra["audits"]]
    worst = max(diffs) if diffs else math.inf
    verdict(9, bool(diffs) and worst <= 1e-6,
            f"{len(diffs)} perturbed evaluations, max |phi' - direct phi'| = {worst:.2e}")


def test_metric_identities(suite, sweeps, verdict):
    cases, _ = suite
    rows = [(inst, r.row) for inst, _, runs in cases for r in runs.values()]
    rows += [(inst, r) for inst, rs, det in sweeps for r in [*rs.values(), det]]
    decomp = max(abs(r.objval - (r.opencost + r.congcost)) for _, r in rows)
    zero = [abs(r.load * inst.n_facilities - r.cov) for inst, r in rows if r.gamma == 0]
    verdict(10, decomp <= 1e-6 and bool(zero) and max(zero) <= 1e-6,
            f"{len(rows)} rows, max |ObjVal - Open - Cong| = {decomp:.1e}, "
            f"{len(zero)} zero-budget rows with max |Load*|I| - Cov| = {max(zero):.1e}")
