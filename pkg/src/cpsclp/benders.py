"""Benders decomposition over the perspective master.

The master keeps ``(y, v, u)`` and the cones; the subproblem computes the
maximum worst-case coverage ``phi'(y, v)`` with ``y`` and ``v`` pinned by
bounds, so the reduced costs of those pinned columns are subgradients of
``phi'`` and give the normalized feasibility cut

    phi'(ybar, vbar) + r_y . (y - ybar) + r_v . (v - vbar) >= D.

With the epsilon option, zero (or tiny) anchor components are lifted to
``epsilon`` before solving, which picks a less degenerate dual solution; the
value is then moved back to the true anchor along the same hyperplane.
"""

from __future__ import annotations

import dataclasses
import enum
import json
import logging
import math
import time
from typing import Optional, Union

import numpy as np

from . import lp
from .instance import Instance, RobustConfig
from .mip import CallbackHooks, MipStatus, SolveReport, SolverParams, solve_mip
from .model import LinearRow, build_master, build_subproblem

log = logging.getLogger(__name__)


class BendersError(RuntimeError):
    pass


class CutOrigin(str, enum.Enum):
    INTEGER_CANDIDATE = "IntegerCandidate"
    ROOT_FRACTIONAL = "RootFractional"


@dataclasses.dataclass(frozen=True)
class BendersCut:
    phi: float
    r_y: np.ndarray
    r_v: np.ndarray
    y_bar: np.ndarray
    v_bar: np.ndarray
    demand: float
    perturbed: bool = False
    origin: CutOrigin = CutOrigin.INTEGER_CANDIDATE

    @property
    def constant(self) -> float:
        """Constant term once the anchor is expanded: ``lhs = constant + r_y.y + r_v.v``."""
        return self.phi - float(self.r_y @ self.y_bar) - float(self.r_v @ self.v_bar)

    def lhs(self, y, v) -> float:
        return self.constant + float(self.r_y @ np.asarray(y, float)) + float(self.r_v @ np.asarray(v, float))

    def slack(self, y, v) -> float:
        """``lhs - D``; negative means the point violates the cut."""
        return self.lhs(y, v) - self.demand

    def as_row(self, y_idx, v_idx) -> LinearRow:
        # reduced-cost noise below this level only hurts conditioning
        tiny = 1e-11 * max(1.0, float(np.abs(self.r_y).max(initial=0.0)),
                           float(np.abs(self.r_v).max(initial=0.0)))
        coefs = [(int(k), float(a)) for k, a in zip(y_idx, self.r_y) if abs(a) > tiny]
        coefs += [(int(k), float(a)) for k, a in zip(v_idx, self.r_v) if abs(a) > tiny]
        return LinearRow(tuple(coefs), ">", self.demand - self.constant, "bcut")

    def key(self) -> tuple:
        return tuple(np.concatenate([self.r_y, self.r_v, [self.constant]]).round(12))

    def to_dict(self) -> dict:
        return {
            "phi": self.phi,
            "r_y": self.r_y.tolist(),
            "r_v": self.r_v.tolist(),
            "y_bar": self.y_bar.tolist(),
            "v_bar": self.v_bar.tolist(),
            "demand": self.demand,
            "perturbed": self.perturbed,
            "origin": self.origin.value,
        }


@dataclasses.dataclass(frozen=True)
class CutDiagnostic:
    """Returned instead of a cut when the anchor satisfies the inequality."""

    message: str
    phi: float
    demand: float


@dataclasses.dataclass
class Evaluation:
    phi: float
    r_y: np.ndarray
    r_v: np.ndarray
    perturbed: bool = False
    phi_perturbed: float = math.nan
    phi_direct: float = math.nan

    def __iter__(self):
        return iter((self.phi, self.r_y, self.r_v))


class SubproblemHandle:
    """Prepared subproblem LP; evaluations only move the fixing bounds."""

    def __init__(self, instance: Instance, config: RobustConfig,
                 lp_options: Optional[lp.LpOptions] = None):
        self.ir, self.fixing = build_subproblem(instance, config)
        self.problem = self.ir.to_lp_problem()
        self.basis: Optional[lp.Basis] = None
        self.demand = float(instance.target_demand)
        self.lp_options = lp_options
        self.solves = 0
        self.last_solution: Optional[lp.LpSolution] = None

    def solve_at(self, ybar, vbar) -> lp.LpSolution:
        self.fixing.fix(self.problem, ybar, vbar)
        sol = lp.solve(self.problem, self.basis, self.lp_options)
        if sol.status is not lp.Status.OPTIMAL and self.basis is not None:
            sol = lp.solve(self.problem, None, self.lp_options)
        self.solves += 1
        if sol.status is not lp.Status.OPTIMAL:
            raise BendersError(f"subproblem LP returned {sol.status.value}")
        self.basis = sol.basis
        self.last_solution = sol
        return sol


def perturb(ybar, vbar, epsilon: float, tol_beta: float):
    """Replace components ``<= tol_beta`` by ``epsilon``."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    if tol_beta < 0:
        raise ValueError("tol_beta must be non-negative")
    y = np.asarray(ybar, dtype=float)
    v = np.asarray(vbar, dtype=float)
    return np.where(y <= tol_beta, epsilon, y), np.where(v <= tol_beta, epsilon, v)


def unperturbed_value(phi_e: float, ybar, vbar, ye, ve, r_y, r_v) -> float:
    """Carry a value computed at ``(ye, ve)`` back to ``(ybar, vbar)`` along the reduced costs.

    Uses the exact anchor differences, so components that were small but
    nonzero before perturbation are handled as well as exact zeros.
    """
    dy = np.asarray(ybar, float) - np.asarray(ye, float)
    dv = np.asarray(vbar, float) - np.asarray(ve, float)
    return float(phi_e) + float(np.asarray(r_y) @ dy) + float(np.asarray(r_v) @ dv)


def _clean(ybar, vbar):
    return np.clip(np.asarray(ybar, dtype=float), 0.0, 1.0), np.maximum(np.asarray(vbar, dtype=float), 0.0)


def evaluate(handle: SubproblemHandle, ybar, vbar, use_epsilon: bool = False,
             params: Optional[SolverParams] = None, audit: bool = False) -> Evaluation:
    """``phi'`` at the anchor with the reduced costs of the pinned ``y`` and ``v``.

    With ``use_epsilon`` the LP is solved at the perturbed anchor and the value
    is carried back along the cut hyperplane; ``audit`` additionally solves at
    the true anchor and stores that value in ``phi_direct``.
    """
    p = params or SolverParams()
    ybar, vbar = _clean(ybar, vbar)
    if use_epsilon:
        ye, ve = perturb(ybar, vbar, p.epsilon, p.tol_beta)
    else:
        ye, ve = ybar, vbar
    sol = handle.solve_at(ye, ve)
    r_y = sol.reduced_costs[handle.fixing.y].copy()
    r_v = sol.reduced_costs[handle.fixing.v].copy()
    phi_e = sol.objective
    phi = unperturbed_value(phi_e, ybar, vbar, ye, ve, r_y, r_v)
    ev = Evaluation(phi, r_y, r_v, perturbed=use_epsilon, phi_perturbed=phi_e)
    if audit and use_epsilon:
        ev.phi_direct = handle.solve_at(ybar, vbar).objective
    return ev


def make_cut(phi: float, ybar, vbar, r_y, r_v, demand: float, *, perturbed: bool = False,
             origin: CutOrigin = CutOrigin.INTEGER_CANDIDATE) -> Union[BendersCut, CutDiagnostic]:
    ybar, vbar = _clean(ybar, vbar)
    cut = BendersCut(float(phi), np.asarray(r_y, float), np.asarray(r_v, float), ybar, vbar,
                     float(demand), perturbed, CutOrigin(origin))
    if not cut.slack(ybar, vbar) < 0:
        msg = (f"anchor satisfies its own cut (phi'={phi:.10g}, D={demand:.10g})"
               + ("; epsilon too large" if perturbed else ""))
        log.warning(msg)
        return CutDiagnostic(msg, float(phi), float(demand))
    return cut


def violated(phi: float, demand: float, is_integral: bool, params: Optional[SolverParams] = None) -> bool:
    if not demand > 0:
        raise ValueError("demand must be positive")
    p = params or SolverParams()
    tol = p.tol_alpha_int if is_integral else p.tol_alpha_frac
    return phi / demand < 1.0 - tol


class CutPool:
    """Emitted cuts with duplicate filtering (coefficients equal within 1e-12)."""

    def __init__(self):
        self.cuts: list[BendersCut] = []
        self._keys: set = set()
        self.duplicates = 0

    def add(self, cut: BendersCut) -> bool:
        k = cut.key()
        if k in self._keys:
            self.duplicates += 1
            return False
        self._keys.add(k)
        self.cuts.append(cut)
        return True

    def __len__(self):
        return len(self.cuts)

    def to_dict(self) -> dict:
        return {"cuts": [c.to_dict() for c in self.cuts], "duplicates": self.duplicates}

    def to_json(self) -> str:
        return json.dumps([c.to_dict() for c in self.cuts], indent=1)

    def dump(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_json())


@dataclasses.dataclass
class BendersStats:
    """Side records of one Benders run, for audits and reporting."""

    evaluations: int = 0
    audits: list = dataclasses.field(default_factory=list)  # (phi back-converted, phi direct)
    diagnostics: list = dataclasses.field(default_factory=list)
    fallbacks: int = 0


class _Separator:
    def __init__(self, instance, config, params, use_epsilon, audit, pool, stats):
        self.handle = SubproblemHandle(instance, config)
        self.params = params
        self.use_epsilon = use_epsilon
        self.audit = audit
        self.pool = pool
        self.stats = stats
        self.demand = float(instance.target_demand)

    def _eval(self, y, v, use_eps):
        ev = evaluate(self.handle, y, v, use_eps, self.params, audit=self.audit and use_eps)
        self.stats.evaluations += 1
        if ev.perturbed and self.audit:
            self.stats.audits.append((ev.phi, ev.phi_direct))
        return ev

    def separate(self, y, v, integral: bool, origin: CutOrigin):
        """Returns ``(cut or None, evaluation)``."""
        ev = self._eval(y, v, self.use_epsilon)
        if not violated(ev.phi, self.demand, integral, self.params):
            if not (self.use_epsilon and integral):
                return None, ev
            # never accept an incumbent on the strength of a perturbed value alone
            ev0 = self._eval(y, v, False)
            if not violated(ev0.phi, self.demand, True, self.params):
                return None, ev0
            self.stats.fallbacks += 1
            self.stats.diagnostics.append(
                f"perturbed phi'={ev.phi:.10g} but direct phi'={ev0.phi:.10g}: epsilon too large")
            ev = ev0
        cut = make_cut(ev.phi, y, v, ev.r_y, ev.r_v, self.demand, perturbed=ev.perturbed, origin=origin)
        if isinstance(cut, CutDiagnostic):
            self.stats.diagnostics.append(cut.message)
            return None, ev
        return cut, ev


def _final_phi(instance, config, report: SolveReport, y_idx, v_idx) -> float:
    if report.incumbent is None:
        return math.nan
    h = SubproblemHandle(instance, config)
    return h.solve_at(report.incumbent[y_idx], report.incumbent[v_idx]).objective


def solve_single_tree(instance: Instance, config: RobustConfig, params: Optional[SolverParams] = None,
                      use_epsilon: bool = False, audit: bool = False) -> SolveReport:
    """Branch-and-cut on the master with Benders cuts from callbacks."""
    p = params or SolverParams()
    master = build_master(instance, config)
    y_idx, v_idx = master.families["y"], master.families["v"]
    pool, stats = CutPool(), BendersStats()
    sep = _Separator(instance, config, p, use_epsilon, audit, pool, stats)

    def on_integer(pt):
        cut, _ = sep.separate(pt[y_idx], pt[v_idx], True, CutOrigin.INTEGER_CANDIDATE)
        if cut is None:
            return None
        pool.add(cut)
        return [cut.as_row(y_idx, v_idx)]

    def on_fractional(pt):
        cut, _ = sep.separate(pt[y_idx], pt[v_idx], False, CutOrigin.ROOT_FRACTIONAL)
        if cut is None or not pool.add(cut):
            return []
        return [cut.as_row(y_idx, v_idx)]

    report = solve_mip(master, p, CallbackHooks(on_integer, on_fractional))
    report.extra.update(_extras(stats, pool, sep.handle))
    report.extra["phi_final"] = _final_phi(instance, config, report, y_idx, v_idx)
    report.extra["cut_pool"] = pool
    return report


def solve_multi_tree(instance: Instance, config: RobustConfig, params: Optional[SolverParams] = None,
                     use_epsilon: bool = False, audit: bool = False) -> SolveReport:
    """Repeated master solves, one Benders cut per violated master optimum."""
    p = params or SolverParams()
    t0 = time.perf_counter()
    master = build_master(instance, config)
    y_idx, v_idx = master.families["y"], master.families["v"]
    pool, stats = CutPool(), BendersStats()
    sep = _Separator(instance, config, p, use_epsilon, audit, pool, stats)
    rows: list[LinearRow] = []
    node_counts: list[float] = []
    best_lb = -math.inf
    status = MipStatus.TIME_LIMIT
    objective = math.inf
    incumbent = None
    k = 0
    while True:
        left = p.time_limit - (time.perf_counter() - t0)
        if left <= 0:
            break
        k += 1
        rep = solve_mip(master.with_rows(rows), dataclasses.replace(p, time_limit=left))
        node_counts.append(rep.nodes)
        if math.isfinite(rep.bound):
            best_lb = max(best_lb, rep.bound)
        if rep.status is MipStatus.INFEASIBLE:
            raise BendersError("master problem became infeasible")
        if rep.status is MipStatus.TIME_LIMIT:
            break
        pt = rep.incumbent
        cut, ev = sep.separate(pt[y_idx], pt[v_idx], True, CutOrigin.INTEGER_CANDIDATE)
        log.info("iter=%d master_obj=%.10g phi=%.10g cut=%s t=%.2f", k, rep.objective, ev.phi,
                 "yes" if cut is not None else "no", time.perf_counter() - t0)
        if cut is None:
            status = MipStatus.OPTIMAL
            objective = rep.objective
            incumbent = pt
            break
        pool.add(cut)
        rows.append(cut.as_row(y_idx, v_idx))
    report = SolveReport(
        status=status,
        objective=objective,
        bound=min(best_lb, objective),
        incumbent=incumbent,
        var_names=[v.name for v in master.variables],
        nodes=float(np.mean(node_counts)) if node_counts else 0.0,
        lazy_cuts=len(rows),
        frac_cuts=0,
        time=time.perf_counter() - t0,
    )
    report.extra.update(_extras(stats, pool, sep.handle))
    report.extra["iterations"] = k
    report.extra["phi_final"] = _final_phi(instance, config, report, y_idx, v_idx)
    report.extra["cut_pool"] = pool
    return report


def _extras(stats: BendersStats, pool: CutPool, handle: SubproblemHandle) -> dict:
    return {
        "evaluations": stats.evaluations,
        "subproblem_solves": handle.solves,
        "audits": stats.audits,
        "diagnostics": stats.diagnostics,
        "epsilon_fallbacks": stats.fallbacks,
        "duplicate_cuts": pool.duplicates,
    }
