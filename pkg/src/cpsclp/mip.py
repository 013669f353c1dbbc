"""LP-based branch-and-cut for the MIQP and MISOCP models.

Nonlinear pieces are handled by outer approximation on a single growing LP:

* rotated cones ``v**2 <= u*y`` by perspective tangent cuts
  ``u >= 2 r v - r**2 y`` (``r = v/y`` at the separated point), or by the
  homogeneous second-order-cone gradient cut near the apex ``y = 0``;
* quadratic objective terms ``q v**2`` by epigraph columns ``t`` with
  tangent cuts ``t >= q (2 w v - w**2)``.

All cuts are globally valid, so they live in one shared row pool.  Node
relaxations differ only in bounds, so any earlier optimal basis is dual
feasible for them and every solve warm-starts from the most recent one.  Incumbents are scored
with the exact nonlinear objective (``u`` replaced by ``v**2 / y``).
"""

from __future__ import annotations

import dataclasses
import enum
import heapq
import json
import logging
import math
import time
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.sparse as sp

from . import lp
from .model import LinearRow, ModelIR

log = logging.getLogger(__name__)

# Below this y value the tangent slope v/y is unreliable; use the SOC form.
_APEX_Y = 1e-7


class MipError(RuntimeError):
    pass


class NodeSelection(str, enum.Enum):
    BEST_BOUND = "BestBound"
    DEPTH_FIRST = "DepthFirst"


class BranchRule(str, enum.Enum):
    MOST_FRACTIONAL = "MostFractional"
    PSEUDO_COST = "PseudoCost"


class MipStatus(str, enum.Enum):
    OPTIMAL = "Optimal"
    TIME_LIMIT = "TimeLimit"
    INFEASIBLE = "Infeasible"


@dataclasses.dataclass
class SolverParams:
    time_limit: float = math.inf
    mip_gap: float = 0.0
    int_tol: float = 1e-9
    cone_tol: float = 1e-9
    tol_alpha_int: float = 1e-6
    tol_alpha_frac: float = 0.5
    tol_beta: float = 1e-8
    epsilon: float = 1e-8
    node_selection: NodeSelection = NodeSelection.BEST_BOUND
    branch_rule: BranchRule = BranchRule.MOST_FRACTIONAL
    root_frac_rounds: int = 3
    frac_cone_tol: float = 1e-6
    max_cut_rounds: int = 400
    purge_threshold: int = 150
    prune_tol: float = 1e-9
    log_interval: float = 5.0

    def __post_init__(self):
        self.node_selection = NodeSelection(self.node_selection)
        self.branch_rule = BranchRule(self.branch_rule)
        for name in ("int_tol", "cone_tol", "tol_alpha_int", "tol_alpha_frac", "tol_beta", "epsilon"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.mip_gap < 0:
            raise ValueError("mip_gap must be non-negative")
        if not self.time_limit > 0:
            raise ValueError("time_limit must be positive")


def relative_gap(obj: float, bound: float) -> float:
    if not (math.isfinite(obj) and math.isfinite(bound)):
        return math.inf
    return max(0.0, (obj - bound) / max(abs(obj), 1.0))


@dataclasses.dataclass
class SolveReport:
    status: MipStatus
    objective: float
    bound: float
    incumbent: Optional[np.ndarray]
    var_names: list[str]
    nodes: float = 0
    lazy_cuts: int = 0
    frac_cuts: int = 0
    time: float = 0.0
    extra: dict = dataclasses.field(default_factory=dict)

    @property
    def gap(self) -> float:
        return relative_gap(self.objective, self.bound)

    def value(self, name: str) -> float:
        return float(self.incumbent[self.var_names.index(name)])

    def to_dict(self) -> dict:
        def num(x):
            return x if math.isfinite(x) else None
        return {
            "status": self.status.value,
            "objective": num(self.objective),
            "bound": num(self.bound),
            "gap": num(self.gap),
            "incumbent": None if self.incumbent is None else dict(
                zip(self.var_names, map(float, self.incumbent))),
            "nodes": self.nodes,
            "lazy_cuts": self.lazy_cuts,
            "frac_cuts": self.frac_cuts,
            "time": self.time,
            "extra": {k: _plain(v) for k, v in self.extra.items()},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, default=float)


def _plain(obj):
    """Best-effort conversion of report extras into JSON-friendly values."""
    if hasattr(obj, "to_dict"):
        return obj.to_dict()
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {k: _plain(v) for k, v in dataclasses.asdict(obj).items()}
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, enum.Enum):
        return obj.value
    return obj


HookResult = Optional[Sequence[LinearRow]]


@dataclasses.dataclass
class CallbackHooks:
    """User callbacks receive a full point over the model's variables.

    ``on_integer_candidate`` returns violated cuts, or ``None``/empty to
    accept the candidate.  ``on_root_fractional`` returns cuts (possibly
    empty) for a fractional root relaxation point.
    """

    on_integer_candidate: Optional[Callable[[np.ndarray], HookResult]] = None
    on_root_fractional: Optional[Callable[[np.ndarray], HookResult]] = None


# -- cone separation ------------------------------------------------------------


@dataclasses.dataclass(frozen=True)
class ConeCut:
    """``cv*v + cu*u + cy*y <= rhs``."""

    cv: float
    cu: float
    cy: float
    rhs: float = 0.0

    def lhs(self, v, u, y):
        return self.cv * v + self.cu * u + self.cy * y

    def violation(self, v, u, y) -> float:
        return self.lhs(v, u, y) - self.rhs


def separate_cone_cut(point, cone_tol: float) -> Optional[ConeCut]:
    """Cut separating ``(v, u, y)`` from ``{v**2 <= u*y, u, y >= 0}``.

    Returns ``None`` when the violation ``v**2 - u*y`` is at most
    ``cone_tol * max(1, v**2)``.
    """
    v, u, y = (float(t) for t in point)
    viol = v * v - u * y
    if viol <= cone_tol * max(1.0, v * v):
        return None
    if y > _APEX_Y:
        r = v / y
        cut = ConeCut(2.0 * r, -1.0, -r * r)
    else:
        w1, w2 = 2.0 * v, u - y
        nrm = math.hypot(w1, w2)
        cut = ConeCut(2.0 * w1 / nrm, w2 / nrm - 1.0, -w2 / nrm - 1.0)
    scale = max(abs(cut.cv), abs(cut.cu), abs(cut.cy))
    return ConeCut(cut.cv / scale, cut.cu / scale, cut.cy / scale, 0.0)


def tangent_cone_cut(r: float) -> ConeCut:
    s = max(2.0 * abs(r), 1.0, r * r)
    return ConeCut(2.0 * r / s, -1.0 / s, -r * r / s)


# -- nodes and branching --------------------------------------------------------


@dataclasses.dataclass
class Node:
    lb: np.ndarray
    ub: np.ndarray
    bound: float = -math.inf
    depth: int = 0
    branch_var: int = -1
    branch_up: bool = False
    branch_frac: float = 0.0


class PseudoCosts:
    def __init__(self, n: int):
        self.sum = np.zeros((2, n))
        self.cnt = np.zeros((2, n))

    def record(self, var: int, up: bool, gain: float, dist: float) -> None:
        if dist > 0 and math.isfinite(gain):
            self.sum[int(up), var] += max(gain, 0.0) / dist
            self.cnt[int(up), var] += 1

    def estimate(self, var: int, up: bool) -> float:
        k = int(up)
        if self.cnt[k, var]:
            return self.sum[k, var] / self.cnt[k, var]
        known = self.cnt[k] > 0
        return float(self.sum[k, known].sum() / self.cnt[k, known].sum()) if known.any() else 1.0


def select_branch_var(point, binaries, rule=BranchRule.MOST_FRACTIONAL, int_tol=1e-9,
                      pseudo: Optional[PseudoCosts] = None) -> int:
    vals = np.asarray(point, dtype=float)[binaries]
    frac = np.abs(vals - np.round(vals))
    cand = np.flatnonzero(frac > int_tol)
    if cand.size == 0:
        raise MipError("branch called on an integral point")
    if rule is BranchRule.PSEUDO_COST and pseudo is not None:
        f = vals[cand] - np.floor(vals[cand])
        score = np.array([max(pseudo.estimate(binaries[c], False) * fd, 1e-6)
                          * max(pseudo.estimate(binaries[c], True) * (1 - fd), 1e-6)
                          for c, fd in zip(cand, f)])
        best = cand[score >= score.max() * (1 - 1e-12)]
    else:
        dist = np.abs(vals[cand] - 0.5)
        best = cand[dist <= dist.min() + 1e-12]
    return int(binaries[best.min()])


def branch(node: Node, point, binaries, rule=BranchRule.MOST_FRACTIONAL, int_tol=1e-9,
           pseudo: Optional[PseudoCosts] = None, var: Optional[int] = None):
    """Split ``node`` on a fractional binary into ``(y_k <= 0, y_k >= 1)`` children."""
    if var is None:
        var = select_branch_var(point, binaries, rule, int_tol, pseudo)
    val = float(point[var])
    lo = Node(node.lb.copy(), node.ub.copy(), node.bound, node.depth + 1, var, False, val)
    hi = Node(node.lb.copy(), node.ub.copy(), node.bound, node.depth + 1, var, True, 1 - val)
    lo.ub[var] = 0.0
    hi.lb[var] = 1.0
    return lo, hi


# -- the solver -------------------------------------------------------------------


class _TimeUp(Exception):
    pass


class BranchAndCut:
    def __init__(self, model: ModelIR, params: SolverParams, hooks: Optional[CallbackHooks]):
        if model.sense != "min":
            raise MipError("solve_mip expects a minimization model")
        self.model = model
        self.params = params
        self.hooks = hooks or CallbackHooks()
        self.n = model.n_vars
        self.binaries = model.binaries()
        q = model.quadratic()
        if np.any(q < 0):
            raise MipError("quadratic objective must be convex")
        self.quad_vars = np.flatnonzero(q > 0)
        self.q = q[self.quad_vars]
        self.cones = [(c.v, c.u, c.y) for c in model.cone_rows]
        self.nt = self.quad_vars.size
        self.nw = self.n + self.nt
        self.t_of = {int(k): self.n + s for s, k in enumerate(self.quad_vars)}
        A = model.matrix()
        if self.nt:
            A = sp.hstack([A, sp.csr_matrix((A.shape[0], self.nt))], format="csr")
        c = np.concatenate([model.objective(), np.ones(self.nt)])
        lb = np.concatenate([model.lower(), np.zeros(self.nt)])
        ub = np.concatenate([model.upper(), np.full(self.nt, np.inf)])
        names = [v.name for v in model.variables] + [f"t[{k}]" for k in self.quad_vars]
        self.prob = lp.LpProblem(A, [r.sense for r in model.linear_rows],
                                 [r.rhs for r in model.linear_rows], lb, ub, c, names=names)
        self.root_lb, self.root_ub = lb, ub
        # row origin: 'model', 'seed', 'oa' (purgeable) or 'hook'
        self.row_kind: list[str] = ["model"] * model.n_rows
        self.last_basis: Optional[lp.Basis] = None
        self.last_x: Optional[np.ndarray] = None
        self.pending: list[tuple[dict, str, float, str]] = []
        self.row_keys: list = [None] * model.n_rows
        self.live_keys: set = set()
        self.lazy = 0
        self.frac = 0
        self.oa = 0
        self.nodes = 0
        self.incumbent: Optional[np.ndarray] = None
        self.inc_obj = math.inf
        self.closed_min = math.inf
        self.best_bound = -math.inf
        self.bound_trace: list[float] = []  # raw global bound after each node
        self.pseudo = PseudoCosts(self.nw)
        self.t0 = time.perf_counter()
        self.last_log = self.t0
        self.lp_opts = lp.LpOptions(deadline=self.t0 + self.params.time_limit)
        self._seed_cuts()

    # row helpers
    def _queue(self, coefs: dict, sense: str, rhs: float, kind: str = "oa") -> bool:
        scale = max(abs(a) for a in coefs.values()) if coefs else 1.0
        key = (tuple(sorted((k, round(a / scale, 9)) for k, a in coefs.items())),
               sense, round(rhs / scale, 9))
        if key in self.live_keys:
            return False
        self.live_keys.add(key)
        self.pending.append((coefs, sense, rhs, kind, key))
        return True

    def _flush(self):
        if not self.pending:
            return
        rows, cols, vals = [], [], []
        for r, (coefs, *_) in enumerate(self.pending):
            for k, a in coefs.items():
                rows.append(r)
                cols.append(k)
                vals.append(a)
        M = sp.csr_matrix((vals, (rows, cols)), shape=(len(self.pending), self.nw))
        self.prob.add_rows(M, [p[1] for p in self.pending], [p[2] for p in self.pending])
        self.row_kind.extend(p[3] for p in self.pending)
        self.row_keys.extend(p[4] for p in self.pending)
        self.pending = []

    def _purge(self):
        """Drop outer-approximation rows that are slack with a basic logical."""
        oa = [k for k, kind in enumerate(self.row_kind) if kind == "oa"]
        if len(oa) <= self.params.purge_threshold or self.last_basis is None:
            return
        n = self.nw
        head = self.last_basis.head
        basic_rows = head[head >= n] - n
        is_basic = np.zeros(self.prob.n_rows, dtype=bool)
        is_basic[basic_rows[basic_rows < self.prob.n_rows]] = True
        act = self.prob.A @ self.last_x
        slack = np.where(self.prob.senses == "<", self.prob.rhs - act, act - self.prob.rhs)
        drop = [k for k in oa if is_basic[k] and slack[k] > 1e-7 * (1.0 + abs(self.prob.rhs[k]))]
        if not drop:
            return
        self.last_basis = self.prob.delete_rows(drop, self.last_basis)
        dropset = set(drop)
        self.row_kind = [kd for k, kd in enumerate(self.row_kind) if k not in dropset]
        self.live_keys.difference_update(self.row_keys[k] for k in drop)
        self.row_keys = [kk for k, kk in enumerate(self.row_keys) if k not in dropset]

    def _add_cone_cut(self, cone, cut: ConeCut):
        v, u, y = cone
        return self._queue({v: cut.cv, u: cut.cu, y: cut.cy}, "<", cut.rhs)

    def _add_quad_cut(self, k: int, q: float, w: float, kind: str = "oa"):
        # t >= q (2 w v - w^2), scaled
        s = max(1.0, 2 * q * abs(w))
        return self._queue({self.t_of[k]: 1.0 / s, k: -2 * q * w / s}, ">", -q * w * w / s, kind)

    def _add_user_cuts(self, cuts: Sequence[LinearRow]) -> int:
        return sum(self._queue({k: a for k, a in row.coefs}, row.sense, row.rhs, "hook")
                   for row in cuts)

    def _seed_cuts(self):
        ub = self.root_ub
        for cone in self.cones:
            V = ub[cone[0]]
            if math.isfinite(V) and V > 0:
                for r in (V / 4, V / 2, V):
                    cut = tangent_cone_cut(r)
                    self._queue({cone[0]: cut.cv, cone[1]: cut.cu, cone[2]: cut.cy}, "<", 0.0, "seed")
        for k, q in zip(self.quad_vars, self.q):
            V = ub[k]
            if math.isfinite(V) and V > 0:
                for w in (V / 4, V / 2, V):
                    self._add_quad_cut(int(k), q, w, "seed")
        self._flush()

    # evaluation helpers
    def exact_point(self, x: np.ndarray) -> np.ndarray:
        pt = np.array(x[: self.n], dtype=float)
        if self.binaries.size:
            pt[self.binaries] = np.clip(pt[self.binaries], 0.0, 1.0)
        for v, u, y in self.cones:
            pt[u] = pt[v] ** 2 / pt[y] if pt[y] > 0 else 0.0
        return pt

    def exact_objective(self, pt: np.ndarray) -> float:
        return self.model.evaluate(pt)

    def _separate(self, x, tol: float) -> int:
        added = 0
        for cone in self.cones:
            if self.prob.ub[cone[2]] <= 0.0 and self.prob.ub[cone[0]] <= 0.0:
                continue
            cut = separate_cone_cut((x[cone[0]], x[cone[1]], x[cone[2]]), tol)
            if cut is not None and self._add_cone_cut(cone, cut):
                added += 1
        for k, q in zip(self.quad_vars, self.q):
            w = x[k]
            if q * w * w - x[self.t_of[int(k)]] > tol * max(1.0, q * w * w):
                if self._add_quad_cut(int(k), q, w):
                    added += 1
        self.oa += added
        return added

    def _time_left(self) -> bool:
        return time.perf_counter() - self.t0 < self.params.time_limit

    def _prune_level(self) -> float:
        if not math.isfinite(self.inc_obj):
            return math.inf
        tol = max(self.params.mip_gap, self.params.prune_tol) * max(abs(self.inc_obj), 1.0)
        return self.inc_obj - tol

    def _propagate(self, node: Node):
        for v, u, y in self.cones:
            if node.ub[y] <= 0.0:
                node.ub[v] = min(node.ub[v], 0.0)
                node.ub[u] = min(node.ub[u], 0.0)
                node.lb[v] = min(node.lb[v], node.ub[v])
                node.lb[u] = min(node.lb[u], node.ub[u])

    def _record_incumbent(self, pt: np.ndarray):
        obj = self.exact_objective(pt)
        if obj < self.inc_obj:
            self.inc_obj = obj
            self.incumbent = pt
            log.debug("new incumbent %.10g at node %d", obj, self.nodes)

    def process(self, node: Node):
        """Solve one node; returns ('pruned'|'leaf'|'infeasible', bound) or ('branch', children)."""
        p = self.params
        self._propagate(node)
        self._purge()
        self.prob.lb[:] = node.lb
        self.prob.ub[:] = node.ub
        is_root = node.depth == 0
        root_rounds = 0
        rounds = 0
        history: list[float] = []
        self.nodes += 1
        while True:
            if not self._time_left():
                raise _TimeUp
            sol = lp.solve(self.prob, self.last_basis, self.lp_opts)
            if sol.status is lp.Status.INFEASIBLE:
                return "infeasible", math.inf
            if sol.status is lp.Status.ITERATION_LIMIT and not self._time_left():
                raise _TimeUp
            if sol.status is not lp.Status.OPTIMAL:
                raise MipError(f"node relaxation ended with status {sol.status.value}")
            self.last_basis = sol.basis
            self.last_x = sol.x
            z = sol.objective
            node.bound = max(node.bound, z) if node.depth else z
            if node.bound >= self._prune_level():
                return "pruned", node.bound
            x = sol.x
            pt = self.exact_point(x)
            yb = pt[self.binaries] if self.binaries.size else np.zeros(0)
            fractional = np.abs(yb - np.round(yb)) > p.int_tol
            history.append(z)
            # at fractional points stop cutting once the bound stalls; branching does better
            tailing = (fractional.any() and len(history) > 3
                       and history[-1] - history[-4] <= 1e-6 * max(1.0, abs(z)))
            tol = p.frac_cone_tol if fractional.any() else p.cone_tol
            if rounds < p.max_cut_rounds and not tailing and self._separate(x, tol):
                rounds += 1
                self._flush()
                continue
            if fractional.any():
                if is_root and self.hooks.on_root_fractional and root_rounds < p.root_frac_rounds:
                    root_rounds += 1
                    cuts = list(self.hooks.on_root_fractional(pt) or [])
                    added = self._add_user_cuts(cuts)
                    if added:
                        self.frac += added
                        self._flush()
                        continue
                return "branch", self._children(node, x)
            # integral: resolve apex points by branching rather than cut churn
            for v, u, y in self.cones:
                if x[y] <= p.int_tol and x[v] > 1e-9 * max(1.0, node.ub[v]) and node.ub[y] > 0:
                    return "branch", self._children(node, x, var=y)
            pt[self.binaries] = np.round(yb)
            for v, u, y in self.cones:
                if pt[y] == 0.0:
                    pt[v] = 0.0
                    pt[u] = 0.0
            if self.hooks.on_integer_candidate:
                cuts = list(self.hooks.on_integer_candidate(pt) or [])
                added = self._add_user_cuts(cuts)
                if added:
                    self.lazy += added
                    self._flush()
                    continue
                if cuts:
                    # every returned cut is already a row, so the point meets it to LP accuracy
                    log.debug("lazy cut already present at node %d", self.nodes)
            self._record_incumbent(pt)
            return "leaf", node.bound

    def _children(self, node: Node, x, var=None):
        lo, hi = branch(node, x, self.binaries, self.params.branch_rule, self.params.int_tol,
                        self.pseudo, var)
        return lo, hi

    def _log(self, open_bound: float, force=False):
        now = time.perf_counter()
        if force or now - self.last_log >= self.params.log_interval:
            self.last_log = now
            log.info("node=%d obj=%.10g bound=%.10g gap=%.3g cuts=%d/%d t=%.2f", self.nodes,
                     self.inc_obj, open_bound, relative_gap(self.inc_obj, open_bound),
                     self.lazy, self.frac, now - self.t0)

    def run(self) -> SolveReport:
        p = self.params
        root = Node(self.root_lb.copy(), self.root_ub.copy())
        seq = 0
        heap: list = []
        stack: list[Node] = []

        def push(nd: Node):
            nonlocal seq
            seq += 1
            if p.node_selection is NodeSelection.BEST_BOUND:
                heapq.heappush(heap, (nd.bound, -nd.depth, seq, nd))
            else:
                stack.append(nd)

        def pop() -> Node:
            return heapq.heappop(heap)[3] if heap else stack.pop()

        def open_min() -> float:
            vals = [e[0] for e in heap] + [nd.bound for nd in stack]
            return min(vals) if vals else math.inf

        push(root)
        status = MipStatus.OPTIMAL
        current: Optional[Node] = None
        try:
            while heap or stack:
                current = pop()
                if current.bound >= self._prune_level():
                    self.closed_min = min(self.closed_min, current.bound)
                    current = None
                    continue
                parent_bound = current.bound
                kind, payload = self.process(current)
                if current.branch_var >= 0 and kind != "infeasible":
                    self.pseudo.record(current.branch_var, current.branch_up,
                                       current.bound - parent_bound, current.branch_frac)
                if kind == "branch":
                    lo, hi = payload
                    lo.bound = hi.bound = current.bound
                    first, second = (hi, lo) if hi.branch_frac <= 0.5 else (lo, hi)
                    # depth-first pops the last pushed child first
                    push(second)
                    push(first)
                else:
                    self.closed_min = min(self.closed_min, payload)
                current = None
                self._update_bound(open_min())
                self._log(self.best_bound)
        except _TimeUp:
            status = MipStatus.TIME_LIMIT
            extra_open = [current.bound] if current is not None else []
            om = min([open_min()] + extra_open)
            self._update_bound(om)
        if status is MipStatus.OPTIMAL:
            self._update_bound(math.inf)
            if self.incumbent is None:
                status = MipStatus.INFEASIBLE
        self._log(self.best_bound, force=True)
        return SolveReport(
            status=status,
            objective=self.inc_obj,
            bound=self.best_bound if self.incumbent is not None or status is MipStatus.TIME_LIMIT
            else math.inf,
            incumbent=self.incumbent,
            var_names=[v.name for v in self.model.variables],
            nodes=self.nodes,
            lazy_cuts=self.lazy,
            frac_cuts=self.frac,
            time=time.perf_counter() - self.t0,
            extra={"oa_cuts": self.oa, "lp_rows": self.prob.n_rows,
                   "bound_trace": self.bound_trace},
        )

    def _update_bound(self, open_bound: float):
        b = min(self.closed_min, open_bound, self.inc_obj)
        if len(self.bound_trace) < 100000:
            self.bound_trace.append(b)
        if b > self.best_bound:
            self.best_bound = b


@dataclasses.dataclass
class Relaxation:
    """Continuous relaxation solved by outer approximation.

    ``lower`` is the final cut-loop LP value (a valid bound); ``upper`` is the
    objective of the last point after lifting it onto the cones.
    """

    lower: float
    upper: float
    x: np.ndarray
    rounds: int


def solve_relaxation(model: ModelIR, params: Optional[SolverParams] = None,
                     max_rounds: int = 5000) -> Relaxation:
    """Root continuous relaxation: binaries relaxed to [0, 1], no branching."""
    p = params or SolverParams()
    bc = BranchAndCut(model, p, None)
    rounds = 0
    while True:
        sol = lp.solve(bc.prob, bc.last_basis)
        if sol.status is lp.Status.INFEASIBLE:
            return Relaxation(math.inf, math.inf, np.full(bc.n, np.nan), rounds)
        if not sol.ok:
            raise MipError(f"relaxation LP ended with status {sol.status.value}")
        bc.last_basis = sol.basis
        if rounds >= max_rounds or not bc._separate(sol.x, p.cone_tol):
            break
        bc._flush()
        rounds += 1
    pt = bc.exact_point(sol.x)
    return Relaxation(sol.objective, bc.exact_objective(pt), pt, rounds)


def solve_mip(model: ModelIR, params: Optional[SolverParams] = None,
              hooks: Optional[CallbackHooks] = None) -> SolveReport:
    """Branch-and-cut on ``model``; see :class:`SolveReport` for the result."""
    return BranchAndCut(model, params or SolverParams(), hooks).run()
