"""Bounded-variable revised simplex.

Problems are stored as ``lo_row <= A x <= hi_row`` through their senses, with
per-variable bounds that may be infinite.  Internally every row ``k`` gets a
logical variable ``s_k = a_k x`` whose bounds encode the sense, so the working
system is ``[A, -I] (x, s) = 0``.  Nonbasic variables always sit at a finite
bound (or at zero when free).

Three passes share one basis representation (a dense explicit inverse with
rank-one updates, refactorized every ``refactor_every`` pivots):

* a composite primal phase 1 that minimizes the sum of bound violations of
  the basic variables, usable from any starting basis;
* a primal phase 2 priced by Devex reference weights;
* a dual simplex pass with exact dual steepest-edge row selection, used
  whenever the starting basis is dual feasible (warm starts after bound
  changes or added rows).

Each pass drops to Bland's rule after ``stall_threshold`` consecutive
degenerate pivots.

Duals and reduced costs are reported in the sign convention of the user's
objective sense: ``reduced_costs[j] = c_j - a_j^T duals`` and, at an optimal
basis, ``reduced_costs[j]`` is the rate of change of the optimal value when
the active bound of a nonbasic variable ``j`` moves.
"""

from __future__ import annotations

import dataclasses
import enum
import logging
import math
import time

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

log = logging.getLogger(__name__)

INF = np.inf

BASIC = 0
AT_LB = 1
AT_UB = 2
FREE = 3


class Status(str, enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"
    ITERATION_LIMIT = "IterationLimit"


class LpError(RuntimeError):
    pass


class NumericalError(LpError):
    """Basis factorization failed even after refactorization retries."""


@dataclasses.dataclass
class LpOptions:
    tol_feas: float = 1e-9
    tol_dual: float = 1e-9
    tol_gap: float = 1e-9
    tol_cs: float = 1e-7
    tol_pivot: float = 1e-7
    max_iter: int = 50_000
    refactor_every: int = 100
    stall_threshold: int = 50
    reuse_factor: bool = True
    # absolute time.perf_counter() value after which solve stops with the limit status
    deadline: float = math.inf


@dataclasses.dataclass
class Basis:
    """Basic variable per row plus a status code for every variable.

    Variables are numbered structurals first, then one logical per row.
    """

    head: np.ndarray
    status: np.ndarray

    def copy(self) -> "Basis":
        return Basis(self.head.copy(), self.status.copy())


class LpProblem:
    """Sparse LP ``min/max c^T x`` subject to sensed rows and variable bounds.

    ``senses`` holds ``'<'``, ``'>'`` or ``'='`` per row.  Bounds can be
    changed with :func:`set_bounds` and rows appended with :meth:`add_rows`;
    both keep previously returned bases usable as warm starts.
    """

    def __init__(self, A, senses, rhs, lb, ub, c, maximize=False, names=None):
        self.A = sp.csr_matrix(A, dtype=float)
        m, n = self.A.shape
        self.senses = np.array(list(senses), dtype="<U1").reshape(m)
        self.rhs = np.asarray(rhs, dtype=float).reshape(m)
        self.lb = np.asarray(lb, dtype=float).reshape(n).copy()
        self.ub = np.asarray(ub, dtype=float).reshape(n).copy()
        self.c = np.asarray(c, dtype=float).reshape(n).copy()
        self.maximize = bool(maximize)
        self.names = list(names) if names is not None else None
        self._check()
        self._cache = None
        # (head, explicit inverse) of the last basis solved on this problem
        self._factor = None
        # equilibration scales; fixed once computed so cached inverses stay valid
        self._colscale = None
        self._rowscale = np.zeros(0)

    @property
    def n_rows(self) -> int:
        return self.A.shape[0]

    @property
    def n_vars(self) -> int:
        return self.A.shape[1]

    def _check(self):
        if not set(self.senses.tolist()) <= {"<", ">", "="}:
            raise ValueError("row senses must be '<', '>' or '='")
        if not np.all(np.isfinite(self.rhs)):
            raise ValueError("right-hand sides must be finite")
        if np.any(np.isnan(self.A.data)) or np.any(np.isnan(self.c)):
            raise ValueError("NaN coefficient")
        if np.any(np.isnan(self.lb)) or np.any(np.isnan(self.ub)) or np.any(self.lb > self.ub):
            raise ValueError("variable bounds must satisfy lower <= upper")

    def add_rows(self, A_new, senses, rhs) -> None:
        A_new = sp.csr_matrix(A_new, dtype=float)
        if A_new.shape[1] != self.n_vars:
            raise ValueError("new rows have the wrong number of columns")
        self.A = sp.vstack([self.A, A_new], format="csr")
        self.senses = np.concatenate([self.senses, np.array(list(senses), dtype="<U1")])
        self.rhs = np.concatenate([self.rhs, np.asarray(rhs, dtype=float)])
        self._check()
        self._cache = None

    def delete_rows(self, rows, basis: Basis | None = None) -> Basis | None:
        """Drop ``rows``; returns ``basis`` renumbered for the smaller problem.

        When a basis is given, every deleted row must have its logical basic
        in it, so the remaining basis stays square and nonsingular.
        """
        m, n = self.A.shape
        drop = np.zeros(m, dtype=bool)
        drop[np.asarray(rows, dtype=np.int64)] = True
        if not drop.any():
            return basis
        keep = ~drop
        newpos = np.cumsum(keep) - 1
        out = None
        if basis is not None:
            head = np.asarray(basis.head)
            is_log = head >= n
            dropped_head = np.zeros(head.size, dtype=bool)
            dropped_head[is_log] = drop[head[is_log] - n]
            if dropped_head.sum() != drop.sum():
                raise ValueError("deleted rows must have basic logicals")
            out = Basis(self._renumber(head[~dropped_head], newpos),
                        np.concatenate([basis.status[:n], basis.status[n:][keep]]))
        if self._factor is not None:
            fhead, Binv = self._factor
            f_log = fhead >= n
            f_drop = np.zeros(fhead.size, dtype=bool)
            f_drop[f_log] = drop[fhead[f_log] - n]
            if f_drop.sum() == drop.sum():
                self._factor = (self._renumber(fhead[~f_drop], newpos),
                                Binv[~f_drop][:, keep])
            else:
                self._factor = None
        self.A = self.A[keep]
        self.senses = self.senses[keep]
        self.rhs = self.rhs[keep]
        self._rowscale = self._rowscale[keep[: self._rowscale.size]]
        self._cache = None
        return out

    def _renumber(self, head, newpos):
        n = self.n_vars
        head = head.copy()
        log_ = head >= n
        head[log_] = n + newpos[head[log_] - n]
        return head

    def row_bounds(self):
        lo = np.where(self.senses == "<", -INF, self.rhs)
        hi = np.where(self.senses == ">", INF, self.rhs)
        return lo, hi

    def _matrices(self):
        """Scaled ``[R A C, -I]`` (CSC), its transpose (CSR) and the scales."""
        if self._cache is None:
            m, n = self.A.shape
            if self._colscale is None:
                self._colscale = _column_scale(self.A)
            cs = self._colscale
            k = self._rowscale.size
            if k < m:
                self._rowscale = np.concatenate([self._rowscale, _row_scale(self.A[k:], cs)])
            rs = self._rowscale
            As = sp.diags(rs) @ self.A @ sp.diags(cs)
            M = sp.hstack([As, -sp.identity(m, format="csr")], format="csc")
            self._cache = (M, M.T.tocsr(), rs, cs)
        return self._cache

    def copy(self) -> "LpProblem":
        return LpProblem(self.A.copy(), self.senses.copy(), self.rhs.copy(), self.lb,
                         self.ub, self.c, self.maximize, self.names)


def _pow2(v):
    return np.exp2(np.round(np.log2(v)))


def _row_extremes(A: sp.csr_matrix):
    A = sp.csr_matrix(abs(A))
    A.eliminate_zeros()
    m = A.shape[0]
    hi = np.ones(m)
    lo = np.ones(m)
    nz = np.diff(A.indptr) > 0
    if nz.any():
        starts = A.indptr[:-1][nz]
        hi[nz] = np.maximum.reduceat(A.data, starts)
        lo[nz] = np.minimum.reduceat(A.data, starts)
    # stray tiny entries must not dominate the geometric mean
    return np.maximum(lo, hi * 1e-6), hi


def _column_scale(A, passes: int = 6) -> np.ndarray:
    """Geometric-mean column scales (powers of two)."""
    A = sp.csr_matrix(abs(A))
    m, n = A.shape
    rs, cs = np.ones(m), np.ones(n)
    if A.nnz == 0:
        return cs
    for _ in range(passes):
        lo, hi = _row_extremes(sp.diags(rs) @ A @ sp.diags(cs))
        rs = rs / np.sqrt(lo * hi)
        lo, hi = _row_extremes(sp.csr_matrix((sp.diags(rs) @ A @ sp.diags(cs)).T))
        cs = cs / np.sqrt(lo * hi)
    return _pow2(cs)


def _row_scale(A_rows, cs) -> np.ndarray:
    lo, hi = _row_extremes(sp.csr_matrix(A_rows) @ sp.diags(cs))
    return _pow2(1.0 / np.sqrt(lo * hi))


def set_bounds(problem: LpProblem, var: int, lo: float, hi: float) -> None:
    """Replace the bounds of one variable (``lo == hi`` fixes it)."""
    if lo > hi:
        raise ValueError(f"lower bound {lo} exceeds upper bound {hi} for variable {var}")
    problem.lb[var] = lo
    problem.ub[var] = hi


@dataclasses.dataclass
class LpSolution:
    status: Status
    objective: float
    x: np.ndarray
    duals: np.ndarray
    reduced_costs: np.ndarray
    basis: Basis | None
    iterations: int = 0

    @property
    def ok(self) -> bool:
        return self.status is Status.OPTIMAL


class _Simplex:
    def __init__(self, prob: LpProblem, opts: LpOptions):
        self.prob = prob
        self.opts = opts
        self.m, self.n = prob.A.shape
        self.N = self.n + self.m
        self.M, self.MT, self.rs, self.cs = prob._matrices()
        sign = -1.0 if prob.maximize else 1.0
        self.c = np.concatenate([sign * prob.c * self.cs, np.zeros(self.m)])
        rlo, rhi = prob.row_bounds()
        self.lb = np.concatenate([prob.lb / self.cs, rlo * self.rs])
        self.ub = np.concatenate([prob.ub / self.cs, rhi * self.rs])
        self.fixed = self.lb == self.ub
        self.tol_p = opts.tol_feas * np.maximum(1.0, np.minimum(
            np.abs(np.where(np.isfinite(self.lb), self.lb, 0.0))
            + np.abs(np.where(np.isfinite(self.ub), self.ub, 0.0)), 1e6))
        self.tol_d = opts.tol_dual * np.maximum(1.0, np.abs(self.c))
        self.iters = 0
        self.since_refactor = 0
        self.devex = np.ones(self.N)

    # -- basis bookkeeping -----------------------------------------------

    def install(self, basis: Basis | None):
        m, n = self.m, self.n
        head = status = None
        if basis is not None:
            head = np.asarray(basis.head, dtype=np.int64)
            status = np.asarray(basis.status, dtype=np.int8)
            m_old = head.size
            n_old = status.size - m_old
            if n_old != n or m_old > m:
                head = status = None
            elif m_old < m:
                new = np.arange(n + m_old, n + m)
                head = np.concatenate([head, new])
                status = np.concatenate([status, np.full(m - m_old, BASIC, np.int8)])
        if head is None:
            head = np.arange(n, n + m)
            status = np.full(self.N, AT_LB, np.int8)
            status[head] = BASIC
        self.head = head.copy()
        self.status = status.copy()
        self.status[self.status == BASIC] = AT_LB
        self.status[self.head] = BASIC
        self._fix_nonbasic_status()
        if self.opts.reuse_factor and basis is not None and self._from_cache(self.head):
            self.compute_x()
            return
        try:
            self.refactor()
        except NumericalError:
            if basis is None:
                raise
            self.install(None)

    def _from_cache(self, target) -> bool:
        """Reach basis ``target`` from the problem's cached inverse by a few pivots."""
        cache = self.prob._factor
        if cache is None:
            return False
        head, Binv = cache
        m_old, m, n = head.size, self.m, self.n
        if m_old > m:
            return False
        if m_old < m:
            # new rows enter with their logicals basic: block lower-triangular inverse
            k = m - m_old
            RB = np.zeros((k, m_old))
            struct = head < n
            RB[:, struct] = self.M[m_old:m, :][:, head[struct]].toarray()
            Binv = np.block([[Binv, np.zeros((m_old, k))], [RB @ Binv, -np.eye(k)]])
            head = np.concatenate([head, np.arange(n + m_old, n + m)])
        else:
            Binv = Binv.copy()
        in_target = np.zeros(self.N, dtype=bool)
        in_target[target] = True
        in_head = np.zeros(self.N, dtype=bool)
        in_head[head] = True
        leaving = [r for r in range(m) if not in_target[head[r]]]
        entering = [int(q) for q in target if not in_head[q]]
        if len(entering) > max(8, m // 8):
            return False
        self.head = head.copy()
        self.Binv = Binv
        for q in entering:
            alpha = self.column(q)
            r = max(leaving, key=lambda i: abs(alpha[i]))
            if abs(alpha[r]) < 1e-7:
                return False
            row = Binv[r] / alpha[r]
            Binv -= np.outer(alpha, row)
            Binv[r] = row
            self.head[r] = q
            leaving.remove(r)
        self.since_refactor = len(entering)
        return True

    def _fix_nonbasic_status(self):
        st = self.status
        nb = st != BASIC
        lbf = np.isfinite(self.lb)
        ubf = np.isfinite(self.ub)
        bad_lb = nb & (st == AT_LB) & ~lbf
        st[bad_lb] = np.where(ubf[bad_lb], AT_UB, FREE)
        bad_ub = nb & (st == AT_UB) & ~ubf
        st[bad_ub] = np.where(lbf[bad_ub], AT_LB, FREE)
        bad_free = nb & (st == FREE) & (lbf | ubf)
        st[bad_free] = np.where(lbf[bad_free], AT_LB, AT_UB)

    def refactor(self):
        if self.m == 0:
            self.Binv = np.zeros((0, 0))
        elif np.all(self.head >= self.n):
            # all-logical basis: B = -P for a permutation P
            self.Binv = np.zeros((self.m, self.m))
            self.Binv[np.arange(self.m), self.head - self.n] = -1.0
        else:
            B = self.M[:, self.head].toarray()
            try:
                lu, piv = sla.lu_factor(B, check_finite=False)
                if np.min(np.abs(np.diag(lu))) < 1e-11 * max(1.0, np.max(np.abs(np.diag(lu)))):
                    raise NumericalError("singular basis")
                self.Binv = sla.lu_solve((lu, piv), np.eye(self.m), check_finite=False)
            except (sla.LinAlgError, ValueError) as exc:
                raise NumericalError(str(exc)) from exc
        self.since_refactor = 0
        self.compute_x()

    def compute_x(self):
        st = self.status
        x = np.zeros(self.N)
        x[st == AT_LB] = self.lb[st == AT_LB]
        x[st == AT_UB] = self.ub[st == AT_UB]
        x[self.head] = 0.0
        if self.m:
            x[self.head] = -(self.Binv @ (self.M @ x))
        self.x = x

    def duals(self, cost=None):
        c = self.c if cost is None else cost
        if self.m == 0:
            return np.zeros(0), c.copy()
        y = c[self.head] @ self.Binv
        d = c - self.MT @ y
        d[self.head] = 0.0
        return y, d

    def pivot(self, r, q, alpha):
        """Replace head[r] by q; ``alpha`` is B^{-1} a_q."""
        Binv = self.Binv
        piv = alpha[r]
        row = Binv[r] / piv
        Binv -= np.outer(alpha, row)
        Binv[r] = row
        self.head[r] = q
        self.status[q] = BASIC
        self.iters += 1
        self.since_refactor += 1
        if self.since_refactor >= self.opts.refactor_every:
            self.refactor()

    def column(self, q):
        M = self.M
        lo, hi = M.indptr[q], M.indptr[q + 1]
        return self.Binv[:, M.indices[lo:hi]] @ M.data[lo:hi]

    # -- feasibility measures ----------------------------------------------

    def primal_infeasibility(self):
        xb = self.x[self.head]
        lb = self.lb[self.head]
        ub = self.ub[self.head]
        tol = self.tol_p[self.head]
        below = np.where(lb - xb > tol, lb - xb, 0.0)
        above = np.where(xb - ub > tol, xb - ub, 0.0)
        return below, above

    def dual_infeasible_mask(self, d):
        st = self.status
        free_nb = (st == FREE)
        bad = ((st == AT_LB) & (d < -self.tol_d) & ~self.fixed)
        bad |= (st == AT_UB) & (d > self.tol_d) & ~self.fixed
        bad |= free_nb & (np.abs(d) > self.tol_d)
        return bad

    def make_dual_feasible(self, d) -> bool:
        """Flip boxed nonbasic variables to the bound their reduced cost prefers."""
        st = self.status
        to_ub = (st == AT_LB) & (d < -self.tol_d) & np.isfinite(self.ub) & ~self.fixed
        to_lb = (st == AT_UB) & (d > self.tol_d) & np.isfinite(self.lb) & ~self.fixed
        if to_ub.any() or to_lb.any():
            st[to_ub] = AT_UB
            st[to_lb] = AT_LB
            self.compute_x()
        return not self.dual_infeasible_mask(d).any()

    # -- primal simplex --------------------------------------------------------

    def primal(self, phase1: bool) -> str:
        """Run primal iterations; returns 'optimal', 'infeasible', 'unbounded' or 'limit'."""
        opts = self.opts
        degenerate = 0
        bland = False
        self.devex[:] = 1.0
        while True:
            if self.iters >= opts.max_iter or time.perf_counter() > opts.deadline:
                return "limit"
            if phase1:
                below, above = self.primal_infeasibility()
                if not (below.any() or above.any()):
                    return "optimal"
                cost = np.zeros(self.N)
                cost[self.head] = np.where(above > 0, 1.0, np.where(below > 0, -1.0, 0.0))
                _, d = self.duals(cost)
                told = opts.tol_dual
            else:
                _, d = self.duals()
                told = self.tol_d
            st = self.status
            movable = ~self.fixed & (st != BASIC)
            inc = movable & ((st == AT_LB) | (st == FREE)) & (d < -told)
            dec = movable & ((st == AT_UB) | (st == FREE)) & (d > told)
            cand = inc | dec
            if not cand.any():
                if phase1:
                    return "infeasible"
                return "optimal"
            if bland:
                q = int(np.flatnonzero(cand)[0])
            else:
                score = np.where(cand, d * d / self.devex, -1.0)
                q = int(np.argmax(score))
            direction = 1.0 if inc[q] else -1.0
            alpha = self.column(q)
            delta = -direction * alpha
            r, t, to_upper = self._primal_ratio(delta, phase1, bland)
            span = self.ub[q] - self.lb[q]
            if span < t:
                if not np.isfinite(span):
                    return "unbounded"
                # bound flip
                t = span
                self.x[self.head] += t * delta
                self.x[q] += direction * t
                st[q] = AT_UB if direction > 0 else AT_LB
                self.iters += 1
                degenerate = 0
                continue
            if r < 0:
                return "unbounded"
            if t <= 1e-12:
                degenerate += 1
                if degenerate > opts.stall_threshold:
                    bland = True
            else:
                degenerate = 0
                bland = False
            leave = int(self.head[r])
            if not bland:
                self._devex_update(r, q, alpha, leave)
            self.x[self.head] += t * delta
            self.x[q] += direction * t
            self.x[leave] = self.ub[leave] if to_upper else self.lb[leave]
            st[leave] = AT_UB if to_upper else AT_LB
            self.pivot(r, q, alpha)

    def _primal_ratio(self, delta, phase1, bland):
        head = self.head
        xb = self.x[head]
        lb = self.lb[head]
        ub = self.ub[head]
        tol = self.tol_p[head]
        piv = self.opts.tol_pivot * max(1.0, np.abs(delta).max())
        t = np.full(self.m, INF)
        gap = np.full(self.m, INF)
        upper = np.zeros(self.m, dtype=bool)
        neg = delta < -piv
        pos = delta > piv
        if phase1:
            above = xb > ub + tol
            below = xb < lb - tol
        else:
            above = np.zeros(self.m, dtype=bool)
            below = above
        # decreasing basics: stop at ub when currently above it, else at lb
        m1 = neg & above
        gap[m1] = xb[m1] - ub[m1]
        upper[m1] = True
        m2 = neg & ~above & ~below & np.isfinite(lb)
        gap[m2] = xb[m2] - lb[m2]
        # increasing basics: stop at lb when currently below it, else at ub
        m3 = pos & below
        gap[m3] = lb[m3] - xb[m3]
        m4 = pos & ~below & ~above & np.isfinite(ub)
        gap[m4] = ub[m4] - xb[m4]
        upper[m4] = True
        absd = np.abs(delta)
        active = np.isfinite(gap)
        if not active.any():
            return -1, INF, False
        gap = np.maximum(gap, 0.0)
        t[active] = gap[active] / absd[active]
        if bland:
            tmin = t.min()
            ties = np.flatnonzero(t <= tmin + 1e-12 * max(1.0, tmin))
            r = int(ties[np.argmin(head[ties])])
            return r, float(t[r]), bool(upper[r])
        # Harris two-pass
        tmax = np.min(np.where(active, (gap + tol) / np.where(active, absd, 1.0), INF))
        ok = active & (t <= tmax)
        r = int(np.argmax(np.where(ok, absd, -1.0)))
        return r, float(t[r]), bool(upper[r])

    def _devex_update(self, r, q, alpha, leave):
        rho = self.Binv[r]
        arow = self.MT @ rho
        aq = alpha[r]
        wq = self.devex[q]
        nb = self.status != BASIC
        ratio = arow / aq
        self.devex[nb] = np.maximum(self.devex[nb], ratio[nb] ** 2 * wq)
        self.devex[leave] = max(wq / (aq * aq), 1.0)
        if self.devex.max() > 1e8:
            self.devex[:] = 1.0

    # -- dual simplex ------------------------------------------------------------

    def dual(self) -> str:
        """Dual simplex from a dual feasible basis."""
        opts = self.opts
        stall = 0
        bland = False
        last_obj = -INF
        while True:
            if self.iters >= opts.max_iter or time.perf_counter() > opts.deadline:
                return "limit"
            below, above = self.primal_infeasibility()
            infeas = below + above
            if not infeas.any():
                return "optimal"
            if bland:
                cand = np.flatnonzero(infeas > 0)
                r = int(cand[np.argmin(self.head[cand])])
            else:
                w = np.einsum("ij,ij->i", self.Binv, self.Binv)
                r = int(np.argmax(infeas * infeas / w))
            sgn = 1.0 if above[r] > 0 else -1.0
            rho = self.Binv[r]
            arow = self.MT @ rho
            _, d = self.duals()
            st = self.status
            a = sgn * arow
            piv = opts.tol_pivot * max(1.0, np.abs(arow).max())
            nb = (st != BASIC) & ~self.fixed
            elig = nb & (((st == AT_LB) & (a > piv)) | ((st == AT_UB) & (a < -piv))
                         | ((st == FREE) & (np.abs(a) > piv)))
            if not elig.any():
                return "infeasible"
            idx = np.flatnonzero(elig)
            ai = a[idx]
            di = d[idx]
            sti = st[idx]
            ratio = np.where(sti == FREE, 0.0, di / ai)
            ratio = np.maximum(ratio, 0.0)
            if bland:
                tmin = ratio.min()
                ties = idx[ratio <= tmin + 1e-12 * max(1.0, tmin)]
                q = int(ties.min())
            else:
                told = self.tol_d[idx]
                bound = np.where(sti == FREE, told / np.abs(ai),
                                 np.where(ai > 0, (di + told) / ai, (di - told) / ai))
                tmax = bound.min()
                ok = ratio <= tmax
                q = int(idx[np.argmax(np.where(ok, np.abs(ai), -1.0))])
            step = float(np.max([0.0, d[q] / a[q]])) if st[q] != FREE else 0.0
            alpha = self.column(q)
            leave = int(self.head[r])
            target = self.ub[leave] if sgn > 0 else self.lb[leave]
            theta = (self.x[leave] - target) / alpha[r]
            self.x[self.head] -= theta * alpha
            self.x[q] += theta
            self.x[leave] = target
            st[leave] = AT_UB if sgn > 0 else AT_LB
            self.pivot(r, q, alpha)
            obj = float(self.c @ self.x)
            if step <= 1e-12 or obj <= last_obj + 1e-12 * max(1.0, abs(obj)):
                stall += 1
                if stall > opts.stall_threshold:
                    bland = True
            else:
                stall = 0
                bland = False
            last_obj = max(last_obj, obj)

    # -- driver -------------------------------------------------------------------

    def run(self) -> str:
        for attempt in range(4):
            below, above = self.primal_infeasibility()
            primal_ok = not (below.any() or above.any())
            if not primal_ok:
                _, d = self.duals()
                if self.make_dual_feasible(d):
                    res = self.dual()
                    if res in ("infeasible", "limit"):
                        if res == "infeasible" and not self._confirm_infeasible():
                            continue
                        return res
                else:
                    res = self.primal(phase1=True)
                    if res == "infeasible":
                        if self._confirm_infeasible():
                            return res
                        continue
                    if res == "limit":
                        return res
            res = self.primal(phase1=False)
            if res != "optimal":
                return res
            if self.since_refactor and not self._accurate():
                self.refactor()
            below, above = self.primal_infeasibility()
            _, d = self.duals()
            if not (below.any() or above.any()) and not self.dual_infeasible_mask(d).any():
                return "optimal"
            log.debug("simplex: cleanup pass %d after refactorization", attempt + 1)
        return "optimal"

    def _accurate(self) -> bool:
        x = self.x.copy()
        x[self.head] = 0.0
        xb = -(self.Binv @ (self.M @ x))
        scale = 1.0 + np.abs(self.x).max()
        return bool(np.abs(xb - self.x[self.head]).max() <= 1e-10 * scale)

    def _confirm_infeasible(self) -> bool:
        self.refactor()
        below, above = self.primal_infeasibility()
        if not (below.any() or above.any()):
            return False
        return self.primal(phase1=True) == "infeasible"


def _solve_no_rows(prob: LpProblem) -> LpSolution:
    sign = -1.0 if prob.maximize else 1.0
    c = sign * prob.c
    x = np.where(c > 0, prob.lb, np.where(c < 0, prob.ub, np.where(np.isfinite(prob.lb), prob.lb,
                                                                     np.where(np.isfinite(prob.ub), prob.ub, 0.0))))
    status = Status.OPTIMAL if np.all(np.isfinite(x)) else Status.UNBOUNDED
    x = np.where(np.isfinite(x), x, 0.0)
    st = np.where(x == prob.ub, AT_UB, AT_LB).astype(np.int8)
    st[(x == 0) & ~np.isfinite(prob.lb) & ~np.isfinite(prob.ub)] = FREE
    return LpSolution(status, float(prob.c @ x), x, np.zeros(0), prob.c.copy(),
                      Basis(np.zeros(0, np.int64), st), 0)


def solve(problem: LpProblem, warm_basis: Basis | None = None,
          options: LpOptions | None = None) -> LpSolution:
    """Solve ``problem``; ``warm_basis`` (from an earlier solve) seeds the basis."""
    opts = options or LpOptions()
    if problem.n_rows == 0:
        return _solve_no_rows(problem)
    s = _Simplex(problem, opts)
    try:
        s.install(warm_basis)
        res = s.run()
    except NumericalError:
        if warm_basis is None:
            raise
        s = _Simplex(problem, opts)
        s.install(None)
        res = s.run()
    status = {"optimal": Status.OPTIMAL, "infeasible": Status.INFEASIBLE,
              "unbounded": Status.UNBOUNDED, "limit": Status.ITERATION_LIMIT}[res]
    n = s.n
    y, d = s.duals()
    problem._factor = (s.head.copy(), s.Binv)
    sign = -1.0 if problem.maximize else 1.0
    x = s.x[:n] * s.cs
    return LpSolution(
        status=status,
        objective=float(problem.c @ x),
        x=x,
        duals=sign * y * s.rs,
        reduced_costs=sign * d[:n] / s.cs,
        basis=Basis(s.head.copy(), s.status.copy()),
        iterations=s.iters,
    )


def dual_objective(problem: LpProblem, sol: LpSolution) -> float:
    """Objective of the dual solution carried by ``sol``.

    Rows contribute ``duals * rhs`` and every variable contributes its reduced
    cost times the bound it is priced against.  Equals the primal objective at
    an optimal basis.
    """
    lo, hi = problem.row_bounds()
    sign = -1.0 if problem.maximize else 1.0
    y = sign * sol.duals
    d = sign * sol.reduced_costs
    row_val = np.where(y > 0, np.where(np.isfinite(lo), lo, 0.0),
                       np.where(np.isfinite(hi), hi, 0.0))
    var_val = np.where(d > 0, problem.lb, np.where(d < 0, problem.ub, 0.0))
    var_val = np.where(np.isfinite(var_val), var_val, 0.0)
    return sign * float(y @ row_val + d @ var_val)


def to_lp_text(problem: LpProblem) -> str:
    """Debug dump in a CPLEX-LP-like text layout."""
    names = problem.names or [f"x{j}" for j in range(problem.n_vars)]
    out = ["Maximize" if problem.maximize else "Minimize", " obj: " + _expr(problem.c, names)]
    out.append("Subject To")
    A = problem.A.tocsr()
    for k in range(problem.n_rows):
        row = np.zeros(problem.n_vars)
        lo, hi = A.indptr[k], A.indptr[k + 1]
        row[A.indices[lo:hi]] = A.data[lo:hi]
        op = {"<": "<=", ">": ">=", "=": "="}[problem.senses[k]]
        out.append(f" r{k}: {_expr(row, names)} {op} {problem.rhs[k]:.17g}")
    out.append("Bounds")
    for j, nm in enumerate(names):
        out.append(f" {problem.lb[j]:.17g} <= {nm} <= {problem.ub[j]:.17g}")
    out.append("End")
    return "\n".join(out) + "\n"


def _expr(coefs, names) -> str:
    terms = [f"{'+' if v >= 0 else '-'} {abs(v):.17g} {names[j]}" for j, v in enumerate(coefs) if v != 0]
    return " ".join(terms) if terms else "0"
