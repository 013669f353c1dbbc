"""Brute-force verifiers for the robust protection terms and tiny whole models.

Everything here is deliberately naive: subset enumeration, explicit
constraint materialization, full enumeration of opening vectors.  The
functions are pure and meant to cross-check the dualized machinery.
"""
from __future__ import annotations

import dataclasses
import itertools

import numpy as np

from . import lp
from .instance import Instance, InstanceError, RobustConfig

ENUM_MAX_ALPHA = 15
ENUM_MAX_BETA_J = 20
ENUM_MAX_BETA_GAMMA = 10


@dataclasses.dataclass(frozen=True)
class ProtectionQuery:
    """Allocation ``x`` (one row, or a facilities-by-customers matrix), deviations, budget."""

    x: np.ndarray
    d_hat: np.ndarray
    gamma: int

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        d = np.asarray(self.d_hat, dtype=float)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "d_hat", d)
        if x.shape[-1] != d.size:
            raise ValueError("allocation and deviation lengths differ")
        if np.any(x < 0) or np.any(x > 1):
            raise ValueError("allocation fractions must lie in [0, 1]")
        if np.any(d < 0):
            raise ValueError("deviations must be non-negative")
        if int(self.gamma) != self.gamma or not 0 <= self.gamma <= d.size:
            raise ValueError(f"gamma must be an integer in [0, {d.size}]")

    def alpha_terms(self) -> np.ndarray:
        if self.x.ndim != 1:
            raise ValueError("alpha needs a single facility row")
        return self.d_hat * self.x

    def beta_terms(self) -> np.ndarray:
        x = self.x if self.x.ndim == 2 else self.x[None, :]
        return self.d_hat * x.sum(axis=0)


def _top_sum(terms: np.ndarray, gamma: int) -> float:
    if gamma <= 0:
        return 0.0
    return float(np.sort(terms)[::-1][:gamma].sum())


def _subset_max(terms: np.ndarray, gamma: int) -> float:
    best = 0.0
    n = terms.size
    for k in range(1, min(gamma, n) + 1):
        for s in itertools.combinations(range(n), k):
            best = max(best, float(terms[list(s)].sum()))
    return best


def alpha_bruteforce(query: ProtectionQuery, method: str = "sort") -> float:
    """Largest sum of at most ``gamma`` products ``d_hat_j * x_j``.

    ``method="enumerate"`` walks every subset (limited to 15 customers).
    """
    terms = query.alpha_terms()
    if method == "sort":
        return _top_sum(terms, int(query.gamma))
    if method == "enumerate":
        if terms.size > ENUM_MAX_ALPHA:
            raise ValueError(f"subset enumeration limited to {ENUM_MAX_ALPHA} customers")
        return _subset_max(terms, int(query.gamma))
    raise ValueError(f"unknown method {method!r}")


def beta_bruteforce(query: ProtectionQuery, method: str = "sort") -> float:
    """Largest sum of at most ``gamma`` column aggregates ``d_hat_j * sum_i x_ij``."""
    terms = query.beta_terms()
    if method == "sort":
        return _top_sum(terms, int(query.gamma))
    if method == "enumerate":
        if terms.size > ENUM_MAX_BETA_J or query.gamma > ENUM_MAX_BETA_GAMMA:
            raise ValueError("beta enumeration limited to 20 customers and gamma <= 10")
        return _subset_max(terms, int(query.gamma))
    raise ValueError(f"unknown method {method!r}")


def protection_dual(terms, gamma: int) -> tuple[float, float, np.ndarray]:
    """Solve ``min gamma*r + sum s  s.t.  r + s_j >= terms_j,  r, s >= 0`` with :mod:`lp`.

    Returns ``(value, r, s)``.  The same LP serves both protection terms:
    pass ``alpha_terms`` for (rho, sigma) or ``beta_terms`` for (tau, pi).
    """
    t = np.asarray(terms, dtype=float)
    n = t.size
    if n == 0:
        return 0.0, 0.0, np.zeros(0)
    A = np.hstack([np.ones((n, 1)), np.eye(n)])
    c = np.concatenate([[float(gamma)], np.ones(n)])
    prob = lp.LpProblem(A, [">"] * n, t, np.zeros(n + 1), np.full(n + 1, np.inf), c)
    sol = lp.solve(prob)
    if not sol.ok:
        raise lp.LpError(f"protection dual ended with status {sol.status.value}")
    return float(c @ sol.x), float(sol.x[0]), sol.x[1:].copy()


@dataclasses.dataclass
class EnumerationResult:
    value: float
    y: np.ndarray
    x: dict
    v: np.ndarray
    coverage: float
    feasible_vectors: int


def _fixed_y_lp(inst: Instance, config: RobustConfig, y: np.ndarray):
    """Continuous problem for one opening vector with one row per deviation subset."""
    pairs = [(i, j) for (i, j) in inst.pairs() if y[i] > 0.5]
    nf = inst.n_facilities
    nx = len(pairs)
    n = nx + nf
    d, dh = inst.demand, inst.deviation
    g = config.effective_gamma
    g_load = g if config.mode.protects_load else 0
    g_cov = g if config.mode.protects_coverage else 0
    rows, senses, rhs = [], [], []

    by_fac: dict[int, list[int]] = {}
    by_cust: dict[int, list[int]] = {}
    for k, (i, j) in enumerate(pairs):
        by_fac.setdefault(i, []).append(k)
        by_cust.setdefault(j, []).append(k)

    # load: v_i - sum d x - sum_{S} d_hat x >= 0 for every maximal subset S
    for i in range(nf):
        ks = by_fac.get(i, [])
        size = min(g_load, len(ks))
        for S in itertools.combinations(ks, size):
            row = np.zeros(n)
            row[nx + i] = 1.0
            for k in ks:
                row[k] -= d[pairs[k][1]]
            for k in S:
                row[k] -= dh[pairs[k][1]]
            rows.append(row)
            senses.append(">")
            rhs.append(0.0)

    # coverage: sum d x - sum_{j in S} d_hat_j sum_i x_ij >= D for every maximal subset S
    custs = sorted(by_cust)
    size = min(g_cov, len(custs))
    for S in itertools.combinations(custs, size):
        row = np.zeros(n)
        for k, (_, j) in enumerate(pairs):
            row[k] += d[j]
        for j in S:
            for k in by_cust[j]:
                row[k] -= dh[j]
        rows.append(row)
        senses.append(">")
        rhs.append(inst.target_demand)

    for j in custs:
        row = np.zeros(n)
        row[by_cust[j]] = 1.0
        rows.append(row)
        senses.append("<")
        rhs.append(1.0)

    c = np.concatenate([np.zeros(nx), inst.lin_cost])
    lb = np.zeros(n)
    ub = np.full(n, np.inf)
    ub[nx:][y < 0.5] = 0.0
    A = np.array(rows) if rows else np.zeros((0, n))
    return lp.LpProblem(A, senses, np.array(rhs), lb, ub, c), pairs


def robust_lp_enumerate(inst: Instance, config: RobustConfig) -> EnumerationResult:
    """Enumerate every opening vector of a linear-congestion instance."""
    nf = inst.n_facilities
    if nf > 4 or inst.n_customers > 8:
        raise ValueError("enumeration oracle limited to 4 facilities and 8 customers")
    if np.any(inst.quad_cost != 0):
        raise ValueError("enumeration oracle needs zero quadratic congestion")
    config.check(inst)
    best = None
    feasible = 0
    for bits in itertools.product((0.0, 1.0), repeat=nf):
        y = np.array(bits)
        prob, pairs = _fixed_y_lp(inst, config, y)
        sol = lp.solve(prob)
        if sol.status is lp.Status.INFEASIBLE:
            continue
        if not sol.ok:
            raise lp.LpError(f"enumeration subproblem ended with status {sol.status.value}")
        feasible += 1
        value = float(inst.opening_cost @ y + sol.objective)
        if best is None or value < best.value:
            nx = len(pairs)
            x = {p: float(sol.x[k]) for k, p in enumerate(pairs)}
            best = EnumerationResult(value, y, x, sol.x[nx:].copy(),
                                     _worst_coverage(inst, config, x), 0)
    if best is None:
        raise InstanceError("no opening vector admits a feasible allocation")
    best.feasible_vectors = feasible
    return best


def _worst_coverage(inst: Instance, config: RobustConfig, x: dict) -> float:
    d, dh = inst.demand, inst.deviation
    nominal = sum(d[j] * val for (_, j), val in x.items())
    if not config.mode.protects_coverage:
        return nominal
    agg = np.zeros(inst.n_customers)
    for (_, j), val in x.items():
        agg[j] += val
    return nominal - _top_sum(dh * agg, config.effective_gamma)


def robust_lp_optimum_bruteforce(inst: Instance, config: RobustConfig) -> float:
    """Optimal value of a tiny linear-congestion robust instance by full enumeration."""
    return robust_lp_enumerate(inst, config).value


def worst_case_coverage(inst: Instance, config: RobustConfig, x: dict) -> float:
    """Nominal coverage minus the exact coverage protection for allocation ``x``."""
    return _worst_coverage(inst, config, x)


__all__ = [
    "ProtectionQuery", "alpha_bruteforce", "beta_bruteforce", "protection_dual",
    "EnumerationResult", "robust_lp_enumerate", "robust_lp_optimum_bruteforce",
    "worst_case_coverage",
]
