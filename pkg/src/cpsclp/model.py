"""Solver-neutral model representations for every formulation.

Variable naming is uniform across builders: ``y[i]``, ``x[i,j]``, ``v[i]``,
``u[i]``, ``tau``, ``rho[i]``, ``pi[j]``, ``sigma[i,j]``.  The ``families``
map of a :class:`ModelIR` gives the positions of each family in a fixed
order (facilities ascending; pairs in :meth:`Instance.pairs` order; customers
ascending), which is what the solvers and drivers index by.
"""

from __future__ import annotations

import dataclasses
import enum
import types
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from . import lp
from .instance import Instance, Mode, RobustConfig

BINARY = "binary"
CONTINUOUS = "continuous"


class FormulationKind(str, enum.Enum):
    DETERMINISTIC_MIQP = "DeterministicMiqp"
    EXTENDED_ROBUST_MIQP = "ExtendedRobustMiqp"
    PERSPECTIVE_MISOCP = "PerspectiveMisocp"
    BENDERS_MASTER = "BendersMaster"
    BENDERS_SUBPROBLEM = "BendersSubproblem"


@dataclasses.dataclass(frozen=True)
class VarDecl:
    name: str
    kind: str = CONTINUOUS
    lb: float = 0.0
    ub: float = np.inf
    obj: float = 0.0
    quad: float = 0.0


@dataclasses.dataclass(frozen=True)
class LinearRow:
    coefs: tuple[tuple[int, float], ...]
    sense: str  # '<', '>' or '='
    rhs: float
    name: str = ""


@dataclasses.dataclass(frozen=True)
class RotatedCone:
    """``v**2 <= u * y`` with ``u, y >= 0``; fields are variable positions."""

    v: int
    u: int
    y: int


class ModelError(ValueError):
    pass


@dataclasses.dataclass(frozen=True)
class ModelIR:
    kind: FormulationKind
    variables: tuple[VarDecl, ...]
    linear_rows: tuple[LinearRow, ...]
    cone_rows: tuple[RotatedCone, ...] = ()
    sense: str = "min"
    families: Mapping[str, np.ndarray] = dataclasses.field(default_factory=dict, compare=False)
    var_index: Mapping[str, int] = dataclasses.field(init=False, compare=False, repr=False)

    def __post_init__(self):
        index = {v.name: k for k, v in enumerate(self.variables)}
        if len(index) != len(self.variables):
            raise ModelError("duplicate variable names")
        object.__setattr__(self, "var_index", types.MappingProxyType(index))
        fams = {k: np.asarray(v, dtype=np.int64) for k, v in self.families.items()}
        for arr in fams.values():
            arr.setflags(write=False)
        object.__setattr__(self, "families", types.MappingProxyType(fams))
        self.check()

    def check(self) -> None:
        n = len(self.variables)
        for v in self.variables:
            if not v.lb <= v.ub:
                raise ModelError(f"bounds of {v.name} violate lower <= upper")
            if v.kind not in (BINARY, CONTINUOUS):
                raise ModelError(f"unknown variable kind {v.kind!r}")
        for row in self.linear_rows:
            if row.sense not in ("<", ">", "="):
                raise ModelError(f"bad sense {row.sense!r} in row {row.name}")
            for k, _ in row.coefs:
                if not 0 <= k < n:
                    raise ModelError(f"row {row.name} references undeclared variable {k}")
        coned = set()
        for cone in self.cone_rows:
            for k in (cone.v, cone.u, cone.y):
                if not 0 <= k < n:
                    raise ModelError("cone references undeclared variable")
            coned.add(cone.v)
        for k in coned:
            if self.variables[k].quad != 0.0:
                raise ModelError(f"{self.variables[k].name} has both a quadratic cost and a cone")

    # -- array views ----------------------------------------------------------

    @property
    def n_vars(self) -> int:
        return len(self.variables)

    @property
    def n_rows(self) -> int:
        return len(self.linear_rows)

    def lower(self) -> np.ndarray:
        return np.array([v.lb for v in self.variables], dtype=float)

    def upper(self) -> np.ndarray:
        return np.array([v.ub for v in self.variables], dtype=float)

    def objective(self) -> np.ndarray:
        return np.array([v.obj for v in self.variables], dtype=float)

    def quadratic(self) -> np.ndarray:
        return np.array([v.quad for v in self.variables], dtype=float)

    def binaries(self) -> np.ndarray:
        return np.array([k for k, v in enumerate(self.variables) if v.kind == BINARY], dtype=np.int64)

    def matrix(self) -> sp.csr_matrix:
        rows, cols, vals = [], [], []
        for r, row in enumerate(self.linear_rows):
            for k, a in row.coefs:
                rows.append(r)
                cols.append(k)
                vals.append(a)
        return sp.csr_matrix((vals, (rows, cols)), shape=(self.n_rows, self.n_vars))

    def evaluate(self, x: np.ndarray) -> float:
        """Objective value at ``x`` ignoring cones (quadratic terms included)."""
        x = np.asarray(x, dtype=float)
        return float(self.objective() @ x + self.quadratic() @ (x * x))

    def max_row_violation(self, x: np.ndarray) -> float:
        if self.n_rows == 0:
            return 0.0
        ax = self.matrix() @ np.asarray(x, dtype=float)
        worst = 0.0
        for val, row in zip(ax, self.linear_rows):
            if row.sense in ("<", "="):
                worst = max(worst, val - row.rhs)
            if row.sense in (">", "="):
                worst = max(worst, row.rhs - val)
        return worst

    def to_lp_problem(self) -> lp.LpProblem:
        """Linear part of the model (cones and quadratic terms dropped)."""
        return lp.LpProblem(
            self.matrix(),
            [r.sense for r in self.linear_rows],
            [r.rhs for r in self.linear_rows],
            self.lower(),
            self.upper(),
            self.objective(),
            maximize=self.sense == "max",
            names=[v.name for v in self.variables],
        )

    def with_bounds(self, changes: Mapping[int, tuple[float, float]]) -> "ModelIR":
        vars_ = list(self.variables)
        for k, (lo, hi) in changes.items():
            vars_[k] = dataclasses.replace(vars_[k], lb=float(lo), ub=float(hi))
        return dataclasses.replace(self, variables=tuple(vars_), families=dict(self.families))

    def with_rows(self, rows: Iterable[LinearRow]) -> "ModelIR":
        return dataclasses.replace(self, linear_rows=self.linear_rows + tuple(rows),
                                   families=dict(self.families))

    def to_text(self) -> str:
        """LP-style text dump.

        Grammar: an objective section (``Minimize``/``Maximize``), a
        ``Subject To`` section with one ``name: expr op rhs`` line per linear
        row, cones as ``\\ cone: v^2 <= u * y`` comment lines, then
        ``Bounds``, ``Binaries`` and ``End``.  Quadratic objective terms are
        written as ``[ q v ^2 ]`` after the linear part.
        """
        names = [v.name for v in self.variables]
        obj = _expr([(k, v.obj) for k, v in enumerate(self.variables)], names)
        quad = [f"{v.quad:.17g} {v.name} ^2" for v in self.variables if v.quad]
        if quad:
            obj += " + [ " + " + ".join(quad) + " ]"
        out = ["Minimize" if self.sense == "min" else "Maximize", f" obj: {obj}", "Subject To"]
        for r, row in enumerate(self.linear_rows):
            op = {"<": "<=", ">": ">=", "=": "="}[row.sense]
            out.append(f" {row.name or f'r{r}'}: {_expr(row.coefs, names)} {op} {row.rhs:.17g}")
        for cone in self.cone_rows:
            out.append(f" \\ cone: {names[cone.v]}^2 <= {names[cone.u]} * {names[cone.y]}")
        out.append("Bounds")
        for v in self.variables:
            out.append(f" {v.lb:.17g} <= {v.name} <= {v.ub:.17g}")
        bins = [v.name for v in self.variables if v.kind == BINARY]
        if bins:
            out.append("Binaries")
            out.append(" " + " ".join(bins))
        out.append("End")
        return "\n".join(out) + "\n"


def _expr(coefs, names) -> str:
    terms = [f"{'+' if a >= 0 else '-'} {abs(a):.17g} {names[k]}" for k, a in coefs if a != 0]
    return " ".join(terms) if terms else "0"


class _Builder:
    def __init__(self):
        self.vars: list[VarDecl] = []
        self.rows: list[LinearRow] = []
        self.cones: list[RotatedCone] = []
        self.families: dict[str, list[int]] = {}

    def var(self, family, name, **kw) -> int:
        self.vars.append(VarDecl(name, **kw))
        k = len(self.vars) - 1
        self.families.setdefault(family, []).append(k)
        return k

    def row(self, coefs, sense, rhs, name):
        merged: dict[int, float] = {}
        for k, a in coefs:
            merged[k] = merged.get(k, 0.0) + float(a)
        self.rows.append(LinearRow(tuple((k, a) for k, a in merged.items() if a != 0.0),
                                   sense, float(rhs), name))

    def done(self, kind, sense="min") -> ModelIR:
        return ModelIR(kind, tuple(self.vars), tuple(self.rows), tuple(self.cones), sense,
                       {k: np.array(v, dtype=np.int64) for k, v in self.families.items()})


def _core(inst: Instance, config: RobustConfig, perspective: bool, kind) -> ModelIR:
    config.check(inst)
    gamma = config.effective_gamma
    load_rob = config.mode.protects_load
    cov_rob = config.mode.protects_coverage
    nI, nJ = inst.n_facilities, inst.n_customers
    d, dh = inst.demand, inst.deviation
    f, a, b = inst.opening_cost, inst.quad_cost, inst.lin_cost
    V = inst.max_load()
    pairs = inst.pairs()
    B = _Builder()

    y = [B.var("y", f"y[{i}]", kind=BINARY, lb=0.0, ub=1.0, obj=f[i]) for i in range(nI)]
    x = {(i, j): B.var("x", f"x[{i},{j}]", ub=1.0) for i, j in pairs}
    v = [B.var("v", f"v[{i}]", ub=V[i], obj=b[i], quad=0.0 if perspective else a[i]) for i in range(nI)]
    if perspective:
        u = [B.var("u", f"u[{i}]", ub=V[i] ** 2, obj=a[i]) for i in range(nI)]
        B.cones.extend(RotatedCone(v[i], u[i], y[i]) for i in range(nI))
    if cov_rob:
        tau = B.var("tau", "tau")
        pi = {j: B.var("pi", f"pi[{j}]") for j in range(nJ) if inst.coverage[j]}
    if load_rob:
        rho = [B.var("rho", f"rho[{i}]") for i in range(nI)]
        sigma = {(i, j): B.var("sigma", f"sigma[{i},{j}]") for i, j in pairs}

    for i in range(nI):
        coefs = [(v[i], 1.0)] + [(x[i, j], -d[j]) for j in inst.served[i]]
        if load_rob:
            coefs += [(rho[i], -gamma)] + [(sigma[i, j], -1.0) for j in inst.served[i]]
        B.row(coefs, ">", 0.0, f"load[{i}]")
    coefs = [(x[i, j], d[j]) for i, j in pairs]
    if cov_rob:
        coefs += [(tau, -gamma)] + [(pi[j], -1.0) for j in pi]
    B.row(coefs, ">", inst.target_demand, "cover")
    if cov_rob:
        for j in pi:
            B.row([(tau, 1.0), (pi[j], 1.0)] + [(x[i, j], -dh[j]) for i in inst.coverage[j]],
                  ">", 0.0, f"covdual[{j}]")
    if load_rob:
        for i, j in pairs:
            B.row([(rho[i], 1.0), (sigma[i, j], 1.0), (x[i, j], -dh[j])], ">", 0.0,
                  f"loaddual[{i},{j}]")
    for j in range(nJ):
        if inst.coverage[j]:
            B.row([(x[i, j], 1.0) for i in inst.coverage[j]], "<", 1.0, f"assign[{j}]")
    for i, j in pairs:
        B.row([(x[i, j], 1.0), (y[i], -1.0)], "<", 0.0, f"link[{i},{j}]")
    return B.done(kind)


def build_deterministic(instance: Instance) -> ModelIR:
    return _core(instance, RobustConfig(0, Mode.DETERMINISTIC), False,
                 FormulationKind.DETERMINISTIC_MIQP)


def build_extended_robust(instance: Instance, config: RobustConfig) -> ModelIR:
    if config.mode is Mode.DETERMINISTIC:
        config.check(instance)
        return build_deterministic(instance)
    return _core(instance, config, False, FormulationKind.EXTENDED_ROBUST_MIQP)


def build_perspective(instance: Instance, config: RobustConfig) -> ModelIR:
    return _core(instance, config, True, FormulationKind.PERSPECTIVE_MISOCP)


def build_master(instance: Instance, config: RobustConfig) -> ModelIR:
    config.check(instance)
    nI = instance.n_facilities
    f, a, b = instance.opening_cost, instance.quad_cost, instance.lin_cost
    V = instance.max_load()
    B = _Builder()
    y = [B.var("y", f"y[{i}]", kind=BINARY, lb=0.0, ub=1.0, obj=f[i]) for i in range(nI)]
    v = [B.var("v", f"v[{i}]", ub=V[i], obj=b[i]) for i in range(nI)]
    u = [B.var("u", f"u[{i}]", ub=V[i] ** 2, obj=a[i]) for i in range(nI)]
    B.cones.extend(RotatedCone(v[i], u[i], y[i]) for i in range(nI))
    return B.done(FormulationKind.BENDERS_MASTER)


@dataclasses.dataclass(frozen=True)
class FixingHandles:
    """Positions of the subproblem copies of ``y`` and ``v``."""

    y: np.ndarray
    v: np.ndarray

    def fix(self, problem: lp.LpProblem, ybar: Sequence[float], vbar: Sequence[float]) -> None:
        for k, val in zip(self.y, ybar):
            lp.set_bounds(problem, int(k), float(val), float(val))
        for k, val in zip(self.v, vbar):
            lp.set_bounds(problem, int(k), float(val), float(val))


def build_subproblem(instance: Instance, config: RobustConfig) -> tuple[ModelIR, FixingHandles]:
    """Maximum worst-case coverage LP with ``y`` and ``v`` kept as variables.

    ``y`` and ``v`` are declared free of cost with bounds ``[0, 1]`` and
    ``[0, inf)``; callers pin them through :class:`FixingHandles`.
    """
    config.check(instance)
    gamma = config.effective_gamma
    load_rob = config.mode.protects_load
    cov_rob = config.mode.protects_coverage
    inst = instance
    nI, nJ = inst.n_facilities, inst.n_customers
    d, dh = inst.demand, inst.deviation
    pairs = inst.pairs()
    B = _Builder()
    x = {(i, j): B.var("x", f"x[{i},{j}]", ub=1.0, obj=d[j]) for i, j in pairs}
    if load_rob:
        rho = [B.var("rho", f"rho[{i}]") for i in range(nI)]
    if cov_rob:
        tau = B.var("tau", "tau", obj=-float(gamma))
        pi = {j: B.var("pi", f"pi[{j}]", obj=-1.0) for j in range(nJ) if inst.coverage[j]}
    if load_rob:
        sigma = {(i, j): B.var("sigma", f"sigma[{i},{j}]") for i, j in pairs}
    y = [B.var("y", f"y[{i}]", lb=0.0, ub=1.0) for i in range(nI)]
    v = [B.var("v", f"v[{i}]") for i in range(nI)]

    for i in range(nI):
        coefs = [(x[i, j], d[j]) for j in inst.served[i]] + [(v[i], -1.0)]
        if load_rob:
            coefs += [(rho[i], gamma)] + [(sigma[i, j], 1.0) for j in inst.served[i]]
        B.row(coefs, "<", 0.0, f"load[{i}]")
    if cov_rob:
        for j in pi:
            B.row([(tau, 1.0), (pi[j], 1.0)] + [(x[i, j], -dh[j]) for i in inst.coverage[j]],
                  ">", 0.0, f"covdual[{j}]")
    if load_rob:
        for i, j in pairs:
            B.row([(sigma[i, j], 1.0), (rho[i], 1.0), (x[i, j], -dh[j])], ">", 0.0,
                  f"loaddual[{i},{j}]")
    for j in range(nJ):
        if inst.coverage[j]:
            B.row([(x[i, j], 1.0) for i in inst.coverage[j]], "<", 1.0, f"assign[{j}]")
    for i, j in pairs:
        B.row([(x[i, j], 1.0), (y[i], -1.0)], "<", 0.0, f"link[{i},{j}]")
    ir = B.done(FormulationKind.BENDERS_SUBPROBLEM, sense="max")
    return ir, FixingHandles(np.array(y, dtype=np.int64), np.array(v, dtype=np.int64))
