"""Method dispatch, per-solve metrics, Gamma sweeps and solution profiles."""
from __future__ import annotations

import csv
import dataclasses
import io
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from typing import Iterable, Optional, Sequence

import numpy as np

from . import benders, mip, oracle
from .instance import Instance, Mode, RobustConfig
from .model import build_extended_robust, build_perspective

log = logging.getLogger(__name__)

METHODS = ("miqp", "misocp", "st-ben", "steps-ben", "mt-ben", "mteps-ben")
CSV_HEADER = ("id,seed,R,gamma,mode,method,objval,nfac,opencost,congcost,load,cov,"
              "time_s,gap_pct,nodes,bcuts,frbcuts,status").split(",")
GAMMA_GRID_PCT = (0, 2.5, 5, 10, 15, 20, 30, 40, 50, 60, 70, 80, 90, 100)
_FLOAT_FIELDS = ("R", "objval", "opencost", "congcost", "load", "cov", "time_s", "gap_pct", "nodes")
_INT_FIELDS = ("seed", "gamma", "nfac", "bcuts", "frbcuts")


@dataclasses.dataclass
class MetricsRow:
    id: str
    seed: int
    R: float
    gamma: int
    mode: str
    method: str
    objval: float
    nfac: int
    opencost: float
    congcost: float
    load: float
    cov: float
    time_s: float
    gap_pct: float
    nodes: float
    bcuts: int
    frbcuts: int
    status: str

    def csv_fields(self) -> list[str]:
        out = []
        for name in CSV_HEADER:
            val = getattr(self, name)
            if name in _FLOAT_FIELDS:
                out.append("nan" if not math.isfinite(val) else f"{val:.2f}")
            else:
                out.append(str(val))
        return out

    def to_csv_line(self) -> str:
        buf = io.StringIO()
        csv.writer(buf, lineterminator="").writerow(self.csv_fields())
        return buf.getvalue()

    def rounded(self) -> "MetricsRow":
        """The row as it reads back from CSV (two decimals on real fields)."""
        return MetricsRow.from_fields(self.csv_fields())

    @classmethod
    def from_fields(cls, fields: Sequence[str]) -> "MetricsRow":
        if len(fields) != len(CSV_HEADER):
            raise ValueError(f"expected {len(CSV_HEADER)} fields, got {len(fields)}")
        kw = {}
        for name, raw in zip(CSV_HEADER, fields):
            if name in _FLOAT_FIELDS:
                kw[name] = float(raw)
            elif name in _INT_FIELDS:
                kw[name] = int(raw)
            else:
                kw[name] = raw
        return cls(**kw)

    def to_dict(self) -> dict:
        return {k: (None if isinstance(v, float) and not math.isfinite(v) else v)
                for k, v in dataclasses.asdict(self).items()}


def write_csv(rows: Iterable[MetricsRow], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_HEADER)
        for r in rows:
            w.writerow(r.csv_fields())


def read_csv(path) -> list[MetricsRow]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != CSV_HEADER:
            raise ValueError(f"{path}: unexpected header {header}")
        return [MetricsRow.from_fields(rec) for rec in reader if rec]


def instance_id(inst: Instance) -> str:
    if "id" in inst.meta:
        return str(inst.meta["id"])
    seed = inst.meta.get("seed", "x")
    return f"s{seed}-R{inst.radius:g}-{inst.n_facilities}x{inst.n_customers}"


def parse_gamma(text, n_customers: int) -> int:
    """``"7"`` is an absolute budget; ``"35%"`` a share of the customers, rounded half up."""
    s = str(text).strip()
    if s.endswith("%"):
        pct = float(s[:-1])
        if not 0.0 <= pct <= 100.0:
            raise ValueError(f"gamma percentage out of range: {s}")
        return int(math.floor(pct / 100.0 * n_customers + 0.5))
    g = int(s)
    if not 0 <= g <= n_customers:
        raise ValueError(f"gamma {g} outside [0, {n_customers}]")
    return g


def gamma_grid(n_customers: int, pcts: Sequence[float] = GAMMA_GRID_PCT) -> list[int]:
    return sorted({parse_gamma(f"{p}%", n_customers) for p in pcts})


@dataclasses.dataclass
class RunResult:
    row: MetricsRow
    report: mip.SolveReport
    y: Optional[np.ndarray]
    v: Optional[np.ndarray]


def _solve(inst: Instance, config: RobustConfig, method: str, params: mip.SolverParams):
    if method == "miqp":
        ir = build_extended_robust(inst, config)
        return ir, mip.solve_mip(ir, params)
    if method == "misocp":
        ir = build_perspective(inst, config)
        return ir, mip.solve_mip(ir, params)
    eps = method in ("steps-ben", "mteps-ben")
    if method in ("st-ben", "steps-ben"):
        return None, benders.solve_single_tree(inst, config, params, use_epsilon=eps, audit=eps)
    if method in ("mt-ben", "mteps-ben"):
        return None, benders.solve_multi_tree(inst, config, params, use_epsilon=eps, audit=eps)
    raise ValueError(f"unknown method {method!r}")


def _gap_pct(report: mip.SolveReport, reference: Optional[float]) -> float:
    if report.status is mip.MipStatus.OPTIMAL:
        return 100.0 * max(report.gap, 0.0) if math.isfinite(report.gap) else 0.0
    if reference is not None and math.isfinite(report.bound) and reference != 0:
        return 100.0 * (reference - report.bound) / reference
    return 100.0 * report.gap if math.isfinite(report.gap) else math.nan


def run_method(inst: Instance, config: RobustConfig, method: str,
               params: Optional[mip.SolverParams] = None,
               reference: Optional[float] = None) -> RunResult:
    """Solve one cell and compute its metrics row."""
    params = params or mip.SolverParams()
    config.check(inst)
    t0 = time.perf_counter()
    ir, rep = _solve(inst, config, method, params)
    elapsed = time.perf_counter() - t0
    nI = inst.n_facilities
    y = v = None
    objval = opencost = congcost = load = cov = math.nan
    nfac = 0
    if rep.incumbent is not None:
        names = rep.var_names
        pos = {n: k for k, n in enumerate(names)}
        pt = rep.incumbent
        y = np.round(np.array([pt[pos[f"y[{i}]"]] for i in range(nI)]))
        v = np.array([pt[pos[f"v[{i}]"]] for i in range(nI)])
        v[y == 0] = 0.0
        nfac = int(y.sum())
        opencost = float(inst.opening_cost @ y)
        congcost = float(inst.quad_cost @ (v * v) + inst.lin_cost @ v)
        objval = opencost + congcost
        load = float(v.mean())
        if ir is not None:
            x = {(i, j): float(pt[pos[f"x[{i},{j}]"]]) for (i, j) in inst.pairs()}
            cov = oracle.worst_case_coverage(inst, config, x)
        else:
            cov = float(rep.extra.get("phi_final", math.nan))
    row = MetricsRow(
        id=instance_id(inst),
        seed=int(inst.meta.get("seed", -1)),
        R=float(inst.radius),
        gamma=config.gamma,
        mode=config.mode.value,
        method=method,
        objval=objval,
        nfac=nfac,
        opencost=opencost,
        congcost=congcost,
        load=load,
        cov=cov,
        time_s=elapsed,
        gap_pct=_gap_pct(rep, reference),
        nodes=float(rep.nodes),
        bcuts=int(rep.lazy_cuts) if ir is None else 0,
        frbcuts=int(rep.frac_cuts) if ir is None else 0,
        status=rep.status.value,
    )
    return RunResult(row, rep, y, v)


def failed_row(inst: Instance, config: RobustConfig, method: str, exc: BaseException) -> MetricsRow:
    nan = math.nan
    return MetricsRow(instance_id(inst), int(inst.meta.get("seed", -1)), float(inst.radius),
                      config.gamma, config.mode.value, method, nan, 0, nan, nan, nan, nan,
                      nan, nan, 0.0, 0, 0, f"Error:{type(exc).__name__}")


@dataclasses.dataclass
class SweepSpec:
    instances: list[Instance]
    modes: list[Mode] = dataclasses.field(
        default_factory=lambda: [Mode.LOAD_ONLY, Mode.COVERAGE_ONLY, Mode.BOTH])
    methods: list[str] = dataclasses.field(default_factory=lambda: ["misocp"])
    grid_pct: Sequence[float] = GAMMA_GRID_PCT

    def __post_init__(self):
        self.modes = [Mode(m) for m in self.modes]
        for m in self.methods:
            if m not in METHODS:
                raise ValueError(f"unknown method {m!r}")
        for p in self.grid_pct:
            if not 0 <= p <= 100:
                raise ValueError(f"grid percentage out of range: {p}")

    def cells(self):
        for k, inst in enumerate(self.instances):
            for mode in self.modes:
                for g in gamma_grid(inst.n_customers, self.grid_pct):
                    for method in self.methods:
                        yield k, RobustConfig(g, mode), method


def _cell(args):
    inst, config, method, params = args
    try:
        return run_method(inst, config, method, params).row, None
    except Exception as exc:  # recorded per row; the sweep keeps going
        log.warning("cell %s %s g=%d %s failed: %s", instance_id(inst), config.mode.value,
                    config.gamma, method, exc)
        return failed_row(inst, config, method, exc), repr(exc)


def run_sweep(sweep: SweepSpec, params: Optional[mip.SolverParams] = None, jobs: int = 1) -> list[MetricsRow]:
    params = params or mip.SolverParams()
    work = [(sweep.instances[k], cfg, meth, params) for k, cfg, meth in sweep.cells()]
    if jobs <= 1:
        results = [_cell(w) for w in work]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_cell, work))
    return [r for r, _ in results]


def gamma_star(rows: Sequence[MetricsRow], n_customers: dict[str, int], rel_tol: float = 1e-6):
    """Smallest Gamma whose ObjVal matches the full-budget ObjVal, per (id, mode, method)."""
    groups: dict[tuple, list[MetricsRow]] = {}
    for r in rows:
        groups.setdefault((r.id, r.mode, r.method), []).append(r)
    out = {}
    for key, grp in groups.items():
        full = [r for r in grp if r.gamma == n_customers[key[0]] and math.isfinite(r.objval)]
        if not full:
            out[key] = None
            continue
        ref = full[0].objval
        ok = sorted(r.gamma for r in grp
                    if math.isfinite(r.objval) and abs(r.objval - ref) <= rel_tol * max(abs(ref), 1.0))
        out[key] = ok[0] if ok else None
    return out


def profile(rows: Sequence[MetricsRow]) -> dict[str, list[tuple[float, float]]]:
    """Fraction of instances solved by each method as a function of time."""
    by_method: dict[str, list[MetricsRow]] = {}
    for r in rows:
        by_method.setdefault(r.method, []).append(r)
    series = {}
    for method, grp in by_method.items():
        n = len(grp)
        times = sorted(r.time_s for r in grp if r.status == mip.MipStatus.OPTIMAL.value)
        if not times:
            series[method] = [(0.0, 0.0)]
            continue
        series[method] = [(t, (k + 1) / n) for k, t in enumerate(times)]
    return series


def write_report(result: RunResult, directory, stem: str) -> tuple[str, str]:
    os.makedirs(directory, exist_ok=True)
    csv_path = os.path.join(directory, stem + ".csv")
    json_path = os.path.join(directory, stem + ".json")
    write_csv([result.row], csv_path)
    with open(json_path, "w") as fh:
        json.dump({"metrics": result.row.to_dict(), "report": result.report.to_dict()}, fh, indent=1)
    return csv_path, json_path
