"""Problem data for the congested partial set covering location problem.

An :class:`Instance` holds facilities, customers, the coverage radius and the
target demand ``D``.  Coverage sets are derived from coordinates and are never
stored on disk.  Instances are frozen after construction.

Random instances follow the recipe of the adapted Cordeau et al. testbed:
coordinates uniform on ``[0, 30]^2``, integer nominal demands uniform on
``[1, 100]`` and integer deviations uniform on ``[0, floor(dev_fraction * d_j)]``.
The generator is numpy's ``PCG64`` bit generator seeded with the integer seed,
and draws happen in a fixed order (facility coordinates, customer coordinates,
demands, deviations, opening costs) so instances are reproducible across
platforms.
"""

from __future__ import annotations

import dataclasses
import enum
import json
import math
from pathlib import Path
from typing import Any, Sequence

import numpy as np

GENERATOR_VERSION = "pcg64-v1"
BOX_SIDE = 30.0


class InstanceError(ValueError):
    """Base class for instance problems."""


class ParseError(InstanceError):
    """A file does not follow the instance schema."""


class ValidationError(InstanceError):
    """An instance violates one of its invariants."""

    def __init__(self, violations: Sequence["Violation"]):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


class StructurallyInfeasibleError(InstanceError):
    """Opening every facility still cannot cover the target demand."""


class Mode(str, enum.Enum):
    BOTH = "both"
    LOAD_ONLY = "load"
    COVERAGE_ONLY = "coverage"
    DETERMINISTIC = "det"

    @property
    def protects_load(self) -> bool:
        return self in (Mode.BOTH, Mode.LOAD_ONLY)

    @property
    def protects_coverage(self) -> bool:
        return self in (Mode.BOTH, Mode.COVERAGE_ONLY)


@dataclasses.dataclass(frozen=True)
class RobustConfig:
    """Budget ``gamma`` and which constraints are protected."""

    gamma: int = 0
    mode: Mode = Mode.BOTH

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        if int(self.gamma) != self.gamma or self.gamma < 0:
            raise ValueError(f"gamma must be a non-negative integer, got {self.gamma!r}")
        object.__setattr__(self, "gamma", int(self.gamma))

    def check(self, instance: "Instance") -> None:
        if self.gamma > instance.n_customers:
            raise ValueError(
                f"gamma={self.gamma} outside [0, {instance.n_customers}]"
            )

    @property
    def effective_gamma(self) -> int:
        """Budget actually used by the formulations (0 in deterministic mode)."""
        return 0 if self.mode is Mode.DETERMINISTIC else self.gamma


@dataclasses.dataclass(frozen=True)
class FacilityData:
    id: int
    x: float
    y: float
    f: float
    a: float
    b: float


@dataclasses.dataclass(frozen=True)
class CustomerData:
    id: int
    x: float
    y: float
    d: float
    d_hat: float


@dataclasses.dataclass(frozen=True)
class Violation:
    field: str
    index: Any
    rule: str

    def __str__(self) -> str:
        return f"{self.field}[{self.index}]: {self.rule}"


@dataclasses.dataclass(frozen=True)
class CostParams:
    """Opening and congestion cost recipe.

    ``f_range`` is an inclusive integer range for the opening costs; ``a`` and
    ``b`` are the quadratic and linear congestion coefficients shared by all
    facilities.
    """

    a: float = 0.01
    b: float = 1.0
    f_range: tuple[int, int] = (200, 500)


def covers(fac: FacilityData, cust: CustomerData, radius: float) -> bool:
    dx = fac.x - cust.x
    dy = fac.y - cust.y
    return dx * dx + dy * dy <= radius * radius


def _coverage_sets(facilities, customers, radius):
    by_customer = []
    by_facility = [[] for _ in facilities]
    for j, cust in enumerate(customers):
        cov = []
        for i, fac in enumerate(facilities):
            if covers(fac, cust, radius):
                cov.append(i)
                by_facility[i].append(j)
        by_customer.append(tuple(cov))
    return tuple(by_customer), tuple(tuple(s) for s in by_facility)


@dataclasses.dataclass(frozen=True)
class Instance:
    facilities: tuple[FacilityData, ...]
    customers: tuple[CustomerData, ...]
    radius: float
    target_demand: float
    coverage: tuple[tuple[int, ...], ...]
    """``coverage[j]`` is I(j), the facilities within ``radius`` of customer j."""
    served: tuple[tuple[int, ...], ...]
    """``served[i]`` is J(i), the customers within ``radius`` of facility i."""
    meta: dict = dataclasses.field(default_factory=dict, compare=False)

    @classmethod
    def build(cls, facilities, customers, radius, target_demand, meta=None) -> "Instance":
        facilities = tuple(facilities)
        customers = tuple(customers)
        cov, served = _coverage_sets(facilities, customers, float(radius))
        return cls(facilities, customers, float(radius), float(target_demand),
                   cov, served, dict(meta or {}))

    @property
    def n_facilities(self) -> int:
        return len(self.facilities)

    @property
    def n_customers(self) -> int:
        return len(self.customers)

    @property
    def demand(self) -> np.ndarray:
        return np.array([c.d for c in self.customers], dtype=float)

    @property
    def deviation(self) -> np.ndarray:
        return np.array([c.d_hat for c in self.customers], dtype=float)

    @property
    def opening_cost(self) -> np.ndarray:
        return np.array([f.f for f in self.facilities], dtype=float)

    @property
    def quad_cost(self) -> np.ndarray:
        return np.array([f.a for f in self.facilities], dtype=float)

    @property
    def lin_cost(self) -> np.ndarray:
        return np.array([f.b for f in self.facilities], dtype=float)

    def pairs(self) -> list[tuple[int, int]]:
        """All coverable (i, j) pairs ordered by customer then facility."""
        return [(i, j) for j, cov in enumerate(self.coverage) for i in cov]

    def coverable_demand(self) -> float:
        return float(sum(c.d for c, cov in zip(self.customers, self.coverage) if cov))

    def max_load(self) -> np.ndarray:
        """Upper bound V_i on any worst-case load of facility i."""
        return np.array(
            [sum(self.customers[j].d + self.customers[j].d_hat for j in self.served[i])
             for i in range(self.n_facilities)],
            dtype=float,
        )

    def with_gamma_feasibility(self) -> bool:
        """True when full coverage survives every demand decrease.

        Opening everything and assigning every coverable customer gives a
        worst-case coverage of at least ``sum(d_j - d_hat_j)``; when that sum
        reaches ``D`` every budget is feasible.
        """
        tot = sum(c.d - c.d_hat for c, cov in zip(self.customers, self.coverage) if cov)
        return tot >= self.target_demand

    # -- serialization -------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "meta": dict(self.meta),
            "facilities": [dataclasses.asdict(f) for f in self.facilities],
            "customers": [dataclasses.asdict(c) for c in self.customers],
            "radius": self.radius,
            "target_demand": self.target_demand,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Instance":
        if not isinstance(data, dict):
            raise ParseError("instance document must be a JSON object")
        for key in ("facilities", "customers", "radius", "target_demand"):
            if key not in data:
                raise ParseError(f"missing required field {key!r}")
        facilities = [
            _parse_record(FacilityData, rec, f"facilities[{k}]")
            for k, rec in enumerate(_as_list(data["facilities"], "facilities"))
        ]
        customers = [
            _parse_record(CustomerData, rec, f"customers[{k}]")
            for k, rec in enumerate(_as_list(data["customers"], "customers"))
        ]
        radius = _as_number(data["radius"], "radius")
        target = _as_number(data["target_demand"], "target_demand")
        meta = data.get("meta", {})
        if not isinstance(meta, dict):
            raise ParseError("field 'meta' must be an object")
        return cls.build(facilities, customers, radius, target, meta)


def _as_list(value, name):
    if not isinstance(value, list):
        raise ParseError(f"field {name!r} must be an array")
    return value


def _as_number(value, name):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError(f"field {name!r} must be a number")
    return float(value)


def _parse_record(kind, rec, where):
    if not isinstance(rec, dict):
        raise ParseError(f"{where} must be an object")
    kwargs = {}
    for fld in dataclasses.fields(kind):
        if fld.name not in rec:
            raise ParseError(f"missing required field {where}.{fld.name}")
        if fld.name == "id":
            if isinstance(rec["id"], bool) or not isinstance(rec["id"], int):
                raise ParseError(f"field {where}.id must be an integer")
            kwargs["id"] = rec["id"]
        else:
            kwargs[fld.name] = _as_number(rec[fld.name], f"{where}.{fld.name}")
    return kind(**kwargs)


def validate(instance: Instance) -> list[Violation]:
    """Check every instance invariant; returns an empty list when all hold."""
    out: list[Violation] = []
    for i, fac in enumerate(instance.facilities):
        for name in ("x", "y", "f", "a", "b"):
            val = getattr(fac, name)
            if not math.isfinite(val):
                out.append(Violation(f"facilities.{name}", i, "must be finite"))
            elif name in ("f", "a", "b") and val < 0:
                out.append(Violation(f"facilities.{name}", i, "must be non-negative"))
    for j, cust in enumerate(instance.customers):
        for name in ("x", "y", "d", "d_hat"):
            val = getattr(cust, name)
            if not math.isfinite(val):
                out.append(Violation(f"customers.{name}", j, "must be finite"))
            elif name in ("d", "d_hat") and val < 0:
                out.append(Violation(f"customers.{name}", j, "must be non-negative"))
        if cust.d_hat > cust.d:
            out.append(Violation("customers.d_hat", j, "d_hat must not exceed d"))
    if not math.isfinite(instance.radius) or instance.radius < 0:
        out.append(Violation("radius", None, "must be finite and non-negative"))

    total = sum(c.d for c in instance.customers)
    D = instance.target_demand
    if not math.isfinite(D) or D <= 0 or D > total:
        out.append(Violation("target_demand", None, f"need 0 < D <= {total:g}"))

    nI = instance.n_facilities
    if len(instance.coverage) != instance.n_customers or len(instance.served) != nI:
        out.append(Violation("coverage", None, "coverage maps have wrong length"))
        return out
    fwd = {(i, j) for j, cov in enumerate(instance.coverage) for i in cov}
    bwd = {(i, j) for i, srv in enumerate(instance.served) for j in srv}
    for (i, j) in sorted(fwd ^ bwd):
        out.append(Violation("coverage", (i, j), "I(j) and J(i) disagree"))
    for (i, j) in sorted(fwd & bwd):
        if not (0 <= i < nI and 0 <= j < instance.n_customers):
            out.append(Violation("coverage", (i, j), "index out of range"))
        elif not covers(instance.facilities[i], instance.customers[j], instance.radius):
            out.append(Violation("coverage", (i, j), "pair farther apart than radius"))
    if instance.radius >= 0 and math.isfinite(instance.radius):
        for j, cust in enumerate(instance.customers):
            for i, fac in enumerate(instance.facilities):
                if (i, j) not in fwd and (i, j) not in bwd and covers(fac, cust, instance.radius):
                    out.append(Violation("coverage", (i, j), "pair within radius but not covered"))
    return out


def save(instance: Instance, path) -> None:
    Path(path).write_text(json.dumps(instance.to_dict(), indent=1) + "\n")


def load(path) -> Instance:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"not valid JSON: {exc}") from exc
    inst = Instance.from_dict(data)
    bad = validate(inst)
    if bad:
        raise ValidationError(bad)
    return inst


def generate(
    seed: int,
    n_facilities: int,
    n_customers: int,
    radius: float,
    coverage_fraction: float = 0.5,
    dev_fraction: float = 0.20,
    cost_params: CostParams | None = None,
) -> Instance:
    """Sample a random instance.

    Raises ``ValueError`` for bad parameters and
    :class:`StructurallyInfeasibleError` when the demand coverable by opening
    every facility is below the target ``D = ceil(coverage_fraction * sum d)``.
    """
    if n_facilities < 1 or n_customers < 1:
        raise ValueError("need at least one facility and one customer")
    if not 0.0 < coverage_fraction <= 1.0:
        raise ValueError(f"coverage_fraction must lie in (0, 1], got {coverage_fraction}")
    if dev_fraction < 0:
        raise ValueError("dev_fraction must be non-negative")
    cp = cost_params or CostParams()
    rng = np.random.Generator(np.random.PCG64(seed))

    fxy = rng.uniform(0.0, BOX_SIDE, size=(n_facilities, 2))
    cxy = rng.uniform(0.0, BOX_SIDE, size=(n_customers, 2))
    d = rng.integers(1, 101, size=n_customers)
    dhat_hi = np.floor(dev_fraction * d + 1e-9).astype(np.int64)
    d_hat = np.minimum(rng.integers(0, dhat_hi + 1), d)
    lo, hi = cp.f_range
    f = rng.integers(lo, hi + 1, size=n_facilities)

    facilities = [
        FacilityData(i, float(fxy[i, 0]), float(fxy[i, 1]), float(f[i]), float(cp.a), float(cp.b))
        for i in range(n_facilities)
    ]
    customers = [
        CustomerData(j, float(cxy[j, 0]), float(cxy[j, 1]), float(d[j]), float(d_hat[j]))
        for j in range(n_customers)
    ]
    target = float(math.ceil(coverage_fraction * float(d.sum()) - 1e-9))
    meta = {
        "seed": int(seed),
        "generator": GENERATOR_VERSION,
        "coverage_fraction": float(coverage_fraction),
        "dev_fraction": float(dev_fraction),
    }
    inst = Instance.build(facilities, customers, radius, target, meta)
    if inst.coverable_demand() < target:
        raise StructurallyInfeasibleError(
            f"coverable demand {inst.coverable_demand():g} < target {target:g}"
        )
    return inst
