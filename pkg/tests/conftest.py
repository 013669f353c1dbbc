import numpy as np
import pytest

from cpsclp.instance import CustomerData, FacilityData, Instance, generate


def make_instance(facilities, customers, radius, target, meta=None):
    """facilities: (x, y, f, a, b) tuples; customers: (x, y, d, d_hat) tuples."""
    facs = [FacilityData(i, *map(float, rec)) for i, rec in enumerate(facilities)]
    custs = [CustomerData(j, *map(float, rec)) for j, rec in enumerate(customers)]
    return Instance.build(facs, custs, radius, float(target), meta or {})


@pytest.fixture(scope="session")
def small_instance():
    return generate(0, 6, 20, 30.0, 0.6)


@pytest.fixture(scope="session")
def tiny_instances():
    from cpsclp.instance import CostParams, InstanceError
    out = []
    seed = 0
    while len(out) < 8:
        try:
            out.append(generate(seed, 4, 8, 40.0, 0.5, cost_params=CostParams(a=0.0)))
        except InstanceError:
            pass
        seed += 1
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_verdicts: list[str] = []


@pytest.fixture
def verdict():
    """Record one pass/fail line for an acceptance criterion, then assert it."""
    def record(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        print(line)
        _verdicts.append(line)
        assert ok, line
    return record


def pytest_terminal_summary(terminalreporter):
    if _verdicts:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_verdicts):
            terminalreporter.write_line(line)
