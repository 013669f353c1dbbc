import json

import numpy as np
import pytest

from cpsclp import instance as I
from cpsclp.instance import Mode, RobustConfig

from conftest import make_instance


def test_full_radius_covers_everything():
    inst = I.generate(7, 2, 3, 100.0, 1.0)
    assert all(set(c) == {0, 1} for c in inst.coverage)
    assert inst.target_demand == inst.demand.sum()


def test_deviation_at_most_twenty_percent():
    inst = I.generate(3, 5, 1000, 10.0, 0.3)
    assert np.all(inst.deviation <= 0.2 * inst.demand + 1e-12)
    assert np.all(inst.deviation == np.round(inst.deviation))
    assert inst.demand.min() >= 1 and inst.demand.max() <= 100


def test_generation_is_deterministic(tmp_path):
    a = I.generate(11, 4, 30, 12.0, 0.4)
    b = I.generate(11, 4, 30, 12.0, 0.4)
    assert a == b
    I.save(a, tmp_path / "a.json")
    I.save(b, tmp_path / "b.json")
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_generate_parameters():
    inst = I.generate(5, 3, 40, 15.0, 0.25, cost_params=I.CostParams(a=0.5, b=2.0, f_range=(10, 20)))
    assert inst.target_demand == np.ceil(0.25 * inst.demand.sum())
    assert np.all(inst.quad_cost == 0.5) and np.all(inst.lin_cost == 2.0)
    assert np.all((inst.opening_cost >= 10) & (inst.opening_cost <= 20))
    coords = np.array([[c.x, c.y] for c in inst.customers])
    assert coords.min() >= 0 and coords.max() <= 30


def test_generate_rejects_bad_fraction():
    with pytest.raises(ValueError):
        I.generate(0, 2, 3, 5.0, 0.0)
    with pytest.raises(ValueError):
        I.generate(0, 2, 3, 5.0, 1.5)


def test_structurally_infeasible():
    with pytest.raises(I.StructurallyInfeasibleError):
        I.generate(0, 1, 50, 0.5, 1.0)


def test_coverage_symmetry_and_distances():
    inst = I.generate(2, 8, 60, 9.0, 0.3)
    assert sum(map(len, inst.coverage)) == sum(map(len, inst.served))
    for j, cov in enumerate(inst.coverage):
        c = inst.customers[j]
        for i, f in enumerate(inst.facilities):
            inside = (f.x - c.x) ** 2 + (f.y - c.y) ** 2 <= inst.radius ** 2
            assert inside == (i in cov) == (j in inst.served[i])


def test_boundary_is_inclusive():
    inst = make_instance([(0, 0, 1, 0, 1)], [(3, 4, 10, 1)], 5.0, 5)
    assert inst.coverage[0] == (0,)


def test_round_trip(tmp_path):
    inst = I.generate(1, 5, 25, 10.0, 0.5)
    path = tmp_path / "inst.json"
    I.save(inst, path)
    back = I.load(path)
    assert back == inst
    assert back.meta["seed"] == 1
    data = json.loads(path.read_text())
    assert set(data) == {"meta", "facilities", "customers", "radius", "target_demand"}


def test_load_rejects_excess_deviation(tmp_path):
    inst = I.generate(1, 2, 4, 40.0, 0.5)
    data = inst.to_dict()
    data["customers"][0]["d_hat"] = data["customers"][0]["d"] + 1
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(data))
    with pytest.raises(I.ValidationError):
        I.load(path)


def test_load_missing_field(tmp_path):
    data = I.generate(1, 2, 4, 40.0, 0.5).to_dict()
    del data["target_demand"]
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(data))
    with pytest.raises(I.ParseError, match="target_demand"):
        I.load(path)


def test_validate_valid_instance():
    assert I.validate(I.generate(4, 3, 10, 20.0, 0.5)) == []


def test_validate_target_too_large():
    inst = I.generate(4, 3, 10, 20.0, 0.5)
    bad = I.Instance(inst.facilities, inst.customers, inst.radius, float(inst.demand.sum() + 1),
                     inst.coverage, inst.served)
    viol = I.validate(bad)
    assert len(viol) == 1 and viol[0].field == "target_demand"


def test_validate_asymmetric_coverage():
    inst = make_instance([(0, 0, 1, 0, 1), (1, 1, 1, 0, 1)], [(0, 1, 5, 1), (1, 0, 5, 1)], 5.0, 5)
    served = list(inst.served)
    served[0] = tuple(j for j in served[0] if j != 1)
    bad = I.Instance(inst.facilities, inst.customers, inst.radius, inst.target_demand,
                     inst.coverage, tuple(served))
    viol = I.validate(bad)
    assert len(viol) == 1
    assert viol[0].index == (0, 1)


def test_robust_config():
    inst = I.generate(0, 2, 5, 40.0, 0.5)
    assert RobustConfig(3, Mode.DETERMINISTIC).effective_gamma == 0
    assert RobustConfig(3, "load").mode is Mode.LOAD_ONLY
    with pytest.raises(ValueError):
        RobustConfig(-1)
    with pytest.raises(ValueError):
        RobustConfig(1.5)
    with pytest.raises(ValueError):
        RobustConfig(6).check(inst)


def test_max_load():
    inst = make_instance([(0, 0, 1, 0, 1), (100, 100, 1, 0, 1)], [(0, 1, 5, 1), (1, 0, 7, 2)], 5.0, 5)
    assert list(inst.max_load()) == [15.0, 0.0]
