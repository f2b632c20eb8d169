import pytest

from nslab.bounds_audit import (
    Scenario,
    audit,
    audit_passed,
    check_component_bound,
    check_delta_bound,
    check_euler_window,
    check_torsion_bound,
    scenario_from_datum,
    tree_inequalities,
)
from nslab.charge import ChargeDatum
from nslab.curve_graph import CurveGraph
from nslab.error_charge import FMDatum
from nslab.generators import random_initial_state
from nslab.reduction_engine import run
from nslab.sheaf_on_tree import AttachContext, SheafOnTree, SplittingType, pushforward_collapse

FRAGMENT = SheafOnTree(
    CurveGraph.build(["v1", "v2"], [("e", "v1", "v2")]),
    2,
    {"v1": SplittingType.of(0, 1), "v2": SplittingType.of(0, 0)},
    {"e": 1},
)


def test_component_bound_examples():
    assert check_component_bound(Scenario(2, 4, vertical_h=(1, 1, 1))).passed
    assert not check_component_bound(Scenario(2, 4, vertical_h=(1, 1, 1, 1))).passed
    assert check_component_bound(Scenario(2, 4)).passed
    assert not check_component_bound(Scenario(2, 4, vertical_h=(0, 1))).passed


def test_torsion_bound_examples():
    assert check_torsion_bound(Scenario(2, 1, fragment=FRAGMENT, n_a=1, torsion_length=2)).passed
    assert not check_torsion_bound(Scenario(2, 1, fragment=FRAGMENT, n_a=1, torsion_length=1)).passed


def test_torsion_bound_on_pendant_collapse():
    F = SheafOnTree(CurveGraph.build(["t"]), 1, {"t": SplittingType.of(2)})
    image = pushforward_collapse(F, AttachContext("smooth", (0,)))
    report = check_torsion_bound(Scenario(1, 1, fragment=F, n_a=1, torsion_length=image.torsion_length))
    assert report.passed
    assert report.detail["torsion_length"] >= report.detail["bound"]


def test_delta_bound_examples():
    assert check_delta_bound(Scenario(2, 1, core_defects=(1, 2), core_node_count=2)).passed
    assert check_delta_bound(Scenario(2, 1, core_defects=(0, 0), core_node_count=2)).passed
    assert not check_delta_bound(Scenario(2, 1, core_defects=(3,), core_node_count=1)).passed


def test_euler_window_examples():
    assert check_euler_window(Scenario(2, 1, chi_core=3, chi_quotient=0, attach_count=1)).passed
    assert not check_euler_window(Scenario(2, 1, chi_core=5, chi_quotient=0, attach_count=1)).passed


def test_tree_inequality_is_informational():
    star = CurveGraph.build(["c", "x", "y", "z"], [("e1", "c", "x"), ("e2", "c", "y"), ("e3", "c", "z")])
    r = tree_inequalities(Scenario(1, 1, trees=(star,)))
    assert r.informational and r.passed
    assert audit_passed(audit(Scenario(1, 1, trees=(star,))))


def test_scenario_from_flat_datum():
    g = CurveGraph.build({"a": 1, "b": 1, "p": 0}, [("n", "a", "b"), ("e", "a", "p")])
    c = ChargeDatum(1, 0, 1, 1)
    s = scenario_from_datum(FMDatum(g, 2, c, c))
    assert s.attach_count == 1 and s.core_node_count == 1
    assert s.torsion_length == 0
    assert audit_passed(audit(s))


@pytest.mark.parametrize("seed", range(25))
def test_engine_final_states_pass(seed):
    res = run(random_initial_state(seed))
    reports = audit(scenario_from_datum(res.final.datum))
    assert audit_passed(reports), [r for r in reports if not r.passed]
