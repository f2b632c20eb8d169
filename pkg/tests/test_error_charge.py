from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nslab.charge import ChargeDatum, ChargeValue, central_charge
from nslab.curve_graph import CurveGraph
from nslab.error_charge import (
    FMDatum,
    LatticeBasis,
    TorsionRecord,
    defect_total,
    definity_check,
    err_charge,
    is_flat,
    lattice_membership,
    torsion_err,
)
from nslab.generators import random_datum

CURVE = CurveGraph.build({"a": 1, "b": 1}, [("n", "a", "b")], [("m", "a")])
TOTAL = ChargeDatum(1, 0, 1, 1)


def datum(defect=0, points=(), vertical=(), rank=2):
    carried = [TOTAL] + [c for _, c in points] + [c for _, c in vertical]
    total = carried[0]
    for c in carried[1:]:
        total = total + c
    return FMDatum(
        CURVE,
        rank,
        total,
        core_charge=TOTAL,
        edge_defects={"n": defect},
        point_torsions=tuple(TorsionRecord(p, c) for p, c in points),
        vertical_torsions=tuple(TorsionRecord(p, c) for p, c in vertical),
    )


def test_err_examples():
    assert err_charge(datum()) == ChargeValue(0, 0)
    d = datum(defect=2, points=[("m", ChargeDatum(2))])
    d = FMDatum(CURVE, 3, d.total_charge, d.core_charge, edge_defects={"n": 3}, point_torsions=d.point_torsions)
    assert err_charge(d) == ChargeValue(5, 0)
    v = datum(vertical=[("m", ChargeDatum(0, 0, 1, 1))])
    assert err_charge(v) == ChargeValue(0, -1)


def test_flatness_examples():
    assert is_flat(datum())
    assert not is_flat(datum(defect=1))
    assert not is_flat(datum(vertical=[("m", ChargeDatum(0, 0, 1, 1))]))


def test_definity_examples():
    v = datum(vertical=[("m", ChargeDatum(0, 0, 1, 1))])
    assert -err_charge(v).im > 0 and definity_check(v).ok
    p = datum(defect=1, points=[("n", ChargeDatum(2))])
    z = err_charge(p)
    assert z.im == 0 and z.re.denominator == 1 and z.re >= 0 and definity_check(p).ok
    assert definity_check(datum()).ok


def test_err_splits_into_torsion_and_defects():
    d = datum(defect=1, points=[("m", ChargeDatum(2))], vertical=[("n", ChargeDatum(1, "1/2", 2, 1))])
    assert err_charge(d) == torsion_err(d) + ChargeValue(defect_total(d), 0)
    assert torsion_err(d) == central_charge(ChargeDatum(2)) + central_charge(ChargeDatum(1, "1/2", 2, 1))


def test_torsion_records_validated():
    with pytest.raises(ValueError):
        datum(points=[("m", ChargeDatum(0, 0, 1, 1))])
    with pytest.raises(ValueError):
        datum(vertical=[("m", ChargeDatum(2))])
    with pytest.raises(ValueError):
        datum(points=[("nowhere", ChargeDatum(1))])


def test_defect_range_and_rank():
    with pytest.raises(ValueError):
        datum(defect=3)
    with pytest.raises(ValueError):
        FMDatum(CURVE, 0, TOTAL)


def test_disconnected_curve_rejected():
    with pytest.raises(ValueError):
        FMDatum(CurveGraph.build({"a": 1, "b": 1}), 1, TOTAL)


def test_lattice_examples():
    assert lattice_membership([ChargeValue()], LatticeBasis())
    assert lattice_membership([ChargeValue(3, -2), ChargeValue(1, 0)], LatticeBasis())
    assert not lattice_membership([ChargeValue(Fraction(1, 2), 0)], LatticeBasis())
    assert lattice_membership([ChargeValue(Fraction(1, 2), Fraction(-3, 2))], LatticeBasis("1/2", "1/2"))
    with pytest.raises(ValueError):
        LatticeBasis(0, 1)


def test_balance():
    d = datum(defect=1, points=[("m", ChargeDatum(2))])
    assert d.is_balanced()
    off = FMDatum(CURVE, 2, TOTAL, TOTAL, point_torsions=(TorsionRecord("m", ChargeDatum(1)),))
    assert not off.is_balanced()


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 10**6))
def test_laws_on_generated_data(seed):
    d = random_datum(seed)
    z = err_charge(d)
    assert (not z) == is_flat(d)
    assert definity_check(d).ok
    assert lattice_membership([z], d.lattice)
    assert d.is_balanced()
