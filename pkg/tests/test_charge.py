from fractions import Fraction

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from nslab.charge import (
    ChargeDatum,
    ChargeValue,
    Verdict,
    ZeroImaginary,
    central_charge,
    in_H_minus,
    precedes,
    slope,
    stability_verdict,
)


def Z(re, im):
    return ChargeValue(Fraction(re), Fraction(im))


def test_central_charge_examples():
    assert central_charge(ChargeDatum(3, 1, 2, 1)) == Z(2, -2)
    assert central_charge(ChargeDatum(5)) == Z(5, 0)
    assert central_charge(ChargeDatum()) == Z(0, 0)


def test_zero_dimensional_datum_has_no_class_pairings():
    with pytest.raises(ValueError):
        ChargeDatum(1, b_dot_beta=1)
    with pytest.raises(ValueError):
        ChargeDatum(1, h_dot_beta=1)
    with pytest.raises(ValueError):
        ChargeDatum(1, jl_dot_beta=-1)


def test_half_plane_examples():
    assert in_H_minus(Z(2, -2))
    assert in_H_minus(Z(5, 0))
    assert not in_H_minus(Z(0, 0))
    assert not in_H_minus(Z(-1, 0))
    assert not in_H_minus(Z(0, 1))


def test_slope_examples():
    assert slope(Z(2, -2)) == 1
    assert slope(Z(-3, -1)) == -3
    with pytest.raises(ZeroImaginary):
        slope(Z(5, 0))


def test_precedes_examples():
    assert precedes(Z(1, -2), Z(5, -2))
    assert precedes(Z(3, -1), Z(0, -2))
    z = Z(4, -3)
    assert not precedes(z, z)


lattice = st.builds(Z, st.integers(-50, 50), st.integers(-50, 0))


@settings(max_examples=2000)
@given(lattice, lattice, lattice)
def test_precedes_is_a_strict_total_order(a, b, c):
    assert not precedes(a, a)
    if a != b:
        assert precedes(a, b) != precedes(b, a)
    if precedes(a, b) and precedes(b, c):
        assert precedes(a, c)


# -- stability -------------------------------------------------------------

TOTAL = ChargeDatum(2, 0, 2, 2)  # slope 1


def test_stable_example():
    subs = [ChargeDatum(0, 0, 1, 1), ChargeDatum(1, 0, 2, 1)]
    assert stability_verdict(TOTAL, subs).verdict is Verdict.STABLE


def test_strictly_semistable_example():
    subs = [ChargeDatum(0, 0, 1, 1), ChargeDatum(1, 0, 1, 1)]
    v = stability_verdict(TOTAL, subs)
    assert v.verdict is Verdict.STRICTLY_SEMISTABLE and v.witness_index == 1


def test_zero_dimensional_sub_destabilizes():
    v = stability_verdict(TOTAL, [ChargeDatum(2)])
    assert v.verdict is Verdict.UNSTABLE and v.witness_index == 0


def test_zero_dimensional_limit_by_thickening():
    # a sub with jl = eps and chi = 2 has slope 2/eps, eventually above 1
    for k in range(1, 50):
        eps = Fraction(1, k)
        if central_charge(ChargeDatum(2, 0, eps)).re / eps > 1:
            break
    else:
        pytest.fail("the thickened sub never overtook the total slope")


def test_higher_slope_sub_is_reported():
    subs = [ChargeDatum(1, 0, 2, 1), ChargeDatum(3, 0, 1, 1), ChargeDatum(2, 0, 1, 1)]
    v = stability_verdict(TOTAL, subs)
    assert v.verdict is Verdict.UNSTABLE and v.witness_index == 1


def test_bad_inputs():
    with pytest.raises(ValueError):
        stability_verdict(ChargeDatum(1), [])
    with pytest.raises(ValueError):
        stability_verdict(TOTAL, [ChargeDatum()])
    with pytest.raises(ValueError):
        stability_verdict(TOTAL, [TOTAL])


@given(st.integers(-5, 5), st.integers(1, 5), st.integers(-5, 5), st.integers(1, 5))
def test_verdict_matches_slope_comparison(chi, jl, sub_chi, sub_jl):
    total = ChargeDatum(chi, 0, jl, 1)
    sub = ChargeDatum(sub_chi, 0, sub_jl, 1)
    assume(sub != total)
    v = stability_verdict(total, [sub]).verdict
    a, b = Fraction(sub_chi, sub_jl), Fraction(chi, jl)
    expected = Verdict.UNSTABLE if a > b else Verdict.STRICTLY_SEMISTABLE if a == b else Verdict.STABLE
    assert v is expected
