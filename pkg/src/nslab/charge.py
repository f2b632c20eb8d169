"""Central charges in exact rational arithmetic.

A charge datum is the pairing vector of a one-dimensional sheaf; its charge
is ``(chi - B.beta) - i (J+L).beta``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence


class ZeroImaginary(ValueError):
    """Slope of a charge with vanishing imaginary part."""


@dataclass(frozen=True)
class ChargeValue:
    re: Fraction = Fraction(0)
    im: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "re", Fraction(self.re))
        object.__setattr__(self, "im", Fraction(self.im))

    def __add__(self, other: "ChargeValue") -> "ChargeValue":
        return ChargeValue(self.re + other.re, self.im + other.im)

    def __sub__(self, other: "ChargeValue") -> "ChargeValue":
        return ChargeValue(self.re - other.re, self.im - other.im)

    def __neg__(self) -> "ChargeValue":
        return ChargeValue(-self.re, -self.im)

    def __bool__(self) -> bool:
        return bool(self.re or self.im)


ZERO = ChargeValue()


@dataclass(frozen=True)
class ChargeDatum:
    chi: int = 0
    b_dot_beta: Fraction = Fraction(0)
    jl_dot_beta: Fraction = Fraction(0)
    h_dot_beta: int = 0

    def __post_init__(self):
        object.__setattr__(self, "chi", int(self.chi))
        object.__setattr__(self, "b_dot_beta", Fraction(self.b_dot_beta))
        object.__setattr__(self, "jl_dot_beta", Fraction(self.jl_dot_beta))
        object.__setattr__(self, "h_dot_beta", int(self.h_dot_beta))
        if self.jl_dot_beta < 0:
            raise ValueError("(J+L).beta must be nonnegative")
        if self.h_dot_beta < 0:
            raise ValueError("H.beta must be nonnegative")
        if self.jl_dot_beta == 0 and (self.h_dot_beta or self.b_dot_beta):
            raise ValueError("a zero-dimensional datum has no curve class pairings")

    def __add__(self, other: "ChargeDatum") -> "ChargeDatum":
        return ChargeDatum(
            self.chi + other.chi,
            self.b_dot_beta + other.b_dot_beta,
            self.jl_dot_beta + other.jl_dot_beta,
            self.h_dot_beta + other.h_dot_beta,
        )

    def __sub__(self, other: "ChargeDatum") -> "ChargeDatum":
        return ChargeDatum(
            self.chi - other.chi,
            self.b_dot_beta - other.b_dot_beta,
            self.jl_dot_beta - other.jl_dot_beta,
            self.h_dot_beta - other.h_dot_beta,
        )

    def scaled(self, n: int) -> "ChargeDatum":
        return ChargeDatum(self.chi * n, self.b_dot_beta * n, self.jl_dot_beta * n, self.h_dot_beta * n)

    @property
    def is_zero(self) -> bool:
        return not (self.chi or self.b_dot_beta or self.jl_dot_beta or self.h_dot_beta)


def total(data: Sequence[ChargeDatum]) -> ChargeDatum:
    out = ChargeDatum()
    for d in data:
        out = out + d
    return out


def central_charge(d: ChargeDatum) -> ChargeValue:
    return ChargeValue(d.chi - d.b_dot_beta, -d.jl_dot_beta)


def in_H_minus(z: ChargeValue) -> bool:
    return z.im < 0 or (z.im == 0 and z.re > 0)


def slope(z: ChargeValue) -> Fraction:
    if z.im == 0:
        raise ZeroImaginary("slope is undefined for a charge on the real axis")
    return -z.re / z.im


def precedes(z1: ChargeValue, z2: ChargeValue) -> bool:
    """Lexicographic order on (-Im, Re)."""
    return (-z1.im, z1.re) < (-z2.im, z2.re)


class Verdict(str, enum.Enum):
    STABLE = "Stable"
    STRICTLY_SEMISTABLE = "StrictlySemistable"
    UNSTABLE = "Unstable"


@dataclass(frozen=True)
class StabilityVerdict:
    verdict: Verdict
    witness_index: Optional[int] = None


def stability_verdict(total: ChargeDatum, subobjects: Sequence[ChargeDatum]) -> StabilityVerdict:
    """Compare slopes of the declared subobjects with the slope of ``total``.

    Zero-dimensional subobjects sit at slope +infinity when their Euler
    characteristic is positive and are skipped when it is zero.
    """
    if total.jl_dot_beta <= 0:
        raise ValueError("the total object must be one-dimensional")
    mu = slope(central_charge(total))
    best: Optional[tuple] = None  # (slope key, index)
    for i, sub in enumerate(subobjects):
        if sub.is_zero:
            raise ValueError(f"subobject {i} is zero")
        if sub == total:
            raise ValueError(f"subobject {i} is not proper")
        if sub.jl_dot_beta == 0:
            if sub.chi < 0:
                raise ValueError(f"subobject {i} is zero-dimensional with negative Euler characteristic")
            if sub.chi == 0:
                continue
            return StabilityVerdict(Verdict.UNSTABLE, i)
        s = slope(central_charge(sub))
        if best is None or s > best[0]:
            best = (s, i)
    if best is None or best[0] < mu:
        return StabilityVerdict(Verdict.STABLE)
    if best[0] > mu:
        return StabilityVerdict(Verdict.UNSTABLE, best[1])
    return StabilityVerdict(Verdict.STRICTLY_SEMISTABLE, best[1])
