"""Combinatorial Fourier-Mukai data and their error charge.

A datum splits into a torsion-free part (splitting types on rational
components, degrees on the others, defects at nodes) and torsion supported on
points, which is either zero-dimensional or a vertical curve.  The error
charge adds the central charge of the torsion to the total defect; it
vanishes exactly on flat data.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Dict, Iterable, List, Mapping, Sequence, Tuple

from .charge import ChargeDatum, ChargeValue, central_charge, total
from .curve_graph import CurveGraph, Stabilization, Subcurve, stabilize
from .sheaf_on_tree import SheafOnTree, SplittingType


@dataclass(frozen=True)
class TorsionRecord:
    point: str
    charge: ChargeDatum


@dataclass(frozen=True)
class LatticeBasis:
    """Generators ``re_unit`` and ``-i * im_unit`` of the lattice holding error charges."""

    re_unit: Fraction = Fraction(1)
    im_unit: Fraction = Fraction(1)

    def __post_init__(self):
        object.__setattr__(self, "re_unit", Fraction(self.re_unit))
        object.__setattr__(self, "im_unit", Fraction(self.im_unit))
        if self.re_unit <= 0 or self.im_unit <= 0:
            raise ValueError("lattice generators must be positive")


@dataclass(frozen=True, eq=False)
class FMDatum:
    curve: CurveGraph
    rank: int
    total_charge: ChargeDatum
    core_charge: ChargeDatum = field(default_factory=ChargeDatum)
    splitting: Mapping[str, SplittingType] = field(default_factory=dict)
    core_degrees: Mapping[str, int] = field(default_factory=dict)
    vertex_charges: Mapping[str, ChargeDatum] = field(default_factory=dict)
    edge_defects: Mapping[str, int] = field(default_factory=dict)
    point_torsions: Tuple[TorsionRecord, ...] = ()
    vertical_torsions: Tuple[TorsionRecord, ...] = ()
    lattice: LatticeBasis = field(default_factory=LatticeBasis)

    def __post_init__(self):
        g = self.curve
        r = self.rank
        if r < 1:
            raise ValueError("rank must be positive")
        if len(g.components()) != 1:
            raise ValueError("the curve must be connected")
        split = {}
        for v in g.vertices:
            if v.genus == 0:
                t = self.splitting.get(v.id, SplittingType.trivial(r))
                t = t if isinstance(t, SplittingType) else SplittingType(tuple(t))
                if t.rank != r:
                    raise ValueError(f"splitting type at {v.id!r} has the wrong rank")
                split[v.id] = t
        if set(self.splitting) - set(split):
            raise ValueError("splitting types are only recorded on rational components")
        if set(self.core_degrees) - g.vertex_ids:
            raise ValueError("degree recorded on an unknown component")
        if set(self.vertex_charges) - g.vertex_ids:
            raise ValueError("charge recorded on an unknown component")
        defects = {e.id: 0 for e in g.edges}
        for e, d in self.edge_defects.items():
            if e not in defects:
                raise ValueError(f"defect on unknown node {e!r}")
            if not 0 <= d <= r:
                raise ValueError(f"defect {d} at {e!r} outside [0, {r}]")
            defects[e] = int(d)
        points = g.ids
        for rec in self.point_torsions:
            if rec.point not in points:
                raise ValueError(f"torsion at unknown point {rec.point!r}")
            if rec.charge.jl_dot_beta != 0 or rec.charge.chi <= 0:
                raise ValueError("point torsion must be zero-dimensional with positive length")
        for rec in self.vertical_torsions:
            if rec.point not in points:
                raise ValueError(f"torsion at unknown point {rec.point!r}")
            if rec.charge.jl_dot_beta <= 0:
                raise ValueError("vertical torsion must have positive (J+L).beta")
        object.__setattr__(self, "splitting", split)
        object.__setattr__(self, "core_degrees", {k: int(v) for k, v in self.core_degrees.items()})
        object.__setattr__(self, "vertex_charges", dict(self.vertex_charges))
        object.__setattr__(self, "edge_defects", defects)
        object.__setattr__(self, "point_torsions", tuple(self.point_torsions))
        object.__setattr__(self, "vertical_torsions", tuple(self.vertical_torsions))

    @cached_property
    def stabilization(self) -> Stabilization:
        return stabilize(self.curve)

    @property
    def contracted(self) -> Subcurve:
        return self.stabilization.contracted

    @property
    def torsions(self) -> Tuple[TorsionRecord, ...]:
        return self.point_torsions + self.vertical_torsions

    def carried_charge(self) -> ChargeDatum:
        parts: List[ChargeDatum] = [self.core_charge, *self.vertex_charges.values()]
        parts.extend(rec.charge for rec in self.torsions)
        return total(parts)

    def is_balanced(self) -> bool:
        return self.carried_charge() == self.total_charge

    def sheaf_on(self, vertices: Iterable[str]) -> SheafOnTree:
        """The torsion-free part restricted to a rational tree of components."""
        sub = Subcurve(self.curve, frozenset(vertices)).as_graph()
        return SheafOnTree(
            sub,
            self.rank,
            {v: self.splitting[v] for v in sub.vertex_ids},
            {e.id: self.edge_defects[e.id] for e in sub.edges},
        )

    def tree_fragments(self) -> List[SheafOnTree]:
        return [self.sheaf_on(c) for c in self.contracted.components()]

    def degree_of(self, v: str) -> int:
        if v in self.splitting:
            return self.splitting[v].degree
        return self.core_degrees.get(v, 0)


def defect_total(d: FMDatum) -> int:
    return sum(d.edge_defects.values())


def err_charge(d: FMDatum) -> ChargeValue:
    z = ChargeValue(defect_total(d), 0)
    for rec in d.torsions:
        z = z + central_charge(rec.charge)
    return z


def torsion_err(d: FMDatum) -> ChargeValue:
    z = ChargeValue()
    for rec in d.torsions:
        z = z + central_charge(rec.charge)
    return z


def is_flat(d: FMDatum) -> bool:
    return not d.torsions and defect_total(d) == 0


@dataclass(frozen=True)
class Definity:
    neg_im_nonneg: bool
    im_zero_iff_no_vertical: bool
    integer_when_im_zero: bool

    @property
    def ok(self) -> bool:
        return self.neg_im_nonneg and self.im_zero_iff_no_vertical and self.integer_when_im_zero


def definity_check(d: FMDatum) -> Definity:
    z = err_charge(d)
    no_vertical = not d.vertical_torsions
    integral = z.im != 0 or (z.re.denominator == 1 and z.re >= 0)
    return Definity(-z.im >= 0, (z.im == 0) == no_vertical, integral)


def lattice_membership(values: Sequence[ChargeValue], basis: LatticeBasis) -> bool:
    if not isinstance(basis, LatticeBasis):
        basis = LatticeBasis(*basis)
    for z in values:
        if (z.re / basis.re_unit).denominator != 1:
            return False
        if (-z.im / basis.im_unit).denominator != 1:
            return False
    return True
