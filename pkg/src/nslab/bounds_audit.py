"""Audits of the boundedness inequalities on explicit scenarios.

A scenario stores the numbers the inequalities talk about.  It can be written
by hand or derived from a datum with :func:`scenario_from_datum`, which splits
the contracted locus into components mapping onto curves, nonconstant
components with point image, and constant ones.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .curve_graph import CurveGraph, Subcurve, tree_leaf_inequality
from .error_charge import FMDatum
from .reduction_engine import is_constant
from .sheaf_on_tree import AttachContext, SheafOnTree, collapse_oracle, h0


@dataclass(frozen=True, eq=False)
class Scenario:
    rank: int
    total_h: int
    vertical_h: Tuple[int, ...] = ()
    fragment: Optional[SheafOnTree] = None
    n_a: int = 0
    torsion_length: int = 0
    core_defects: Tuple[int, ...] = ()
    core_node_count: int = 0
    chi_core: int = 0
    chi_quotient: int = 0
    attach_count: int = 0
    trees: Tuple[CurveGraph, ...] = ()


@dataclass(frozen=True)
class Report:
    check: str
    passed: bool
    detail: Dict[str, object] = field(default_factory=dict)
    informational: bool = False


def check_component_bound(s: Scenario) -> Report:
    hs = list(s.vertical_h)
    detail = {"components": len(hs), "sum_h": sum(hs), "total_h": s.total_h}
    if not hs:
        return Report("component_bound", True, detail)
    ok = all(h >= 1 for h in hs) and sum(hs) < s.total_h
    return Report("component_bound", ok and len(hs) < s.total_h, detail)


def check_torsion_bound(s: Scenario) -> Report:
    sections = h0(s.fragment) if s.fragment is not None else 0
    bound = sections - s.rank * s.n_a
    detail = {"torsion_length": s.torsion_length, "h0": sections, "n_a": s.n_a, "bound": bound}
    return Report("torsion_bound", s.torsion_length >= bound, detail)


def check_delta_bound(s: Scenario) -> Report:
    total = sum(s.core_defects)
    limit = s.rank * s.core_node_count
    ok = total <= limit and all(0 <= x <= s.rank for x in s.core_defects)
    return Report("delta_bound", ok, {"defects": total, "limit": limit})


def check_euler_window(s: Scenario) -> Report:
    gap = abs(s.chi_core - s.chi_quotient)
    limit = 2 * s.rank * s.attach_count
    return Report("euler_window", gap <= limit, {"gap": gap, "limit": limit})


def tree_inequalities(s: Scenario) -> Report:
    """Leaves versus branch points on each contracted tree; logged, not enforced."""
    rows = []
    for t in s.trees:
        if len(t.vertices) >= 2:
            rows.append(tree_leaf_inequality(t))
    ok = all(leaves >= need for leaves, need in rows)
    return Report("tree_leaves", ok, {"trees": len(rows)}, informational=True)


CHECKS = (check_component_bound, check_torsion_bound, check_delta_bound, check_euler_window)


def audit(s: Scenario) -> List[Report]:
    return [check(s) for check in CHECKS] + [tree_inequalities(s)]


def audit_passed(reports: List[Report]) -> bool:
    return all(r.passed for r in reports if not r.informational)


def _chi(d: FMDatum, vertices) -> int:
    r = d.rank
    inside = frozenset(vertices)
    g = d.curve
    chi = sum(d.degree_of(v) + r * (1 - g.genus_of[v]) for v in inside)
    for e in g.edges:
        if e.ends[0] in inside and e.ends[1] in inside:
            chi += d.edge_defects[e.id] - r
    return chi


def scenario_from_datum(d: FMDatum) -> Scenario:
    g = d.curve
    r = d.rank
    contracted = d.contracted
    core = g.vertex_ids - contracted.vertices
    vertical = {v for v in contracted.vertices if d.vertex_charges.get(v) and d.vertex_charges[v].jl_dot_beta > 0}
    pointlike = contracted.vertices - vertical
    active = set()
    for comp in g.components(pointlike):
        if any(not is_constant(d, v) for v in comp):
            active |= comp
    fragment = d.sheaf_on(active) if active else None
    n_a = len(Subcurve(g, active).attach_edges) if active else 0

    torsion = 0
    image_defects = []
    for comp in contracted.components():
        attach = contracted.attach_edges_of(comp)
        contacts = tuple(e.ends[0] if e.ends[0] in comp else e.ends[1] for e in attach)
        ctx = AttachContext(
            "smooth" if len(attach) == 1 else "node",
            tuple(d.edge_defects[e.id] for e in attach),
            contacts,
        )
        image = collapse_oracle(d.sheaf_on(comp), ctx)
        torsion += image.torsion_length
        if image.image_defect is not None:
            image_defects.append(image.image_defect)
    core_edges = [e for e in g.edges if e.ends[0] in core and e.ends[1] in core]
    core_defects = tuple(d.edge_defects[e.id] for e in core_edges) + tuple(image_defects)
    return Scenario(
        rank=r,
        total_h=d.total_charge.h_dot_beta,
        vertical_h=tuple(d.vertex_charges[v].h_dot_beta for v in sorted(vertical)),
        fragment=fragment,
        n_a=n_a,
        torsion_length=torsion,
        core_defects=core_defects,
        core_node_count=len(d.stabilization.core.edges),
        chi_core=_chi(d, core),
        chi_quotient=_chi(d, g.vertex_ids) - torsion,
        attach_count=len(contracted.attach_edges),
        trees=tuple(Subcurve(g, c).as_graph() for c in contracted.components()),
    )
