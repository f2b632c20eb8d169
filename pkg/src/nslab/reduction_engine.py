"""Error-charge reduction as a rewrite system with checked certificates.

Three moves drive a datum to a flat one:

* ``C1`` bubbles a rational tree at a point carrying vertical torsion and moves
  that torsion onto the new components, lowering ``-Im Err``;
* ``C2`` bubbles a positive tree at a point with a defect or point torsion,
  lowering the (now integral) error charge by ``ker_chi + deg``;
* ``D`` contracts an admissible tree of constant components once ``Err = 0``.

Moves carry explicit payloads.  The engine never invents geometry, it only
applies a move and re-derives every claimed decrease from the new datum.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Dict, FrozenSet, List, Mapping, Optional, Sequence, Tuple

from .charge import ChargeDatum, ChargeValue, StabilityVerdict, Verdict, precedes, stability_verdict, total
from .curve_graph import (
    CurveGraph,
    MarkedPoint,
    Subcurve,
    Vertex,
    collapse,
    default_insert_edge_ids,
    genus,
    insert_tree,
    is_admissible_tree,
)
from .error_charge import FMDatum, TorsionRecord, err_charge
from .sheaf_on_tree import (
    AttachContext,
    Positivity,
    SheafOnTree,
    SplittingType,
    classify_positivity,
    degree,
    pushforward_collapse,
)

log = logging.getLogger(__name__)


class ReductionError(Exception):
    pass


class CertificateError(ReductionError):
    """A move failed one of its checks."""


class NoDecrease(CertificateError):
    pass


class ChargeLeak(CertificateError):
    pass


class NotPositivePayload(CertificateError):
    pass


class ArithmeticMismatch(CertificateError):
    pass


class PhaseError(CertificateError):
    pass


class NotAdmissible(CertificateError):
    pass


class NotConstant(CertificateError):
    pass


class NonzeroErr(CertificateError):
    pass


class StuckState(ReductionError):
    """No further move is offered but the error charge is not zero."""


@dataclass(frozen=True, eq=False)
class Payload:
    """A tree to glue in at a site, with the sheaf and charges it carries.

    ``attach`` names one tree vertex for a smooth site and two (possibly equal)
    for a node.  ``contact_defects`` and ``contact_edges`` follow the order of the
    new nodes: for a node ``(u, v)`` they are ``(u, attach[0])`` then
    ``(attach[1], v)``.  ``residual`` lists the torsion left after the move; its
    points refer to the curve after insertion.
    """

    tree: CurveGraph
    attach: Tuple[str, ...]
    splitting: Mapping[str, SplittingType] = field(default_factory=dict)
    internal_defects: Mapping[str, int] = field(default_factory=dict)
    contact_defects: Tuple[int, ...] = ()
    contact_edges: Tuple[str, ...] = ()
    vertex_charges: Mapping[str, ChargeDatum] = field(default_factory=dict)
    residual: Tuple[TorsionRecord, ...] = ()
    ker_chi: int = 0

    def sheaf(self, rank: int) -> SheafOnTree:
        types = {v: self.splitting.get(v, SplittingType.trivial(rank)) for v in self.tree.vertex_ids}
        return SheafOnTree(self.tree, rank, types, dict(self.internal_defects))


@dataclass(frozen=True, eq=False)
class Move:
    kind: str
    site: Optional[str] = None
    payload: Optional[Payload] = None
    target: FrozenSet[str] = frozenset()

    def __post_init__(self):
        if self.kind not in ("C1", "C2", "D"):
            raise ValueError(f"unknown move kind {self.kind!r}")
        object.__setattr__(self, "target", frozenset(self.target))


@dataclass(frozen=True)
class TraceStep:
    move: Move
    err_before: ChargeValue
    err_after: ChargeValue
    certificate: Dict[str, object]


@dataclass(frozen=True, eq=False)
class ReductionState:
    datum: FMDatum
    trace: Tuple[TraceStep, ...] = ()


# ---------------------------------------------------------------------------
# helpers


def is_constant(d: FMDatum, v: str) -> bool:
    if d.curve.genus_of[v] != 0:
        return False
    if any(d.splitting[v].parts):
        return False
    return d.vertex_charges.get(v, ChargeDatum()).is_zero


def constant_components(d: FMDatum) -> List[str]:
    """Constant rational components inside the contracted locus."""
    return sorted(v for v in d.contracted.vertices if is_constant(d, v))


def constant_count(d: FMDatum) -> int:
    return len(constant_components(d))


def records_at(d: FMDatum, point: str) -> List[TorsionRecord]:
    return [rec for rec in d.torsions if rec.point == point]


def step_bound(d: FMDatum) -> Fraction:
    """Upper bound on the number of greedy steps from ``d``."""
    z = err_charge(d)
    return -z.im / d.lattice.im_unit + z.re + constant_count(d)


def _site_kind(d: FMDatum, site: str) -> str:
    g = d.curve
    if site in g.edge:
        return "node"
    if site in g.marked or site in g.vertex_ids:
        return "smooth"
    raise ValueError(f"unknown site {site!r}")


def _bubble(d: FMDatum, site: str, p: Payload) -> FMDatum:
    """Glue the payload tree in at ``site`` and rewrite the records there."""
    g = d.curve
    kind = _site_kind(d, site)
    insert_at = site
    if site in g.vertex_ids:
        insert_at = g.fresh_id(f"{site}.pt")
        g = CurveGraph(g.vertices, g.edges, g.marked_points + (MarkedPoint(insert_at, site),))
    edges = p.contact_edges or default_insert_edge_ids(g, insert_at)
    arity = 2 if kind == "node" else 1
    if len(p.attach) != arity or len(p.contact_defects) != arity:
        raise ValueError("payload arity does not match the site")
    curve = insert_tree(g, insert_at, p.tree, p.attach, edges)
    splitting = dict(d.splitting)
    for v in p.tree.vertex_ids:
        splitting[v] = p.splitting.get(v, SplittingType.trivial(d.rank))
    defects = {e: x for e, x in d.edge_defects.items() if e != site}
    defects.update(p.internal_defects)
    defects.update(zip(edges, p.contact_defects))
    charges = dict(d.vertex_charges)
    charges.update({v: c for v, c in p.vertex_charges.items() if not c.is_zero})
    kept = [rec for rec in d.torsions if rec.point != site]
    every = kept + list(p.residual)
    return replace(
        d,
        curve=curve,
        splitting=splitting,
        edge_defects=defects,
        vertex_charges=charges,
        point_torsions=tuple(rec for rec in every if rec.charge.jl_dot_beta == 0),
        vertical_torsions=tuple(rec for rec in every if rec.charge.jl_dot_beta > 0),
    )


def _check_conservation(before: FMDatum, after: FMDatum) -> None:
    if after.total_charge != before.total_charge or not after.is_balanced():
        raise ChargeLeak("carried charge no longer adds up to the total charge")


def _payload_balance(d: FMDatum, site: str, p: Payload) -> None:
    taken = total([rec.charge for rec in records_at(d, site)])
    given = total(list(p.vertex_charges.values()) + [rec.charge for rec in p.residual])
    if taken != given:
        raise ChargeLeak(f"payload at {site!r} does not carry the charge it removes")


def _step(s: ReductionState, move: Move, datum: FMDatum, before: ChargeValue, cert: Dict) -> ReductionState:
    after = err_charge(datum)
    cert = {"err_before": before, "err_after": after, **cert}
    log.debug("%s at %s: %s -> %s", move.kind, move.site or sorted(move.target), before, after)
    return ReductionState(datum, s.trace + (TraceStep(move, before, after, cert),))


# ---------------------------------------------------------------------------
# moves


def apply_c1(s: ReductionState, m: Move) -> ReductionState:
    d = s.datum
    before = err_charge(d)
    if before.im >= 0:
        raise PhaseError("no vertical torsion left to absorb")
    if m.kind != "C1" or m.site is None or m.payload is None:
        raise ValueError("malformed C1 move")
    site_vertical = [rec for rec in records_at(d, m.site) if rec.charge.jl_dot_beta > 0]
    if not site_vertical:
        raise ValueError(f"site {m.site!r} carries no vertical torsion")
    if len(m.payload.tree.components()) != 1:
        raise ValueError("the bubbled tree must be connected")
    _payload_balance(d, m.site, m.payload)
    moved = sum(c.jl_dot_beta for c in m.payload.vertex_charges.values())
    if moved <= 0:
        raise NoDecrease("payload moves no (J+L).beta off the site")
    new = _bubble(d, m.site, m.payload)
    _check_conservation(d, new)
    after = err_charge(new)
    if not -after.im < -before.im:
        raise NoDecrease("-Im Err did not drop")
    if not precedes(after, before):
        raise NoDecrease("error charge did not decrease")
    return _step(s, m, new, before, {"kind": "C1", "moved_jl": moved, "precedes": True})


def apply_c2(s: ReductionState, m: Move) -> ReductionState:
    d = s.datum
    before = err_charge(d)
    if before.im != 0:
        raise PhaseError("vertical torsion must be absorbed first")
    if before.re <= 0:
        raise PhaseError("error charge is already zero")
    if m.kind != "C2" or m.site is None or m.payload is None:
        raise ValueError("malformed C2 move")
    p = m.payload
    kind = _site_kind(d, m.site)
    site_defect = d.edge_defects.get(m.site, 0)
    site_torsion = sum(rec.charge.chi for rec in records_at(d, m.site))
    if site_defect == 0 and site_torsion == 0:
        raise ValueError(f"site {m.site!r} has neither a defect nor torsion")
    if any(rec.charge.jl_dot_beta for rec in p.residual):
        raise ValueError("C2 payloads may not leave vertical torsion")
    if p.ker_chi < 0:
        raise ValueError("ker_chi must be nonnegative")
    sheaf = p.sheaf(d.rank)
    if classify_positivity(sheaf) not in (Positivity.POSITIVE, Positivity.STRICTLY_POSITIVE):
        raise NotPositivePayload("bubbled sheaf is not positive")
    image = pushforward_collapse(sheaf, AttachContext(kind, p.contact_defects, p.attach))
    residual_chi = sum(rec.charge.chi for rec in p.residual)
    if kind == "node" and image.image_defect != site_defect:
        raise ArithmeticMismatch("collapsing the payload does not restore the site's defect")
    if image.torsion_length + residual_chi + p.ker_chi != site_torsion:
        raise ArithmeticMismatch("collapsing the payload does not restore the site's torsion")
    _payload_balance(d, m.site, p)
    new = _bubble(d, m.site, p)
    _check_conservation(d, new)
    after = err_charge(new)
    drop = p.ker_chi + degree(sheaf)
    if after.im != 0 or before.re - after.re != drop:
        raise ArithmeticMismatch(f"error charge dropped by {before.re - after.re}, expected {drop}")
    if not precedes(after, before):
        raise NoDecrease("error charge did not decrease")
    cert = {
        "kind": "C2",
        "ker_chi": p.ker_chi,
        "degree": degree(sheaf),
        "torsion_length": image.torsion_length,
        "image_defect": image.image_defect,
        "precedes": True,
    }
    return _step(s, m, new, before, cert)


def apply_d(s: ReductionState, m: Move) -> ReductionState:
    d = s.datum
    before = err_charge(d)
    if before:
        raise NonzeroErr("constant trees are contracted only once the error charge vanishes")
    if m.kind != "D" or not m.target:
        raise ValueError("malformed D move")
    target = m.target
    g = d.curve
    if not target <= d.contracted.vertices:
        raise NotAdmissible("target leaves the contracted locus")
    sub = Subcurve(g, target)
    if not is_admissible_tree(g, sub):
        raise NotAdmissible("target is not an admissible rational tree")
    if not all(is_constant(d, v) for v in target):
        raise NotConstant("target carries a nonconstant component")
    count_before = constant_count(d)
    result = collapse(g, sub)
    defects = {e: x for e, x in d.edge_defects.items() if e in result.graph.edge}
    new = replace(
        d,
        curve=result.graph,
        splitting={v: t for v, t in d.splitting.items() if v not in target},
        vertex_charges={v: c for v, c in d.vertex_charges.items() if v not in target},
        edge_defects=defects,
    )
    _check_conservation(d, new)
    if genus(new.curve) != genus(g):
        raise ArithmeticMismatch("contraction changed the genus")
    if err_charge(new):
        raise NonzeroErr("contraction changed the error charge")
    count_after = constant_count(new)
    if not count_after < count_before:
        raise NoDecrease("constant component count did not drop")
    cert = {"kind": "D", "constant_before": count_before, "constant_after": count_after}
    return _step(s, m, new, before, cert)


def apply(s: ReductionState, m: Move) -> ReductionState:
    return {"C1": apply_c1, "C2": apply_c2, "D": apply_d}[m.kind](s, m)


# ---------------------------------------------------------------------------
# default generator


MoveSupplier = Callable[[FMDatum], Optional[Move]]


def _bubble_ids(d: FMDatum) -> Tuple[str, str]:
    n = len(d.curve.vertices)
    x = d.curve.fresh_id(f"b{n}")
    return x, d.curve.fresh_id(f"{x}.m", [x])


def _c1_move(d: FMDatum) -> Move:
    site = min(rec.point for rec in d.vertical_torsions)
    recs = records_at(d, site)
    absorbed = next(rec for rec in recs if rec.charge.jl_dot_beta > 0)
    rest = [rec for rec in recs if rec is not absorbed]
    x, mp = _bubble_ids(d)
    if _site_kind(d, site) == "node":
        edges = default_insert_edge_ids(d.curve, site)
        tree = CurveGraph((Vertex(x),))
        residual = tuple(TorsionRecord(edges[0], rec.charge) for rec in rest)
        payload = Payload(tree, (x, x), contact_defects=(d.edge_defects[site], 0), contact_edges=edges,
                          vertex_charges={x: absorbed.charge}, residual=residual)
    else:
        tree = CurveGraph((Vertex(x),), (), (MarkedPoint(mp, x),) if rest else ())
        residual = tuple(TorsionRecord(mp, rec.charge) for rec in rest)
        payload = Payload(tree, (x,), contact_defects=(0,), vertex_charges={x: absorbed.charge}, residual=residual)
    return Move("C1", site, payload)


def _c2_candidates(d: FMDatum) -> List[str]:
    sites = {e for e, x in d.edge_defects.items() if x > 0}
    sites |= {rec.point for rec in d.point_torsions}
    out = []
    for site in sorted(sites):
        t = sum(rec.charge.chi for rec in records_at(d, site))
        if site in d.curve.edge and t > 0 and d.edge_defects[site] == 0:
            continue  # torsion at a locally free node cannot be restored by a positive bubble
        out.append(site)
    return out


def _c2_move(d: FMDatum, site: str) -> Move:
    r = d.rank
    x, mp = _bubble_ids(d)
    unit = SplittingType((0,) * (r - 1) + (1,))
    t = sum(rec.charge.chi for rec in records_at(d, site))
    if _site_kind(d, site) == "smooth":
        # pendant degree-one bubble carries one unit of the torsion
        tree = CurveGraph((Vertex(x),), (), (MarkedPoint(mp, x),) if t > 1 else ())
        residual = (TorsionRecord(mp, ChargeDatum(chi=t - 1)),) if t > 1 else ()
        return Move("C2", site, Payload(tree, (x,), {x: unit}, contact_defects=(0,),
                                        vertex_charges={x: ChargeDatum(chi=1)}, residual=residual))
    delta = d.edge_defects[site]
    edges = default_insert_edge_ids(d.curve, site)
    tree = CurveGraph((Vertex(x),))
    if t == 0:
        return Move("C2", site, Payload(tree, (x, x), {x: unit}, contact_defects=(delta - 1, 0), contact_edges=edges))
    if delta == r:
        residual = (TorsionRecord(edges[0], ChargeDatum(chi=t - 1)),) if t > 1 else ()
        return Move("C2", site, Payload(tree, (x, x), {x: unit}, contact_defects=(r, 0), contact_edges=edges,
                                        vertex_charges={x: ChargeDatum(chi=1)}, residual=residual))
    # defect below the rank: absorb the torsion through ker_chi and one defect unit
    return Move("C2", site, Payload(tree, (x, x), {x: unit}, contact_defects=(delta - 1, 0), contact_edges=edges,
                                    vertex_charges={x: ChargeDatum(chi=t)}, ker_chi=t))


def _d_move(d: FMDatum) -> Optional[Move]:
    loose = [v for v in constant_components(d) if d.curve.degree(v) < 3]
    if not loose:
        return None
    return Move("D", target=d.curve.components(loose)[0])


def greedy_move(d: FMDatum) -> Optional[Move]:
    """Lowest site first: absorb vertical torsion, then one defect or torsion unit
    per step with a single degree-one bubble, then contract loose constant trees."""
    z = err_charge(d)
    if z.im < 0:
        return _c1_move(d)
    if z.re > 0:
        sites = _c2_candidates(d)
        return _c2_move(d, sites[0]) if sites else None
    return _d_move(d)


# ---------------------------------------------------------------------------
# driver and validation


@dataclass(frozen=True)
class RunResult:
    final: ReductionState
    steps: int


def run(initial: FMDatum, generator: MoveSupplier = greedy_move, max_steps: int = 100_000) -> RunResult:
    if not initial.is_balanced():
        raise ChargeLeak("initial datum does not carry its total charge")
    state = ReductionState(initial)
    while len(state.trace) < max_steps:
        move = generator(state.datum)
        if move is None:
            break
        state = apply(state, move)
    else:
        raise StuckState(f"no termination within {max_steps} steps")
    final_err = err_charge(state.datum)
    if final_err:
        raise StuckState(f"generator exhausted with error charge {final_err}")
    return RunResult(state, len(state.trace))


def replay(initial: FMDatum, moves: Sequence[Move]) -> ReductionState:
    state = ReductionState(initial)
    for m in moves:
        state = apply(state, m)
    return state


@dataclass(frozen=True)
class TypeVerdict:
    stability: StabilityVerdict
    charge_conserved: bool
    fragments_nonnegative: bool
    loose_constant_components: Tuple[str, ...]

    @property
    def violations(self) -> List[str]:
        out = []
        if not self.charge_conserved:
            out.append("charge")
        if self.stability.verdict is Verdict.UNSTABLE:
            out.append("stability")
        if not self.fragments_nonnegative:
            out.append("fragments")
        if self.loose_constant_components:
            out.append("special-points")
        return out

    @property
    def ok(self) -> bool:
        return not self.violations


def loose_constant_components(d: FMDatum) -> Tuple[str, ...]:
    """Constant contracted components with fewer than three special points."""
    return tuple(v for v in constant_components(d) if d.curve.degree(v) < 3)


def validate_semistable_type(
    final: ReductionState,
    destabilizers: Sequence[ChargeDatum] = (),
    weak_condition_2: bool = False,
) -> TypeVerdict:
    """Check a flat final state: the charge it carries and its slope against the
    declared subobjects, nonnegativity on the contracted trees (``weak_condition_2``
    exempts components mapping onto curves), and three special points on every
    constant contracted component."""
    d = final.datum
    if err_charge(d):
        raise NonzeroErr("final state is not flat")
    verdict = stability_verdict(d.total_charge, destabilizers)
    nonneg = True
    for v in d.contracted.vertices:
        if weak_condition_2 and d.vertex_charges.get(v, ChargeDatum()).jl_dot_beta > 0:
            continue
        if v in d.splitting and not d.splitting[v].is_nonnegative:
            nonneg = False
    return TypeVerdict(verdict, d.is_balanced(), nonneg, loose_constant_components(d))
