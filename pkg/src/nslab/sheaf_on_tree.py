"""Torsion-free sheaves on rational trees, recorded by splitting types and node defects.

Each rational component carries a splitting type ``O(a_1) + ... + O(a_r)`` and
each node a flatness defect ``0 <= d <= r`` (the excess of the fibre dimension
over the rank).  Closed formulas for sections and degrees live next to an
independent oracle that writes the section space down in polynomial
coordinates and solves the gluing conditions by exact elimination.
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from . import linalg
from .curve_graph import CurveGraph, Edge, Subcurve, Vertex, is_p1_tree


@dataclass(frozen=True, order=True)
class SplittingType:
    parts: Tuple[int, ...]

    def __post_init__(self):
        if len(self.parts) < 1:
            raise ValueError("a splitting type needs at least one part")
        object.__setattr__(self, "parts", tuple(sorted(int(a) for a in self.parts)))

    @classmethod
    def of(cls, *parts: int) -> "SplittingType":
        return cls(tuple(parts))

    @classmethod
    def trivial(cls, rank: int) -> "SplittingType":
        return cls((0,) * rank)

    @property
    def rank(self) -> int:
        return len(self.parts)

    @property
    def degree(self) -> int:
        return sum(self.parts)

    @property
    def is_nonnegative(self) -> bool:
        return self.parts[0] >= 0

    @property
    def is_positive(self) -> bool:
        return self.is_nonnegative and self.parts[-1] > 0


@dataclass(frozen=True)
class EdgeGluing:
    """Gluing at one node: a point on each branch, a projection of each fibre onto
    an ``r - d`` dimensional quotient and an identification of the two quotients.

    Index 0 refers to ``edge.ends[0]``, index 1 to ``edge.ends[1]``.
    """

    points: Tuple[Fraction, Fraction]
    projections: Tuple[Tuple[Tuple[Fraction, ...], ...], Tuple[Tuple[Fraction, ...], ...]]
    identification: Tuple[Tuple[Fraction, ...], ...]


@dataclass(frozen=True, eq=False)
class SheafOnTree:
    tree: CurveGraph
    rank: int
    vertex_types: Mapping[str, SplittingType]
    edge_defects: Mapping[str, int] = field(default_factory=dict)
    gluing: Optional[Mapping[str, EdgeGluing]] = None

    def __post_init__(self):
        if self.rank < 1:
            raise ValueError("rank must be positive")
        if not is_p1_tree(Subcurve(self.tree, self.tree.vertex_ids)):
            raise ValueError("underlying curve is not a rational tree")
        types = {}
        for v in self.tree.vertex_ids:
            if v not in self.vertex_types:
                raise ValueError(f"vertex {v!r} has no splitting type")
            t = self.vertex_types[v]
            if not isinstance(t, SplittingType):
                t = SplittingType(tuple(t))
            if t.rank != self.rank:
                raise ValueError(f"vertex {v!r} has {t.rank} parts, expected {self.rank}")
            types[v] = t
        extra = set(self.vertex_types) - self.tree.vertex_ids
        if extra:
            raise ValueError(f"splitting types for unknown vertices {sorted(extra)}")
        defects = {e.id: 0 for e in self.tree.edges}
        for e, d in self.edge_defects.items():
            if e not in defects:
                raise ValueError(f"defect on unknown node {e!r}")
            if not 0 <= d <= self.rank:
                raise ValueError(f"defect {d} at {e!r} outside [0, {self.rank}]")
            defects[e] = int(d)
        object.__setattr__(self, "vertex_types", types)
        object.__setattr__(self, "edge_defects", defects)

    @property
    def is_nonnegative(self) -> bool:
        return all(t.is_nonnegative for t in self.vertex_types.values())

    @property
    def is_locally_free(self) -> bool:
        return delta_flat_total(self) == 0

    def restrict(self, vertices) -> "SheafOnTree":
        sub = Subcurve(self.tree, vertices).as_graph()
        return SheafOnTree(
            sub,
            self.rank,
            {v: self.vertex_types[v] for v in sub.vertex_ids},
            {e.id: self.edge_defects[e.id] for e in sub.edges},
        )


def degree(F: SheafOnTree) -> int:
    return sum(t.degree for t in F.vertex_types.values())


def delta_flat_total(F: SheafOnTree) -> int:
    return sum(F.edge_defects.values())


def _require_nonnegative(F: SheafOnTree) -> None:
    if not F.is_nonnegative:
        raise ValueError("sheaf has a negative splitting part")


def h0(F: SheafOnTree) -> int:
    """Dimension of global sections of a nonnegative sheaf."""
    _require_nonnegative(F)
    return F.rank * len(F.tree.components()) + degree(F) + delta_flat_total(F)


class Positivity(str, enum.Enum):
    NOT_NONNEGATIVE = "NotNonnegative"
    NONNEGATIVE = "Nonnegative"
    POSITIVE = "Positive"
    STRICTLY_POSITIVE = "StrictlyPositive"


def classify_positivity(F: SheafOnTree) -> Positivity:
    if not F.is_nonnegative:
        return Positivity.NOT_NONNEGATIVE
    types = F.vertex_types
    if all(t.is_positive for t in types.values()):
        return Positivity.STRICTLY_POSITIVE
    if all(any(types[v].is_positive for v in comp) for comp in F.tree.components()):
        return Positivity.POSITIVE
    return Positivity.NONNEGATIVE


def constrained_sections_lower_bound(F: SheafOnTree, a: int) -> int:
    return h0(F) - F.rank * a


@dataclass(frozen=True)
class AttachContext:
    """How a tree meets the rest of the curve: ``smooth`` (one contact point, the tree
    collapses to a smooth point) or ``node`` (two contact points, it collapses to a
    node).  ``boundary_defects`` are the defects of the ambient sheaf at the contact
    points; ``vertices`` optionally names the tree vertices carrying them."""

    kind: str
    boundary_defects: Tuple[int, ...]
    vertices: Tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "boundary_defects", tuple(self.boundary_defects))
        object.__setattr__(self, "vertices", tuple(self.vertices))
        arity = {"smooth": 1, "node": 2}.get(self.kind)
        if arity is None:
            raise ValueError(f"unknown attach kind {self.kind!r}")
        if len(self.boundary_defects) != arity:
            raise ValueError(f"{self.kind} context takes {arity} boundary defect(s)")
        if self.vertices and len(self.vertices) != arity:
            raise ValueError(f"{self.kind} context takes {arity} contact vertex(es)")
        if any(d < 0 for d in self.boundary_defects):
            raise ValueError("boundary defects are nonnegative")


@dataclass(frozen=True)
class CollapseImage:
    torsion_length: int
    image_defect: Optional[int]


def _check_tree_part(F: SheafOnTree, ctx: AttachContext) -> None:
    _require_nonnegative(F)
    if len(F.tree.components()) != 1:
        raise ValueError("collapse arithmetic applies to one connected tree")
    if any(d > F.rank for d in ctx.boundary_defects):
        raise ValueError("boundary defect exceeds the rank")


def eta(F: SheafOnTree, ctx: AttachContext) -> int:
    return degree(F) + delta_flat_total(F) + sum(ctx.boundary_defects)


def pushforward_collapse(F: SheafOnTree, ctx: AttachContext) -> CollapseImage:
    """Torsion and defect left behind when the tree is contracted."""
    _check_tree_part(F, ctx)
    n = eta(F, ctx)
    if ctx.kind == "smooth":
        return CollapseImage(n, None)
    return CollapseImage(max(0, n - F.rank), min(n, F.rank))


def delta_flat_change(F: SheafOnTree, contexts: Sequence[AttachContext] = ()) -> int:
    """Change of total defect when a positive tree is bubbled off, ``-deg``.

    For each supplied context the bookkeeping identity
    ``(defects before collapse) - (image defect + torsion) = -deg`` is re-checked.
    """
    if classify_positivity(F) not in (Positivity.POSITIVE, Positivity.STRICTLY_POSITIVE):
        raise ValueError("tree sheaf is not positive")
    change = -degree(F)
    for ctx in contexts:
        image = pushforward_collapse(F, ctx)
        before = delta_flat_total(F) + sum(ctx.boundary_defects)
        after = image.torsion_length + (image.image_defect or 0)
        if before - after != change:
            raise ArithmeticError("defect bookkeeping does not balance")
    return change


# ---------------------------------------------------------------------------
# section-space oracle


def _selection(rank: int, keep: int) -> Tuple[Tuple[Fraction, ...], ...]:
    # projection onto the last `keep` coordinates
    return tuple(
        tuple(Fraction(int(j == rank - keep + i)) for j in range(rank)) for i in range(keep)
    )


def _identity(n: int) -> Tuple[Tuple[Fraction, ...], ...]:
    return tuple(tuple(Fraction(int(i == j)) for j in range(n)) for i in range(n))


def _incident_params(tree: CurveGraph) -> Dict[Tuple[str, str], Fraction]:
    # canonical node parameters: 1, 2, 3, ... along each vertex's incident nodes
    params = {}
    for v in sorted(tree.vertex_ids):
        for i, e in enumerate(tree.incident[v]):
            params[(v, e)] = Fraction(i + 1)
    return params


def canonical_gluing(F: SheafOnTree) -> Dict[str, EdgeGluing]:
    params = _incident_params(F.tree)
    out = {}
    for e in F.tree.edges:
        keep = F.rank - F.edge_defects[e.id]
        sel = _selection(F.rank, keep)
        out[e.id] = EdgeGluing(
            (params[(e.ends[0], e.id)], params[(e.ends[1], e.id)]), (sel, sel), _identity(keep)
        )
    return out


def _random_full_rank(rng: random.Random, rows: int, cols: int) -> Tuple[Tuple[Fraction, ...], ...]:
    while True:
        m = [[rng.randint(-4, 4) for _ in range(cols)] for _ in range(rows)]
        if linalg.rank(m) == rows:
            return tuple(tuple(Fraction(x) for x in r) for r in m)


def random_gluing(F: SheafOnTree, seed: int) -> Dict[str, EdgeGluing]:
    rng = random.Random(seed)
    params: Dict[Tuple[str, str], Fraction] = {}
    for v in sorted(F.tree.vertex_ids):
        inc = F.tree.incident[v]
        values = rng.sample(range(1, 60), len(inc))
        for e, t in zip(inc, values):
            params[(v, e)] = Fraction(t * rng.choice((-1, 1)), rng.randint(1, 3))
    out = {}
    for e in sorted(F.tree.edges, key=lambda x: x.id):
        keep = F.rank - F.edge_defects[e.id]
        out[e.id] = EdgeGluing(
            (params[(e.ends[0], e.id)], params[(e.ends[1], e.id)]),
            (_random_full_rank(rng, keep, F.rank), _random_full_rank(rng, keep, F.rank)),
            _random_full_rank(rng, keep, keep),
        )
    return out


GluingChoice = Optional[int | str | Mapping[str, EdgeGluing]]

# seed of the gluing used when a measurement needs a generic one
GENERIC_SEED = 0


def resolve_gluing(F: SheafOnTree, gluing: GluingChoice = None) -> Dict[str, EdgeGluing]:
    """``None`` uses the sheaf's own data (canonical where missing), an int seeds a
    pseudorandom choice, ``"canonical"`` forces the coordinate gluing and a
    mapping is used as given."""
    if isinstance(gluing, int) and not isinstance(gluing, bool):
        return random_gluing(F, gluing)
    if gluing == "canonical":
        return canonical_gluing(F)
    base = canonical_gluing(F)
    if gluing is None:
        gluing = F.gluing or {}
    base.update(gluing)
    _validate_gluing(F, base)
    return base


def _validate_gluing(F: SheafOnTree, gluing: Mapping[str, EdgeGluing]) -> None:
    r = F.rank
    for e in F.tree.edges:
        g = gluing[e.id]
        keep = r - F.edge_defects[e.id]
        for proj in g.projections:
            if len(proj) != keep or any(len(row) != r for row in proj):
                raise ValueError(f"projection at {e.id!r} has the wrong shape")
            if linalg.rank(proj) != keep:
                raise ValueError(f"projection at {e.id!r} is not surjective")
        ident = g.identification
        if len(ident) != keep or any(len(row) != keep for row in ident) or linalg.rank(ident) != keep:
            raise ValueError(f"identification at {e.id!r} is not invertible")
        if g.points[0] == g.points[1] and e.ends[0] == e.ends[1]:
            raise ValueError(f"node {e.id!r} glues a point to itself")
    for v in F.tree.vertex_ids:
        seen = []
        for e in F.tree.incident[v]:
            edge = F.tree.edge[e]
            seen.append(gluing[e].points[0 if edge.ends[0] == v else 1])
        if len(set(seen)) != len(seen):
            raise ValueError(f"two nodes share a point on {v!r}")


class SectionSystem:
    """Polynomial coordinates for the sections on each component together with
    the linear conditions imposed by the nodes."""

    def __init__(self, F: SheafOnTree, gluing: GluingChoice = None):
        _require_nonnegative(F)
        self.F = F
        self.gluing = resolve_gluing(F, gluing)
        self.columns: Dict[Tuple[str, int], range] = {}
        n = 0
        for v in sorted(F.tree.vertex_ids):
            for k, a in enumerate(F.vertex_types[v].parts):
                self.columns[(v, k)] = range(n, n + a + 1)
                n += a + 1
        self.ncols = n
        self.rows = [row for e in F.tree.edges for row in self._node_rows(e)]

    def fibre(self, v: str, t: Fraction) -> List[List[Fraction]]:
        """Evaluation at parameter ``t`` of component ``v``: an ``r x ncols`` matrix."""
        out = []
        for k in range(self.F.rank):
            row = [Fraction(0)] * self.ncols
            power = Fraction(1)
            for c in self.columns[(v, k)]:
                row[c] = power
                power *= t
            out.append(row)
        return out

    def evaluate(self, v: str, t: Fraction, vectors: Sequence[Sequence[Fraction]]) -> List[List[Fraction]]:
        """Values at parameter ``t`` of component ``v`` of the given sections, as an
        ``r x len(vectors)`` matrix."""
        out = []
        for k in range(self.F.rank):
            cols = self.columns[(v, k)]
            powers = [t**j for j in range(len(cols))]
            out.append([sum(vec[c] * pw for c, pw in zip(cols, powers) if vec[c]) for vec in vectors])
        return out

    def _node_rows(self, e: Edge) -> List[List[Fraction]]:
        g = self.gluing[e.id]
        left = linalg.matmul(g.identification, g.projections[0])
        rows = [[Fraction(0)] * self.ncols for _ in left]
        # the fibre map is supported on one component's columns, so fill those directly
        for coeffs, v, t, sign in ((left, e.ends[0], g.points[0], 1), (g.projections[1], e.ends[1], g.points[1], -1)):
            for k in range(self.F.rank):
                cols = self.columns[(v, k)]
                powers = [t**j for j in range(len(cols))]
                for row, c in zip(rows, coeffs):
                    a = sign * c[k]
                    if a:
                        for col, pw in zip(cols, powers):
                            row[col] += a * pw
        return rows

    def node_params(self, v: str) -> List[Fraction]:
        out = []
        for e in self.F.tree.incident[v]:
            edge = self.F.tree.edge[e]
            out.append(self.gluing[e].points[0 if edge.ends[0] == v else 1])
        return out

    def spare_params(self, v: str, count: int) -> List[Fraction]:
        used = set(self.node_params(v))
        out = []
        t = Fraction(0)
        while len(out) < count:
            if t not in used:
                out.append(t)
            t -= 1
        return out

    def dimension(self, extra_rows: Sequence[Sequence[Fraction]] = ()) -> int:
        return self.ncols - linalg.rank(list(self.rows) + list(extra_rows))

    def basis(self) -> List[List[Fraction]]:
        return linalg.nullspace(self.rows, self.ncols)


def h0_oracle(F: SheafOnTree, gluing: GluingChoice = None) -> int:
    return SectionSystem(F, gluing).dimension()


def is_globally_generated_oracle(F: SheafOnTree, gluing: GluingChoice = None) -> bool:
    """Global sections span the fibre at a spare point and at every node point of
    every component."""
    system = SectionSystem(F, gluing)
    basis = system.basis()
    if not basis:
        return False
    for v in sorted(F.tree.vertex_ids):
        for t in system.node_params(v) + system.spare_params(v, 1):
            if linalg.rank(system.evaluate(v, t, basis)) != F.rank:
                return False
    return True


def vanishing_sections_oracle(
    F: SheafOnTree,
    points: Sequence[Tuple[str, Fraction]] = (),
    count: int = 0,
    gluing: GluingChoice = None,
) -> int:
    """Dimension of sections vanishing at the given fibres, plus ``count`` extra
    spare points spread over the components in id order."""
    system = SectionSystem(F, gluing)
    rows: List[List[Fraction]] = []
    for v, t in points:
        rows.extend(system.fibre(v, Fraction(t)))
    order = sorted(F.tree.vertex_ids)
    per_vertex: Dict[str, int] = {}
    for i in range(count):
        v = order[i % len(order)]
        per_vertex[v] = per_vertex.get(v, 0) + 1
    for v, n in per_vertex.items():
        for t in system.spare_params(v, n + 1)[1:]:
            rows.extend(system.fibre(v, t))
    return system.dimension(rows)


def _contact_vertices(F: SheafOnTree, ctx: AttachContext) -> Tuple[str, ...]:
    if ctx.vertices:
        for v in ctx.vertices:
            if v not in F.tree.vertex_ids:
                raise ValueError(f"contact vertex {v!r} not in the tree")
        return ctx.vertices
    low = min(F.tree.vertex_ids)
    return (low,) * len(ctx.boundary_defects)


def collapse_oracle(F: SheafOnTree, ctx: AttachContext, gluing: GluingChoice = None) -> CollapseImage:
    """Torsion and image defect measured on an explicit model, without the closed form.

    The tree is attached through its contact points to one or two extra trivial
    components.  Torsion is the space of global sections vanishing on the extra
    components; the image defect is read off by matching the remaining sections
    against the collapsed model with each candidate defect.

    Torsion depends on the gluing, not only on the combinatorial data: the
    coordinate gluing lines up the positive summands across nodes and can
    trap extra sections.  Without an explicit choice the measurement uses a
    generic (seeded pseudorandom) gluing.
    """
    _check_tree_part(F, ctx)
    if gluing is None and F.gluing is None:
        gluing = GENERIC_SEED
    r = F.rank
    contacts = _contact_vertices(F, ctx)
    outer = [F.tree.fresh_id(f"<side{i}>") for i in range(len(contacts))]
    links = [F.tree.fresh_id(f"<link{i}>", outer) for i in range(len(contacts))]
    tree = CurveGraph(
        F.tree.vertices + tuple(Vertex(b) for b in outer),
        F.tree.edges + tuple(Edge(l, (b, c)) for l, b, c in zip(links, outer, contacts)),
    )
    types = dict(F.vertex_types)
    types.update({b: SplittingType.trivial(r) for b in outer})
    defects = dict(F.edge_defects)
    defects.update(dict(zip(links, ctx.boundary_defects)))
    model = SheafOnTree(tree, r, types, defects)
    system = SectionSystem(model, gluing)
    zero_rows = []
    for b in outer:
        for k in range(r):
            for c in system.columns[(b, k)]:
                row = [Fraction(0)] * system.ncols
                row[c] = Fraction(1)
                zero_rows.append(row)
    torsion = system.dimension(zero_rows)
    remaining = system.dimension() - torsion
    if ctx.kind == "smooth":
        alone = SheafOnTree(CurveGraph((Vertex(outer[0]),)), r, {outer[0]: SplittingType.trivial(r)})
        if h0_oracle(alone) != remaining:
            raise ArithmeticError("sections off the tree do not match the smooth image")
        return CollapseImage(torsion, None)
    image = CurveGraph((Vertex(outer[0]), Vertex(outer[1])), (Edge("node", tuple(outer)),))
    matches = [
        d
        for d in range(r + 1)
        if h0_oracle(SheafOnTree(image, r, {b: SplittingType.trivial(r) for b in outer}, {"node": d}), gluing)
        == remaining
    ]
    if len(matches) != 1:
        raise ArithmeticError("no unique image defect matches the section count")
    return CollapseImage(torsion, matches[0])
