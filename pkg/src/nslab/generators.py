"""Seeded instance generators and small exhaustive enumerations.

Everything random here takes an explicit seed or ``random.Random`` so runs
replay exactly.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterator, List, Sequence, Tuple

from .charge import ChargeDatum, total
from .curve_graph import CurveGraph, Edge, MarkedPoint, Vertex, genus, is_stable
from .error_charge import FMDatum, LatticeBasis, TorsionRecord
from .sheaf_on_tree import (
    AttachContext,
    CollapseImage,
    SheafOnTree,
    SplittingType,
    collapse_oracle,
    degree,
    delta_flat_total,
    h0_oracle,
    pushforward_collapse,
)

# ---------------------------------------------------------------------------
# tree shapes


def _prufer_edges(seq: Sequence[int], n: int) -> List[Tuple[int, int]]:
    deg = [1] * n
    for x in seq:
        deg[x] += 1
    edges = []
    for x in seq:
        leaf = min(i for i in range(n) if deg[i] == 1)
        edges.append((leaf, x))
        deg[leaf] -= 1
        deg[x] -= 1
    u, w = [i for i in range(n) if deg[i] == 1]
    edges.append((u, w))
    return edges


def _canonical(n: int, edges: Sequence[Tuple[int, int]]) -> str:
    adj: Dict[int, List[int]] = {i: [] for i in range(n)}
    for a, b in edges:
        adj[a].append(b)
        adj[b].append(a)

    def encode(v, parent):
        return "(" + "".join(sorted(encode(w, v) for w in adj[v] if w != parent)) + ")"

    # centres: strip leaves until one or two vertices remain
    layer = [v for v in range(n) if len(adj[v]) <= 1]
    remaining = n
    degs = {v: len(adj[v]) for v in range(n)}
    while remaining > 2:
        remaining -= len(layer)
        nxt = []
        for v in layer:
            for w in adj[v]:
                degs[w] -= 1
                if degs[w] == 1:
                    nxt.append(w)
        layer = nxt
    return min(encode(c, None) for c in layer)


def free_trees(n: int) -> List[List[Tuple[int, int]]]:
    """Edge lists of all trees on ``n`` vertices up to isomorphism."""
    if n == 1:
        return [[]]
    if n == 2:
        return [[(0, 1)]]
    found: Dict[str, List[Tuple[int, int]]] = {}
    for seq in itertools.product(range(n), repeat=n - 2):
        edges = _prufer_edges(seq, n)
        found.setdefault(_canonical(n, edges), edges)
    return [found[k] for k in sorted(found)]


def forests(n: int) -> List[CurveGraph]:
    """All rational forests with exactly ``n`` components in total, up to isomorphism."""
    shapes = {k: free_trees(k) for k in range(1, n + 1)}
    out = []

    def partitions(rest, largest):
        if rest == 0:
            yield []
            return
        for k in range(min(rest, largest), 0, -1):
            for tail in partitions(rest - k, k):
                yield [k] + tail

    for parts in partitions(n, n):
        groups = [(k, parts.count(k)) for k in sorted(set(parts), reverse=True)]
        choices = [itertools.combinations_with_replacement(range(len(shapes[k])), c) for k, c in groups]
        for pick in itertools.product(*choices):
            verts, edges, offset = [], [], 0
            for (k, _), idxs in zip(groups, pick):
                for i in idxs:
                    for a, b in shapes[k][i]:
                        edges.append((offset + a, offset + b))
                    verts.extend(range(offset, offset + k))
                    offset += k
            out.append(
                CurveGraph(
                    tuple(Vertex(f"v{i}") for i in verts),
                    tuple(Edge(f"e{j}", (f"v{a}", f"v{b}")) for j, (a, b) in enumerate(edges)),
                )
            )
    return out


def splitting_types(rank: int, max_part: int, min_part: int = 0) -> List[SplittingType]:
    return [SplittingType(c) for c in itertools.combinations_with_replacement(range(min_part, max_part + 1), rank)]


def family_size(max_vertices: int, max_rank: int, max_part: int) -> int:
    count = 0
    for n in range(1, max_vertices + 1):
        for f in forests(n):
            for r in range(1, max_rank + 1):
                count += len(splitting_types(r, max_part)) ** n * (r + 1) ** len(f.edges)
    return count


def exhaustive_family(max_vertices: int, max_rank: int, max_part: int) -> Iterator[SheafOnTree]:
    """Every nonnegative sheaf in the box, smallest curves first."""
    for n in range(1, max_vertices + 1):
        for f in forests(n):
            ids = sorted(f.vertex_ids)
            eids = [e.id for e in f.edges]
            for r in range(1, max_rank + 1):
                types = splitting_types(r, max_part)
                for defects in itertools.product(range(r + 1), repeat=len(eids)):
                    dmap = dict(zip(eids, defects))
                    for combo in itertools.product(types, repeat=n):
                        yield SheafOnTree(f, r, dict(zip(ids, combo)), dmap)


# ---------------------------------------------------------------------------
# random sheaves


def random_tree(rng: random.Random, n: int, prefix: str = "v") -> CurveGraph:
    verts = [f"{prefix}{i}" for i in range(n)]
    edges = [Edge(f"{prefix}e{i}", (verts[rng.randrange(i)], verts[i])) for i in range(1, n)]
    return CurveGraph(tuple(Vertex(v) for v in verts), tuple(edges))


def random_sheaf(
    rng: random.Random,
    max_vertices: int = 6,
    max_rank: int = 3,
    max_part: int = 4,
    positive: bool = False,
    prefix: str = "v",
) -> SheafOnTree:
    n = rng.randint(1, max_vertices)
    r = rng.randint(1, max_rank)
    tree = random_tree(rng, n, prefix)
    types = {v: SplittingType(tuple(rng.randint(0, max_part) for _ in range(r))) for v in sorted(tree.vertex_ids)}
    if positive and all(t.degree == 0 for t in types.values()):
        v = rng.choice(sorted(types))
        types[v] = SplittingType(types[v].parts[:-1] + (max(1, max_part),))
    defects = {e.id: rng.randint(0, r) for e in tree.edges}
    return SheafOnTree(tree, r, types, defects)


# ---------------------------------------------------------------------------
# collapse scenarios


@dataclass(frozen=True, eq=False)
class CollapseScenario:
    """A rational tree ``before`` containing trees that collapse onto a core tree.

    ``trees`` lists ``(vertices, context)`` for each collapsed tree; ``after`` is
    the core with defects at the image nodes still to be filled in.
    """

    before: SheafOnTree
    core: Tuple[str, ...]
    trees: Tuple[Tuple[Tuple[str, ...], AttachContext, Tuple[str, ...], str], ...]
    seed: int


def random_collapse_scenario(seed: int, max_rank: int = 3, max_part: int = 3) -> CollapseScenario:
    rng = random.Random(seed)
    r = rng.randint(1, max_rank)
    ncore = rng.randint(1, 3)
    core = random_tree(rng, ncore, "c")
    vertices = list(core.vertices)
    edges = list(core.edges)
    types = {v.id: SplittingType(tuple(rng.randint(0, 2) for _ in range(r))) for v in core.vertices}
    defects = {e.id: rng.randint(0, r) for e in core.edges}
    trees = []
    for k in range(rng.randint(1, 3)):
        t = random_sheaf(rng, 3, 1, max_part, positive=True, prefix=f"t{k}_")
        t = SheafOnTree(
            t.tree,
            r,
            {v: SplittingType(tuple(rng.randint(0, max_part) for _ in range(r))) for v in sorted(t.tree.vertex_ids)},
            {e.id: rng.randint(0, r) for e in t.tree.edges},
        )
        if all(st.degree == 0 for st in t.vertex_types.values()):
            v = min(t.vertex_types)
            bumped = dict(t.vertex_types)
            bumped[v] = SplittingType(bumped[v].parts[:-1] + (1,))
            t = SheafOnTree(t.tree, r, bumped, t.edge_defects)
        vertices.extend(t.tree.vertices)
        edges.extend(t.tree.edges)
        types.update(t.vertex_types)
        defects.update(t.edge_defects)
        tverts = sorted(t.tree.vertex_ids)
        core_edges = [e for e in edges if e.ends[0].startswith("c") and e.ends[1].startswith("c")]
        if core_edges and rng.random() < 0.6:
            host = rng.choice(core_edges)
            a, b = rng.choice(tverts), rng.choice(tverts)
            u, w = host.ends
            edges.remove(host)
            defects.pop(host.id)
            new = (Edge(f"{host.id}<{k}", (u, a)), Edge(f"{host.id}>{k}", (b, w)))
            edges.extend(new)
            bd = (rng.randint(0, r), rng.randint(0, r))
            defects.update({new[0].id: bd[0], new[1].id: bd[1]})
            ctx = AttachContext("node", bd, (a, b))
            trees.append((tuple(tverts), ctx, (new[0].id, new[1].id), host.id))
        else:
            host_v = rng.choice([v.id for v in core.vertices])
            a = rng.choice(tverts)
            link = Edge(f"p{k}", (host_v, a))
            edges.append(link)
            bd = (rng.randint(0, r),)
            defects[link.id] = bd[0]
            ctx = AttachContext("smooth", bd, (a,))
            trees.append((tuple(tverts), ctx, (link.id,), host_v))
    before = SheafOnTree(CurveGraph(tuple(vertices), tuple(edges)), r, types, defects)
    return CollapseScenario(before, tuple(sorted(core.vertex_ids)), tuple(trees), seed)


@dataclass(frozen=True)
class CollapseAccount:
    tree_degree: int
    defects_before: int
    defects_after: int
    torsion: int
    formula: Tuple[CollapseImage, ...]
    measured: Tuple[CollapseImage, ...]
    global_sections_match: bool

    @property
    def defect_change(self) -> int:
        return self.defects_after - self.defects_before

    @property
    def aggregate_change(self) -> int:
        """Defects before minus defects after minus torsion; equals minus the tree degree."""
        return self.defects_before - self.defects_after - self.torsion

    @property
    def branches_match(self) -> bool:
        return self.formula == self.measured


def account_collapse(sc: CollapseScenario, gluing_seed: int | None = None) -> CollapseAccount:
    F = sc.before
    r = F.rank
    formula, measured = [], []
    tree_degree = 0
    for verts, ctx, links, host in sc.trees:
        part = F.restrict(verts)
        tree_degree += degree(part)
        formula.append(pushforward_collapse(part, ctx))
        image = collapse_oracle(part, ctx, gluing_seed)
        measured.append(image)
    torsion = sum(m.torsion_length for m in measured)

    # collapsed curve: the core, with each node tree replaced by one node
    core = set(sc.core)
    kept_edges = [e for e in F.tree.edges if e.ends[0] in core and e.ends[1] in core]
    defects = {e.id: F.edge_defects[e.id] for e in kept_edges}
    new_edges = []
    for (verts, ctx, links, host), image in zip(sc.trees, measured):
        if ctx.kind != "node":
            continue
        outer = []
        for link in links:
            e = F.tree.edge[link]
            outer.append(e.ends[0] if e.ends[0] not in verts else e.ends[1])
        eid = f"img[{','.join(links)}]"
        new_edges.append(Edge(eid, tuple(outer)))
        defects[eid] = image.image_defect
    after_graph = CurveGraph(tuple(v for v in F.tree.vertices if v.id in core), tuple(kept_edges + new_edges))
    after = SheafOnTree(after_graph, r, {v: F.vertex_types[v] for v in core}, defects)
    match = h0_oracle(F, gluing_seed) == torsion + h0_oracle(after, gluing_seed)
    return CollapseAccount(
        tree_degree,
        delta_flat_total(F),
        delta_flat_total(after),
        torsion,
        tuple(formula),
        tuple(measured),
        match,
    )


# ---------------------------------------------------------------------------
# Fourier-Mukai data and initial reduction states


def random_stable_core(rng: random.Random, max_vertices: int = 3) -> CurveGraph:
    while True:
        n = rng.randint(1, max_vertices)
        genera = {f"c{i}": rng.choice((0, 0, 1, 2)) for i in range(n)}
        ids = list(genera)
        ends = [(ids[rng.randrange(i)], ids[i]) for i in range(1, n)]
        while True:
            g = CurveGraph.build(genera, [(f"n{j}", a, b) for j, (a, b) in enumerate(ends)])
            if is_stable(g) and genus(g) >= 2:
                break
            unstable = [v for v in ids if (genera[v] == 0 and g.degree(v) < 3) or (genera[v] == 1 and g.degree(v) < 1)]
            a = rng.choice(unstable) if unstable else rng.choice(ids)
            ends.append((a, rng.choice(ids)))
        if len(g.edges) <= 6:
            return g


def _multiple(rng: random.Random, unit: Fraction, lo: int, hi: int) -> Fraction:
    return unit * rng.randint(lo, hi)


@dataclass
class _Builder:
    rng: random.Random
    rank: int
    vertices: List[Vertex]
    edges: List[Edge]
    marked: List[MarkedPoint]
    splitting: Dict[str, SplittingType]
    defects: Dict[str, int]

    def taken(self) -> set:
        return {x.id for x in (*self.vertices, *self.edges, *self.marked)}

    def fresh(self, base: str) -> str:
        taken = self.taken()
        i = 0
        while f"{base}{i}" in taken:
            i += 1
        return f"{base}{i}"

    def marked_point(self, v: str) -> str:
        m = self.fresh("m")
        self.marked.append(MarkedPoint(m, v))
        return m

    def pendant_chain(self, host: str, length: int, types: Sequence[SplittingType]) -> List[str]:
        prev = host
        made = []
        for t in types[:length]:
            v = self.fresh("k")
            self.vertices.append(Vertex(v))
            self.splitting[v] = t
            self.edges.append(Edge(self.fresh("ke"), (prev, v)))
            made.append(v)
            prev = v
        return made

    def bridge(self, edge: Edge, length: int) -> None:
        self.edges.remove(edge)
        self.defects.pop(edge.id, None)
        prev = edge.ends[0]
        for _ in range(length):
            v = self.fresh("k")
            self.vertices.append(Vertex(v))
            self.splitting[v] = SplittingType.trivial(self.rank)
            self.edges.append(Edge(self.fresh("ke"), (prev, v)))
            prev = v
        self.edges.append(Edge(self.fresh("ke"), (prev, edge.ends[1])))


def random_initial_state(
    seed: int,
    max_neg_im: int = 5,
    max_re: int = 20,
    max_rank: int = 3,
    constant_trees: bool = True,
) -> FMDatum:
    """A datum at the start of the reduction: stable core plus defects, torsion and
    loose trees, with ``-Im Err <= max_neg_im`` and ``Re Err <= max_re``.

    Vertical torsion is drawn with ``chi - B.beta >= 0`` and point torsion on a
    node only where the node has a positive defect.
    """
    rng = random.Random(seed)
    r = rng.randint(1, max_rank)
    lattice = LatticeBasis(Fraction(1, rng.choice((1, 2, 3))), Fraction(1, rng.choice((1, 2))))
    core = random_stable_core(rng)
    b = _Builder(rng, r, list(core.vertices), list(core.edges), [], {}, {})
    for v in core.vertices:
        if v.genus == 0:
            b.splitting[v.id] = SplittingType.trivial(r)
    core_degrees = {v.id: rng.randint(0, 3) for v in core.vertices if v.genus > 0}
    core_ids = [v.id for v in core.vertices]
    core_edges = list(core.edges)

    re_budget = Fraction(rng.randint(0, max_re))
    im_budget = Fraction(rng.randint(0, max_neg_im))
    point_torsions: List[TorsionRecord] = []
    vertical: List[TorsionRecord] = []

    # loose trees first, so bridges only replace nodes that carry nothing
    if constant_trees:
        for _ in range(rng.randint(0, 2)):
            shape = rng.random()
            if shape < 0.4:
                b.pendant_chain(rng.choice(core_ids), rng.randint(1, 3), [SplittingType.trivial(r)] * 3)
            elif shape < 0.7 and core_edges:
                e = core_edges.pop(rng.randrange(len(core_edges)))
                b.bridge(e, rng.randint(1, 2))
            else:
                hub = b.pendant_chain(rng.choice(core_ids), 1, [SplittingType.trivial(r)])[0]
                for _ in range(2):
                    t = SplittingType(tuple(sorted(rng.randint(0, 2) for _ in range(r - 1))) + (rng.randint(1, 2),))
                    b.pendant_chain(hub, 1, [t])

    for e in core_edges:
        if re_budget >= 1 and rng.random() < 0.5:
            d = rng.randint(1, min(r, int(re_budget)))
            b.defects[e.id] = d
            re_budget -= d
    for e in core_edges:
        if b.defects.get(e.id, 0) > 0 and re_budget >= 1 and rng.random() < 0.3:
            chi = rng.randint(1, min(2, int(re_budget)))
            point_torsions.append(TorsionRecord(e.id, ChargeDatum(chi=chi)))
            re_budget -= chi
    while re_budget >= 1 and rng.random() < 0.5:
        chi = rng.randint(1, min(3, int(re_budget)))
        site = rng.choice(core_ids) if rng.random() < 0.3 else b.marked_point(rng.choice(core_ids))
        point_torsions.append(TorsionRecord(site, ChargeDatum(chi=chi)))
        re_budget -= chi
    while im_budget >= lattice.im_unit and rng.random() < 0.7:
        steps = int(min(im_budget, 3) / lattice.im_unit)
        jl = lattice.im_unit * rng.randint(1, steps)
        bb = _multiple(rng, lattice.re_unit, -3, 3)
        room = min(re_budget, Fraction(3))
        chi = -((-bb) // 1)  # smallest integer >= B.beta
        if chi - bb > room:
            break
        chi += rng.randint(0, int(room - (chi - bb)))
        charge = ChargeDatum(chi, bb, jl, rng.randint(1, 2))
        if core_edges and rng.random() < 0.3:
            site = rng.choice(core_edges).id
        else:
            site = b.marked_point(rng.choice(core_ids))
        vertical.append(TorsionRecord(site, charge))
        im_budget -= jl
        re_budget -= chi - bb

    vh = sum(rec.charge.h_dot_beta for rec in vertical)
    core_charge = ChargeDatum(
        rng.randint(-5, 5),
        _multiple(rng, lattice.re_unit, -4, 4),
        _multiple(rng, lattice.im_unit, 1, 4),
        vh + rng.randint(1, 3),
    )
    curve = CurveGraph(tuple(b.vertices), tuple(b.edges), tuple(b.marked))
    carried = total([core_charge] + [rec.charge for rec in point_torsions + vertical])
    return FMDatum(
        curve=curve,
        rank=r,
        total_charge=carried,
        core_charge=core_charge,
        splitting=b.splitting,
        core_degrees=core_degrees,
        edge_defects=b.defects,
        point_torsions=tuple(point_torsions),
        vertical_torsions=tuple(vertical),
        lattice=lattice,
    )


def random_datum(seed: int) -> FMDatum:
    """Initial states of all sizes, a fraction of them flat."""
    rng = random.Random(seed)
    kind = rng.random()
    if kind < 0.2:
        return random_initial_state(seed, max_neg_im=0, max_re=0)
    if kind < 0.4:
        return random_initial_state(seed, max_neg_im=0, max_re=rng.randint(1, 20))
    return random_initial_state(seed, max_neg_im=rng.randint(0, 8), max_re=rng.randint(0, 30))
