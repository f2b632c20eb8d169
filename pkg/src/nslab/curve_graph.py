"""Dual graphs of nodal curves.

Vertices are irreducible components (with a geometric genus), edges are nodes
and marked points are smooth points singled out for attaching trees.  All
identifiers are opaque strings and share one namespace, so an id names
exactly one vertex, node or marked point.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple


@dataclass(frozen=True)
class Vertex:
    id: str
    genus: int = 0
    label: Optional[str] = None


@dataclass(frozen=True)
class Edge:
    id: str
    ends: Tuple[str, str]

    @property
    def is_loop(self) -> bool:
        return self.ends[0] == self.ends[1]

    def other(self, v: str) -> str:
        a, b = self.ends
        return b if a == v else a


@dataclass(frozen=True)
class MarkedPoint:
    id: str
    vertex: str


@dataclass(frozen=True)
class CurveGraph:
    vertices: Tuple[Vertex, ...]
    edges: Tuple[Edge, ...] = ()
    marked_points: Tuple[MarkedPoint, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(self.vertices))
        object.__setattr__(self, "edges", tuple(self.edges))
        object.__setattr__(self, "marked_points", tuple(self.marked_points))
        seen = set()
        for item in (*self.vertices, *self.edges, *self.marked_points):
            if item.id in seen:
                raise ValueError(f"duplicate id {item.id!r}")
            seen.add(item.id)
        vids = {v.id for v in self.vertices}
        for v in self.vertices:
            if v.genus < 0:
                raise ValueError(f"vertex {v.id!r} has negative genus")
        for e in self.edges:
            if len(e.ends) != 2 or e.ends[0] not in vids or e.ends[1] not in vids:
                raise ValueError(f"edge {e.id!r} has an unknown endpoint")
        for m in self.marked_points:
            if m.vertex not in vids:
                raise ValueError(f"marked point {m.id!r} sits on an unknown vertex")

    @classmethod
    def build(
        cls,
        genera: Dict[str, int] | Sequence[str],
        edges: Iterable[Tuple[str, str, str]] = (),
        marked: Iterable[Tuple[str, str]] = (),
    ) -> "CurveGraph":
        """Shorthand constructor: ``genera`` maps ids to genus (a plain list means genus 0),
        edges are ``(id, a, b)`` and marked points ``(id, vertex)``."""
        if not isinstance(genera, dict):
            genera = {v: 0 for v in genera}
        return cls(
            tuple(Vertex(v, g) for v, g in genera.items()),
            tuple(Edge(e, (a, b)) for e, a, b in edges),
            tuple(MarkedPoint(m, v) for m, v in marked),
        )

    @cached_property
    def vertex_ids(self) -> FrozenSet[str]:
        return frozenset(v.id for v in self.vertices)

    @cached_property
    def ids(self) -> FrozenSet[str]:
        return frozenset(x.id for x in (*self.vertices, *self.edges, *self.marked_points))

    @cached_property
    def genus_of(self) -> Dict[str, int]:
        return {v.id: v.genus for v in self.vertices}

    @cached_property
    def edge(self) -> Dict[str, Edge]:
        return {e.id: e for e in self.edges}

    @cached_property
    def marked(self) -> Dict[str, MarkedPoint]:
        return {m.id: m for m in self.marked_points}

    @cached_property
    def incident(self) -> Dict[str, Tuple[str, ...]]:
        out: Dict[str, List[str]] = {v.id: [] for v in self.vertices}
        for e in self.edges:
            out[e.ends[0]].append(e.id)
            if not e.is_loop:
                out[e.ends[1]].append(e.id)
        return {k: tuple(sorted(v)) for k, v in out.items()}

    def degree(self, v: str) -> int:
        """Number of branches through ``v``; a self-loop counts twice."""
        return sum(2 if self.edge[e].is_loop else 1 for e in self.incident[v])

    def components(self, subset: Optional[Iterable[str]] = None) -> List[FrozenSet[str]]:
        """Connected components of the induced subgraph, sorted by smallest id."""
        keep = self.vertex_ids if subset is None else frozenset(subset)
        parent = {v: v for v in keep}

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for e in self.edges:
            a, b = e.ends
            if a in keep and b in keep:
                ra, rb = find(a), find(b)
                if ra != rb:
                    parent[max(ra, rb)] = min(ra, rb)
        groups: Dict[str, set] = {}
        for v in keep:
            groups.setdefault(find(v), set()).add(v)
        return sorted((frozenset(g) for g in groups.values()), key=min)

    def fresh_id(self, base: str, taken: Iterable[str] = ()) -> str:
        used = self.ids | set(taken)
        name = base
        while name in used:
            name += "'"
        return name


@dataclass(frozen=True)
class Subcurve:
    """Induced subgraph on a vertex set; edges leaving the set are attach edges."""

    graph: CurveGraph
    vertices: FrozenSet[str] = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "vertices", frozenset(self.vertices))
        unknown = self.vertices - self.graph.vertex_ids
        if unknown:
            raise ValueError(f"unknown vertices {sorted(unknown)}")

    @property
    def internal_edges(self) -> List[Edge]:
        return [e for e in self.graph.edges if e.ends[0] in self.vertices and e.ends[1] in self.vertices]

    @property
    def attach_edges(self) -> List[Edge]:
        return [e for e in self.graph.edges if (e.ends[0] in self.vertices) != (e.ends[1] in self.vertices)]

    def components(self) -> List[FrozenSet[str]]:
        return self.graph.components(self.vertices)

    def attach_edges_of(self, component: FrozenSet[str]) -> List[Edge]:
        return [e for e in self.graph.edges if (e.ends[0] in component) != (e.ends[1] in component)]

    def internal_degree(self, v: str) -> int:
        return sum(
            (2 if e.is_loop else 1)
            for e in self.internal_edges
            if v in e.ends
        )

    def as_graph(self) -> CurveGraph:
        """The subcurve as a standalone graph (marked points on it are kept)."""
        g = self.graph
        return CurveGraph(
            tuple(v for v in g.vertices if v.id in self.vertices),
            tuple(self.internal_edges),
            tuple(m for m in g.marked_points if m.vertex in self.vertices),
        )


def genus(g: CurveGraph) -> int:
    b1 = len(g.edges) - len(g.vertices) + len(g.components())
    return sum(v.genus for v in g.vertices) + b1


def is_p1_tree(s: Subcurve) -> bool:
    if any(s.graph.genus_of[v] != 0 for v in s.vertices):
        return False
    return len(s.internal_edges) == len(s.vertices) - len(s.components())


@dataclass(frozen=True)
class ChainProfile:
    is_chain: bool
    length: int
    ends: Tuple[str, ...]


def chain_profile(s: Subcurve) -> ChainProfile:
    if not is_p1_tree(s):
        raise ValueError("subcurve is not a rational tree")
    degs = {v: s.internal_degree(v) for v in s.vertices}
    connected = len(s.components()) == 1
    is_chain = connected and all(d <= 2 for d in degs.values())
    ends = tuple(sorted(v for v, d in degs.items() if d <= 1)) if is_chain else ()
    return ChainProfile(is_chain, len(s.vertices), ends)


def is_admissible_tree(g: CurveGraph, s: Subcurve) -> bool:
    if s.graph is not g and s.graph != g:
        s = Subcurve(g, s.vertices)
    if not s.vertices or not is_p1_tree(s):
        return False
    return all(1 <= len(s.attach_edges_of(k)) <= 2 for k in s.components())


@dataclass(frozen=True)
class ImagePoint:
    """Where a collapsed component went: a marked point (``smooth``) or a node."""

    kind: str
    id: str
    vertices: Tuple[str, ...]


@dataclass(frozen=True)
class CollapseResult:
    graph: CurveGraph
    vertex_image: Dict[str, str]
    collapsed_to: Dict[FrozenSet[str], ImagePoint]
    point_image: Dict[str, str]


def collapse(g: CurveGraph, s: Subcurve) -> CollapseResult:
    if not is_admissible_tree(g, s):
        raise ValueError("subcurve is not an admissible rational tree")
    removed_edges = set()
    new_edges: List[Edge] = []
    new_marked: List[MarkedPoint] = []
    collapsed_to: Dict[FrozenSet[str], ImagePoint] = {}
    vertex_image = {v: v for v in g.vertex_ids}
    point_image: Dict[str, str] = {}
    taken: List[str] = []
    for comp in s.components():
        attach = s.attach_edges_of(comp)
        tag = ",".join(sorted(comp))
        outside = [e.other(e.ends[0] if e.ends[0] in comp else e.ends[1]) for e in attach]
        if len(attach) == 1:
            pid = g.fresh_id(f"pt[{tag}]", taken)
            new_marked.append(MarkedPoint(pid, outside[0]))
            image = ImagePoint("smooth", pid, (outside[0],))
        else:
            pid = g.fresh_id(f"nd[{tag}]", taken)
            new_edges.append(Edge(pid, (outside[0], outside[1])))
            image = ImagePoint("node", pid, (outside[0], outside[1]))
        taken.append(pid)
        collapsed_to[comp] = image
        for v in comp:
            vertex_image[v] = pid
        for e in g.edges:
            if e.ends[0] in comp or e.ends[1] in comp:
                removed_edges.add(e.id)
                point_image[e.id] = pid
        for m in g.marked_points:
            if m.vertex in comp:
                point_image[m.id] = pid
    graph = CurveGraph(
        tuple(v for v in g.vertices if v.id not in s.vertices),
        tuple(e for e in g.edges if e.id not in removed_edges) + tuple(new_edges),
        tuple(m for m in g.marked_points if m.vertex not in s.vertices) + tuple(new_marked),
    )
    return CollapseResult(graph, vertex_image, collapsed_to, point_image)


def default_insert_edge_ids(g: CurveGraph, site: str) -> Tuple[str, ...]:
    if site in g.marked:
        return (g.fresh_id(f"{site}.e"),)
    a = g.fresh_id(f"{site}.a")
    return (a, g.fresh_id(f"{site}.b", [a]))


def insert_tree(
    g: CurveGraph,
    site: str,
    t: CurveGraph,
    attach: Sequence[str],
    new_edges: Optional[Sequence[str]] = None,
) -> CurveGraph:
    """Glue the rational tree ``t`` in at a marked point or into a node.

    A marked point takes one attach vertex and becomes a node joining it to the
    tree.  A node ``(u, v)`` takes two attach vertices ``(a, b)`` (possibly equal)
    and is replaced by the nodes ``(u, a)`` and ``(b, v)``.
    """
    whole = Subcurve(t, t.vertex_ids)
    if len(t.components()) != 1 or not is_p1_tree(whole):
        raise ValueError("inserted curve must be a connected rational tree")
    clash = g.ids & t.ids
    if clash:
        raise ValueError(f"inserted tree reuses ids {sorted(clash)}")
    if any(a not in t.vertex_ids for a in attach):
        raise ValueError("attach vertices must belong to the tree")
    if new_edges is None:
        new_edges = default_insert_edge_ids(g, site)
    new_edges = tuple(new_edges)
    if (set(new_edges) & (g.ids | t.ids)) or len(set(new_edges)) != len(new_edges):
        raise ValueError("new edge ids collide")
    if site in g.marked:
        if len(attach) != 1 or len(new_edges) != 1:
            raise ValueError("a marked point takes exactly one attach vertex")
        v = g.marked[site].vertex
        edges = g.edges + t.edges + (Edge(new_edges[0], (v, attach[0])),)
        marked = tuple(m for m in g.marked_points if m.id != site) + t.marked_points
        return CurveGraph(g.vertices + t.vertices, edges, marked)
    if site in g.edge:
        if len(attach) != 2 or len(new_edges) != 2:
            raise ValueError("a node takes exactly two attach vertices")
        u, v = g.edge[site].ends
        edges = tuple(e for e in g.edges if e.id != site) + t.edges + (
            Edge(new_edges[0], (u, attach[0])),
            Edge(new_edges[1], (attach[1], v)),
        )
        return CurveGraph(g.vertices + t.vertices, edges, g.marked_points + t.marked_points)
    raise ValueError(f"site {site!r} is neither a marked point nor a node")


def is_stable(g: CurveGraph) -> bool:
    for v in g.vertices:
        d = g.degree(v.id)
        if v.genus == 0 and d < 3:
            return False
        if v.genus == 1 and d < 1:
            return False
    return True


def _unstable_locus(g: CurveGraph, descending: bool = False) -> FrozenSet[str]:
    # Repeatedly drop rational components with fewer than three branches.  A
    # two-branch component is smoothed out: its neighbours get joined directly.
    alive = set(g.vertex_ids)
    edges: Dict[int, List[str]] = {i: list(e.ends) for i, e in enumerate(g.edges)}
    counter = len(edges)

    def branches(v):
        return [(i, k) for i, ends in edges.items() for k in (0, 1) if ends[k] == v]

    removed = set()
    while True:
        candidates = []
        for v in alive:
            if g.genus_of[v] != 0:
                continue
            br = branches(v)
            if len(br) <= 2 and not (len(br) == 2 and br[0][0] == br[1][0]):
                candidates.append(v)
        if not candidates:
            break
        v = max(candidates) if descending else min(candidates)
        br = branches(v)
        far = [edges[i][1 - k] for i, k in br]
        for i, _ in br:
            edges.pop(i, None)
        if len(far) == 2:
            edges[counter] = far
            counter += 1
        alive.discard(v)
        removed.add(v)
    return frozenset(removed)


@dataclass(frozen=True)
class Stabilization:
    core: CurveGraph
    contracted: Subcurve
    collapse: Optional[CollapseResult]


def stabilize(g: CurveGraph) -> Stabilization:
    if genus(g) < 2:
        raise ValueError("stabilization needs arithmetic genus at least 2")
    if len(g.components()) != 1:
        raise ValueError("stabilization needs a connected curve")
    contracted = Subcurve(g, _unstable_locus(g))
    if not contracted.vertices:
        return Stabilization(g, contracted, None)
    result = collapse(g, contracted)
    assert is_stable(result.graph)
    return Stabilization(result.graph, contracted, result)


def tree_leaf_inequality(t: CurveGraph) -> Tuple[int, int]:
    """(#leaves, #vertices of valence >= 3 plus two) for a tree with >= 2 vertices."""
    leaves = sum(1 for v in t.vertices if t.degree(v.id) == 1)
    branchy = sum(1 for v in t.vertices if t.degree(v.id) >= 3)
    return leaves, branchy + 2
