"""Finite graphs, path metrics, automorphism search and the orbit-marker gadget."""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .core import GroupOrderExceeded, ValidationError

DEFAULT_VERTEX_CAP = 5000
DEFAULT_ORDER_CAP = 100_000
MIN_MARKER = 7

Perm = tuple[int, ...]


# ---------------------------------------------------------------------------
# permutation groups

def compose_perm(p: Perm, q: Perm) -> Perm:
    """``p`` after ``q``."""
    return tuple(p[i] for i in q)


def invert_perm(p: Perm) -> Perm:
    inv = [0] * len(p)
    for i, j in enumerate(p):
        inv[j] = i
    return tuple(inv)


@dataclass(frozen=True)
class PermutationGroup:
    """A permutation group stored as its sorted element list; ``p[i]`` is the image of ``i``."""

    degree: int
    elements: tuple[Perm, ...]

    @classmethod
    def generate(cls, degree: int, generators: Iterable[Sequence[int]],
                 cap: int = DEFAULT_ORDER_CAP) -> "PermutationGroup":
        gens = [tuple(g) for g in generators]
        for g in gens:
            if sorted(g) != list(range(degree)):
                raise ValidationError(f"{g} is not a permutation of {degree} points")
        ident = tuple(range(degree))
        seen = {ident}
        frontier = [ident]
        while frontier:
            nxt = []
            for h in frontier:
                for g in gens:
                    p = compose_perm(g, h)
                    if p not in seen:
                        seen.add(p)
                        nxt.append(p)
                        if len(seen) > cap:
                            raise GroupOrderExceeded(f"permutation group exceeds {cap} elements")
            frontier = nxt
        return cls(degree, tuple(sorted(seen)))

    @classmethod
    def symmetric(cls, degree: int) -> "PermutationGroup":
        return cls(degree, tuple(sorted(itertools.permutations(range(degree)))))

    @classmethod
    def trivial(cls, degree: int) -> "PermutationGroup":
        return cls(degree, (tuple(range(degree)),))

    @classmethod
    def cyclic(cls, degree: int) -> "PermutationGroup":
        return cls.generate(degree, [tuple((i + 1) % degree for i in range(degree))])

    @property
    def order(self) -> int:
        return len(self.elements)

    def __contains__(self, p) -> bool:
        return tuple(p) in set(self.elements)

    def is_closed(self) -> bool:
        s = set(self.elements)
        return all(compose_perm(a, b) in s for a in self.elements for b in self.elements) and \
            all(invert_perm(a) in s for a in self.elements)

    def is_faithful(self) -> bool:
        return len(set(self.elements)) == len(self.elements)

    def restrict(self, points: Sequence[int]) -> "tuple[PermutationGroup, int]":
        """Action on ``points`` (which must be an invariant set), relabelled ``0..k-1``.

        Returns the image group and the kernel order.
        """
        pos = {p: i for i, p in enumerate(points)}
        images = []
        for g in self.elements:
            try:
                images.append(tuple(pos[g[p]] for p in points))
            except KeyError:
                raise ValidationError("point set is not invariant under the group") from None
        distinct = set(images)
        return PermutationGroup(len(points), tuple(sorted(distinct))), len(images) // len(distinct)


# ---------------------------------------------------------------------------
# graphs

@dataclass(frozen=True)
class Graph:
    """Simple undirected graph on ``0..n-1``."""

    n: int
    edges: frozenset
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        norm = set()
        for e in self.edges:
            i, j = tuple(e)
            if i == j:
                raise ValidationError("loops are not allowed")
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise ValidationError(f"edge {e} out of range")
            norm.add((min(i, j), max(i, j)))
        object.__setattr__(self, "edges", frozenset(norm))
        if self.labels is not None and len(self.labels) != self.n:
            raise ValidationError("one label per vertex is required")

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[int]], labels=None) -> "Graph":
        return cls(n, frozenset(tuple(e) for e in edges), tuple(labels) if labels is not None else None)

    def adjacency(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.n)]
        for i, j in sorted(self.edges):
            adj[i].append(j)
            adj[j].append(i)
        return adj

    def degrees(self) -> list[int]:
        return [len(a) for a in self.adjacency()]

    def is_connected(self) -> bool:
        return self.n > 0 and bool(np.all(_bfs_all(self.adjacency(), [0]) >= 0))

    def to_json(self) -> dict:
        out = {"n": self.n, "edges": [list(e) for e in sorted(self.edges)]}
        if self.labels is not None:
            out["labels"] = list(self.labels)
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "Graph":
        return cls.from_edges(int(obj["n"]), obj["edges"], obj.get("labels"))


def path_graph(n: int) -> Graph:
    return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def cycle_graph(n: int) -> Graph:
    return Graph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])


def star_graph(leaves: int) -> Graph:
    return Graph.from_edges(leaves + 1, [(0, i) for i in range(1, leaves + 1)])


def complete_graph(n: int) -> Graph:
    return Graph.from_edges(n, itertools.combinations(range(n), 2))


def _bfs_all(adj, sources) -> np.ndarray:
    dist = np.full(len(adj), -1, dtype=np.int64)
    q = deque()
    for s in sources:
        dist[s] = 0
        q.append(s)
    while q:
        v = q.popleft()
        for w in adj[v]:
            if dist[w] < 0:
                dist[w] = dist[v] + 1
                q.append(w)
    return dist


def path_metric(g: Graph) -> np.ndarray:
    """All-pairs shortest-path distances by BFS; raises on disconnected graphs."""
    adj = g.adjacency()
    dist = np.stack([_bfs_all(adj, [s]) for s in range(g.n)])
    if np.any(dist < 0):
        raise ValidationError("graph is disconnected")
    return dist


# ---------------------------------------------------------------------------
# automorphisms

def _refine(adj, colors: list) -> list[int]:
    """Colour refinement by neighbour colour multisets until stable."""
    classes = _canon(colors)
    while True:
        sig = [(classes[v], tuple(sorted(classes[w] for w in adj[v]))) for v in range(len(adj))]
        new = _canon(sig)
        if len(set(new)) == len(set(classes)):
            return new
        classes = new


def _canon(values) -> list[int]:
    table = {v: i for i, v in enumerate(sorted(set(values)))}
    return [table[v] for v in values]


def automorphism_group(g: Graph, vertex_colors: Sequence | None = None, respect_labels: bool = False,
                       max_order: int = DEFAULT_ORDER_CAP, vertex_cap: int = DEFAULT_VERTEX_CAP
                       ) -> PermutationGroup:
    """All vertex permutations preserving the edge set (and the optional colouring).

    The graph must be connected: a permutation preserving the path metric is
    then the same thing as an automorphism, which lets every partial
    assignment be pruned by distance consistency.
    """
    if g.n > vertex_cap:
        raise ValidationError(f"graph has {g.n} vertices, cap is {vertex_cap}")
    adj = g.adjacency()
    dist = path_metric(g)
    base = []
    for v in range(g.n):
        profile = tuple(np.bincount(dist[v], minlength=g.n).tolist())
        tag = (g.labels[v] if respect_labels and g.labels else "",
               repr(vertex_colors[v]) if vertex_colors is not None else "")
        base.append((tag, len(adj[v]), profile))
    color = _refine(adj, base)

    # visit vertices in BFS order from a vertex of the rarest colour
    sizes = np.bincount(color)
    root = min(range(g.n), key=lambda v: (sizes[color[v]], v))
    order = list(np.argsort(_bfs_all(adj, [root]), kind="stable"))
    by_color: dict[int, list[int]] = {}
    for v in range(g.n):
        by_color.setdefault(color[v], []).append(v)

    image = np.full(g.n, -1, dtype=np.int64)
    used = np.zeros(g.n, dtype=bool)
    found: list[Perm] = []

    order_arr = np.asarray(order, dtype=np.int64)

    def candidates(k: int):
        v = order[k]
        done = order_arr[:k]
        for w in by_color[color[v]]:
            if not used[w] and (k == 0 or np.array_equal(dist[w, image[done]], dist[v, done])):
                yield w

    # iterative depth-first search; graphs can be deeper than the recursion limit
    stack = [candidates(0)]
    while stack:
        k = len(stack) - 1
        v = order[k]
        if image[v] >= 0:
            used[image[v]] = False
            image[v] = -1
        w = next(stack[-1], None)
        if w is None:
            stack.pop()
            continue
        image[v] = w
        used[w] = True
        if k + 1 == g.n:
            found.append(tuple(int(x) for x in image))
            if len(found) > max_order:
                raise GroupOrderExceeded(f"automorphism group exceeds {max_order} elements")
        else:
            stack.append(candidates(k + 1))
    return PermutationGroup(g.n, tuple(sorted(found)))


def twin_classes(g: Graph) -> list[list[int]]:
    """Classes of non-adjacent vertices with identical neighbourhoods."""
    adj = g.adjacency()
    groups: dict[tuple, list[int]] = {}
    for v in range(g.n):
        groups.setdefault(tuple(sorted(adj[v])), []).append(v)
    return sorted(groups.values())


def twin_quotient(g: Graph) -> tuple[Graph, list[list[int]]]:
    """Collapse each twin class to its smallest member.

    ``Aut(g)`` is the extension of the class-size-coloured automorphism
    group of the quotient by the product of symmetric groups on the classes.
    """
    classes = twin_classes(g)
    rep = {}
    for idx, cls in enumerate(classes):
        for v in cls:
            rep[v] = idx
    edges = {(min(rep[i], rep[j]), max(rep[i], rep[j])) for i, j in g.edges}
    labels = None
    if g.labels is not None:
        labels = [g.labels[cls[0]] for cls in classes]
    return Graph.from_edges(len(classes), edges, labels), classes


# ---------------------------------------------------------------------------
# gadget

ROLES = ("tuple", "a", "b", "c", "d", "e", "leaf")


@dataclass
class GadgetLayout:
    """Vertex roles of a gadget graph.

    ``tuples`` maps each tuple (``()`` for the empty one) to its vertex,
    ``marker`` gives o(s), ``roles`` tags every vertex, and ``leaves`` lists
    the pendant leaves (or pendant path vertices) hanging off each tuple.
    """

    base_degree: int
    depths: tuple[int, ...]
    tuples: dict[tuple, int]
    marker: dict[tuple, int]
    roles: list[str]
    connectors: dict[tuple[tuple, tuple], dict[str, int]] = field(default_factory=dict)
    leaves: dict[tuple, list[int]] = field(default_factory=dict)
    rigid: bool = False

    def length_one_vertices(self) -> list[int]:
        return [self.tuples[(x,)] for x in range(self.base_degree)]

    def to_json(self) -> dict:
        return {
            "base_degree": self.base_degree,
            "depths": list(self.depths),
            "rigid": self.rigid,
            "tuples": [{"tuple": list(t), "vertex": v, "marker": self.marker[t]} for t, v in self.tuples.items()],
            "roles": self.roles,
        }


def _check_depths(depths: Iterable[int]) -> tuple[int, ...]:
    ds = tuple(sorted(set(int(d) for d in depths)))
    if not ds:
        raise ValidationError("depth set is empty")
    expected = tuple(2 ** k for k in range(len(ds)))
    if ds != expected:
        raise ValidationError(f"depth set must be {{1, 2, 4, ...}} without gaps, got {ds}")
    return ds


def orbit_markers(h: PermutationGroup, depths: Sequence[int]) -> dict[tuple, int]:
    """o(s): equal exactly on h-orbits of tuples, numbered from 7 in enumeration order."""
    markers: dict[tuple, int] = {(): MIN_MARKER}
    nxt = MIN_MARKER + 1
    for length in depths:
        for s in itertools.product(range(h.degree), repeat=length):
            if s in markers:
                continue
            for g in h.elements:
                markers[tuple(g[x] for x in s)] = nxt
            nxt += 1
    return markers


def build_display_graph(h: PermutationGroup, depths: Iterable[int] = (1, 2), rigid: bool = False
                        ) -> tuple[Graph, GadgetLayout]:
    """Gadget graph whose automorphisms replay ``h`` on the length-one tuples.

    Tuples ``s, t`` of length ``n`` with ``2n`` in the depth set are joined
    to ``st`` through two connectors: ``a`` (edges s-a, a-st, a-b) and ``c``
    (edges t-c, c-st, c-d, c-e).  Length-one tuples attach to ``()`` and each
    tuple vertex gets o(s) pendant leaves.  With ``rigid`` the pendant leaves
    of one vertex become pendant paths of distinct lengths, and the e leaf of
    a c connector a path of length two, removing the twin symmetries.
    """
    if not h.is_faithful() or not h.is_closed():
        raise ValidationError("base group must be a closed, faithful permutation group")
    ds = _check_depths(depths)
    markers = orbit_markers(h, ds)
    roles: list[str] = []
    labels: list[str] = []
    edges: list[tuple[int, int]] = []

    def add(role: str, label: str) -> int:
        roles.append(role)
        labels.append(label)
        return len(roles) - 1

    tuples: dict[tuple, int] = {(): add("tuple", "()")}
    for length in ds:
        for s in itertools.product(range(h.degree), repeat=length):
            tuples[s] = add("tuple", str(s))
    for x in range(h.degree):
        edges.append((tuples[(x,)], tuples[()]))

    connectors: dict = {}

    def pendant(anchor: int, length: int, role: str, label: str) -> list[int]:
        made, prev = [], anchor
        for step in range(length):
            v = add(role, f"{label}.{step}")
            edges.append((prev, v))
            made.append(v)
            prev = v
        return made

    for length in ds:
        if 2 * length not in ds:
            continue
        for s in itertools.product(range(h.degree), repeat=length):
            for t in itertools.product(range(h.degree), repeat=length):
                st = tuples[s + t]
                tag = f"{s}|{t}"
                a = add("a", f"a{tag}")
                c = add("c", f"c{tag}")
                edges += [(tuples[s], a), (a, st), (tuples[t], c), (c, st)]
                b = pendant(a, 1, "b", f"b{tag}")
                d = pendant(c, 1, "d", f"d{tag}")
                e = pendant(c, 2 if rigid else 1, "e", f"e{tag}")
                connectors[(s, t)] = {"a": a, "b": b[0], "c": c, "d": d[0], "e": e[0]}

    leaves: dict[tuple, list[int]] = {}
    for s, v in tuples.items():
        leaves[s] = []
        for i in range(markers[s]):
            leaves[s] += pendant(v, i + 1 if rigid else 1, "leaf", f"leaf{s}#{i}")
    graph = Graph.from_edges(len(roles), edges, labels)
    layout = GadgetLayout(h.degree, ds, tuples, markers, roles, connectors, leaves, rigid)
    return graph, layout


@dataclass
class GadgetReport:
    verdict: str
    restricted_order: int
    base_order: int
    kernel_order: int
    injective: bool
    image_equals_h: bool
    markers_respected: bool
    twin_factor: int
    quotient_order: int
    full_order_exact: int

    def to_json(self) -> dict:
        return dict(self.__dict__)


def verify_gadget(g: Graph, layout: GadgetLayout, h: PermutationGroup,
                  max_order: int = DEFAULT_ORDER_CAP) -> GadgetReport:
    """Compare Aut(g), restricted to the length-one tuples, with ``h``.

    Pendant twins (leaves on one vertex, b/d/e leaves on one connector) are
    interchangeable and contribute a symmetric-group factor that acts
    trivially away from the leaves.  The search therefore runs on the
    twin quotient and the factor is reported separately.

    Verdicts: EQUAL when the restriction is injective with image ``h``;
    K-CLOSURE-GAP when the restricted group strictly contains ``h``;
    MISMATCH otherwise.
    """
    from math import factorial, prod

    quotient, classes = twin_quotient(g)
    sizes = [len(c) for c in classes]
    vertex_class = {v: i for i, c in enumerate(classes) for v in c}
    aut = automorphism_group(quotient, vertex_colors=sizes, max_order=max_order)
    twin_factor = prod(factorial(k) for k in sizes)
    points = [vertex_class[v] for v in layout.length_one_vertices()]
    restricted, kernel = aut.restrict(points)
    image_equals = set(restricted.elements) == set(h.elements)
    contains = set(h.elements) <= set(restricted.elements)

    tuple_class = {vertex_class[v]: s for s, v in layout.tuples.items()}
    markers_ok = True
    for p in aut.elements:
        for cls, s in tuple_class.items():
            t = tuple_class.get(p[cls])
            if t is None or layout.marker[t] != layout.marker[s]:
                markers_ok = False
    if image_equals and kernel == 1:
        verdict = "EQUAL"
    elif contains and restricted.order > h.order:
        verdict = "K-CLOSURE-GAP"
    else:
        verdict = "MISMATCH"
    return GadgetReport(verdict, restricted.order, h.order, kernel, kernel == 1, image_equals,
                        markers_ok, twin_factor, aut.order, aut.order * twin_factor)
