"""Named inputs used by the tests, the acceptance suite and the command line.

Each entry carries a provenance tag: ``trivial`` for inputs whose expected
answers follow from inspection, ``derived`` for those checked by brute force.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import MatrixGroup, ell_infinity, euclidean, group_closure, minus_identity, permutation_matrix
from .free_space import FiniteMetricSpace, equilateral, path_metric_space
from .graphs import Graph, PermutationGroup, cycle_graph, path_graph, star_graph


def rigid_tree7() -> Graph:
    """A 7-vertex tree with trivial automorphism group (path 0..5 with a branch at 2)."""
    return Graph.from_edges(7, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (2, 6)])


def signed_permutations(n: int) -> MatrixGroup:
    """``{+-1} x S_n`` acting by ``e_i -> s e_{p(i)}`` with one sign ``s``."""
    maps = [permutation_matrix(p, [s] * n) for p in itertools.permutations(range(n)) for s in (1, -1)]
    return group_closure(maps, cap=len(maps))


def pm_identity(n: int) -> MatrixGroup:
    return group_closure([minus_identity(n)])


def signed_swap() -> MatrixGroup:
    return group_closure([minus_identity(2), permutation_matrix([1, 0])])


def klein_four() -> PermutationGroup:
    return PermutationGroup.generate(4, [(1, 0, 3, 2), (2, 3, 0, 1)])


def pi_c2() -> MatrixGroup:
    from .pimple import central_involution_embedding

    return central_involution_embedding(PermutationGroup.symmetric(2), (1, 0))[0]


def pi_klein() -> MatrixGroup:
    from .pimple import central_involution_embedding

    return central_involution_embedding(klein_four(), (1, 0, 3, 2))[0]


def rigid_metric4() -> FiniteMetricSpace:
    """Four points with pairwise distinct distances (no nontrivial isometry)."""
    d = np.array([[0, 1.0, 1.3, 1.7],
                  [1.0, 0, 1.1, 1.5],
                  [1.3, 1.1, 0, 1.2],
                  [1.7, 1.5, 1.2, 0]])
    return FiniteMetricSpace.from_matrix(d)


@dataclass(frozen=True)
class Fixture:
    name: str
    kind: str
    provenance: str
    build: Callable

    def load(self):
        return self.build()


_CATALOG = [
    Fixture("path3", "graph", "trivial", lambda: path_graph(3)),
    Fixture("path5", "graph", "trivial", lambda: path_graph(5)),
    Fixture("cycle4", "graph", "trivial", lambda: cycle_graph(4)),
    Fixture("cycle5", "graph", "trivial", lambda: cycle_graph(5)),
    Fixture("star3", "graph", "trivial", lambda: star_graph(3)),
    Fixture("tree7", "graph", "derived", rigid_tree7),
    Fixture("trivial-1", "perm_group", "trivial", lambda: PermutationGroup.trivial(1)),
    Fixture("trivial-3", "perm_group", "trivial", lambda: PermutationGroup.trivial(3)),
    Fixture("S2", "perm_group", "trivial", lambda: PermutationGroup.symmetric(2)),
    Fixture("C4", "perm_group", "trivial", lambda: PermutationGroup.cyclic(4)),
    Fixture("S3", "perm_group", "trivial", lambda: PermutationGroup.symmetric(3)),
    Fixture("klein4", "perm_group", "trivial", klein_four),
    Fixture("equilateral3", "metric", "trivial", lambda: equilateral(3)),
    Fixture("path-metric3", "metric", "trivial", lambda: path_metric_space(3)),
    Fixture("rigid-metric4", "metric", "derived", rigid_metric4),
    Fixture("euclidean-2", "space", "trivial", lambda: euclidean(2)),
    Fixture("euclidean-3", "space", "trivial", lambda: euclidean(3)),
    Fixture("linf-2", "space", "trivial", lambda: ell_infinity(2)),
    Fixture("pm-id-1", "matrix_group", "trivial", lambda: pm_identity(1)),
    Fixture("pm-id-2", "matrix_group", "trivial", lambda: pm_identity(2)),
    Fixture("pm-id-3", "matrix_group", "trivial", lambda: pm_identity(3)),
    Fixture("pm-id-4", "matrix_group", "trivial", lambda: pm_identity(4)),
    Fixture("signed-swap-4", "matrix_group", "derived", signed_swap),
    Fixture("signed-S3", "matrix_group", "derived", lambda: signed_permutations(3)),
    Fixture("pi-C2", "matrix_group", "derived", pi_c2),
    Fixture("pi-klein", "matrix_group", "derived", pi_klein),
]

GRAPHS = ("path3", "path5", "cycle4", "cycle5", "star3", "tree7")
DISPLAY_GROUPS = ("pm-id-1", "pm-id-2", "pm-id-3", "pm-id-4", "signed-swap-4", "signed-S3", "pi-C2", "pi-klein")


def fixture_catalog() -> list[Fixture]:
    return list(_CATALOG)


def fixture(name: str):
    for f in _CATALOG:
        if f.name == name:
            return f.load()
    raise KeyError(f"unknown fixture {name!r}")
