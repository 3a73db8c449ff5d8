"""Compilation of an influence diagram into a strong junction tree.

The pipeline: moralize the diagram, pick an elimination order whose reverse
extends the temporal order to a total order, triangulate by simulated
elimination, read off the maximal cliques with their indices, and attach each
clique to the lowest-index clique containing its separator.  The resulting
rooted tree lets sum- and max-marginalizations interleave soundly during the
collect pass: on every edge the separator temporally precedes the rest of the
child clique.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Literal, Sequence

from .model import InfluenceDiagram, TemporalPartition, Variable, Violation


class CompileError(Exception):
    """Internal compilation invariant failed (bad order or clique indexing)."""


class OrderError(ValueError):
    """A supplied elimination sequence is unusable."""


Heuristic = Literal["min-fill", "min-weight"]


@dataclass(frozen=True)
class MoralGraph:
    """Undirected graph over all variables; adjacency is symmetric, no loops."""

    vertices: tuple[Variable, ...]
    edges: frozenset[frozenset[Variable]]

    def adjacency(self) -> dict[Variable, set[Variable]]:
        adj: dict[Variable, set[Variable]] = {v: set() for v in self.vertices}
        for e in self.edges:
            u, v = tuple(e)
            adj[u].add(v)
            adj[v].add(u)
        return adj

    def has_edge(self, u: Variable, v: Variable) -> bool:
        return frozenset((u, v)) in self.edges


def _edge(u: Variable, v: Variable) -> frozenset[Variable]:
    if u == v:
        raise ValueError(f"self loop at {u.name!r}")
    return frozenset((u, v))


def moralize(diagram: InfluenceDiagram) -> MoralGraph:
    """Drop arc directions, marry parents, and complete each utility domain.

    Temporal (information) links into decisions are not part of the graph;
    only genuine arcs and the completions above contribute edges.
    """
    edges: set[frozenset[Variable]] = set()
    for child in diagram.chance_variables:
        ps = diagram.parents[child.name]
        for p in ps:
            edges.add(_edge(p, child))
        for a, b in combinations(ps, 2):
            edges.add(_edge(a, b))
    for u in diagram.utilities:
        for a, b in combinations(u.domain, 2):
            edges.add(_edge(a, b))
    return MoralGraph(tuple(diagram.variables), frozenset(edges))


@dataclass(frozen=True)
class EliminationOrder:
    """A stage-respecting elimination sequence with its vertex numbering.

    The i-th eliminated vertex (1-based) is numbered |U|-i+1, so the sequence
    runs from the highest number down to 1 and its reverse is a total order
    extending temporal precedence.
    """

    sequence: tuple[Variable, ...]

    def __post_init__(self):
        seen = set(self.sequence)
        if len(seen) != len(self.sequence):
            raise OrderError("sequence repeats a variable")
        ranks = [v.rank for v in self.sequence]
        if any(a < b for a, b in zip(ranks, ranks[1:])):
            bad = next((a, b) for a, b in zip(self.sequence, self.sequence[1:]) if a.rank < b.rank)
            raise OrderError(
                f"stage constraint violated: {bad[0].name!r} cannot be eliminated "
                f"before {bad[1].name!r}"
            )

    @property
    def alpha(self) -> dict[Variable, int]:
        n = len(self.sequence)
        return {v: n - i for i, v in enumerate(self.sequence)}


def _eliminate_vertex(adj: dict[Variable, set[Variable]], v: Variable) -> set[frozenset[Variable]]:
    """Complete v's neighborhood, remove v; returns the edges added."""
    added = set()
    nbrs = adj[v]
    for a, b in combinations(sorted(nbrs, key=lambda w: w.name), 2):
        if b not in adj[a]:
            added.add(_edge(a, b))
            adj[a].add(b)
            adj[b].add(a)
    for n in nbrs:
        adj[n].discard(v)
    del adj[v]
    return added


def _fill_count(adj: dict[Variable, set[Variable]], v: Variable) -> int:
    nbrs = adj[v]
    return sum(1 for a, b in combinations(nbrs, 2) if b not in adj[a])


def _clique_weight(adj: dict[Variable, set[Variable]], v: Variable) -> int:
    return math.prod(len(w.states) for w in adj[v] | {v})


def strong_elimination_order(
    graph: MoralGraph,
    partition: TemporalPartition,
    heuristic: Heuristic | None = "min-fill",
    given: Sequence[Variable] | None = None,
) -> EliminationOrder:
    """Choose an elimination order blocked by stage, latest stage first.

    Within an information set the heuristic greedily picks the next vertex on
    the evolving (partially eliminated, fill-completed) graph; ties break by
    fill count, then clique weight, then name.  A ``given`` sequence bypasses
    the heuristic but is still checked against the stage constraint.
    """
    if set(graph.vertices) != set(partition.variables):
        raise OrderError("graph and partition disagree on the variable set")
    if given is not None:
        if set(given) != set(graph.vertices):
            raise OrderError("given sequence is not a permutation of the variables")
        return EliminationOrder(tuple(given))

    adj = graph.adjacency()
    sequence: list[Variable] = []
    blocks: list[list[Variable]] = []
    n = partition.n
    for k, info in enumerate(partition.information_sets):
        blocks.append(sorted(info, key=lambda v: v.name))
        if k < n:
            blocks.append([partition.decision_order[k]])
    for block in reversed(blocks):
        remaining = list(block)
        while remaining:
            if heuristic == "min-weight":
                key = lambda v: (_clique_weight(adj, v), _fill_count(adj, v), v.name)
            else:
                key = lambda v: (_fill_count(adj, v), _clique_weight(adj, v), v.name)
            v = min(remaining, key=key)
            remaining.remove(v)
            sequence.append(v)
            _eliminate_vertex(adj, v)
    return EliminationOrder(tuple(sequence))


def triangulate(
    graph: MoralGraph, order: EliminationOrder
) -> tuple[MoralGraph, list[frozenset[Variable]]]:
    """Simulate elimination, returning the filled graph and the fill-ins added."""
    if set(order.sequence) != set(graph.vertices):
        raise OrderError("order does not cover the graph's vertices")
    adj = graph.adjacency()
    fills: list[frozenset[Variable]] = []
    for v in order.sequence:
        fills.extend(sorted(_eliminate_vertex(adj, v), key=lambda e: sorted(w.name for w in e)))
    return MoralGraph(graph.vertices, graph.edges | frozenset(fills)), fills


@dataclass(frozen=True)
class Clique:
    members: frozenset[Variable]
    index: int

    @property
    def weight(self) -> int:
        return math.prod(len(v.states) for v in self.members)

    def names(self) -> list[str]:
        return sorted(v.name for v in self.members)

    def __repr__(self):
        return f"C{self.index}({','.join(self.names())})"


def cliques_of(graph: MoralGraph, order: EliminationOrder) -> list[Clique]:
    """Maximal cliques of a graph the order eliminates with zero fill-ins.

    Each elimination step contributes the eliminated vertex plus its current
    neighborhood; non-maximal sets are dropped.  A clique's index is the
    number of the highest-numbered member v whose lower-numbered co-members
    all neighbor some lower-numbered outside vertex (the elimination step at
    which the clique stops being maximal in the remaining graph); cliques with
    no such member get index 1, and only one clique may.
    """
    adj = graph.adjacency()
    elim: list[frozenset[Variable]] = []
    work = {v: set(ns) for v, ns in adj.items()}
    for v in order.sequence:
        nbrs = work[v]
        for a, b in combinations(nbrs, 2):
            if b not in work[a]:
                raise CompileError(
                    f"order does not perfectly eliminate the graph (gap at {v.name!r})"
                )
        elim.append(frozenset(nbrs | {v}))
        for nb in nbrs:
            work[nb].discard(v)
        del work[v]

    maximal = [c for c in set(elim) if not any(c < d for d in elim)]
    alpha = order.alpha

    def index_of(c: frozenset[Variable]) -> int:
        best = 0
        for v in c:
            av = alpha[v]
            if av <= best:
                continue
            below = [w for w in c if alpha[w] < av]
            for u in graph.vertices:
                if u in c or alpha[u] >= av:
                    continue
                if all(w in adj[u] for w in below):
                    best = av
                    break
        return best if best else 1

    cliques = sorted((Clique(c, index_of(c)) for c in maximal), key=lambda c: c.index)
    indices = [c.index for c in cliques]
    if len(set(indices)) != len(indices):
        dup = next(i for i in indices if indices.count(i) > 1)
        raise CompileError(f"duplicate clique index {dup}; order mismatch or untriangulated input")
    return cliques


@dataclass(frozen=True)
class StrongJunctionTree:
    """Cliques ordered by index, each non-root linked to a parent clique.

    ``parent`` maps a clique index to its parent's index; separators are the
    clique-parent intersections.  The root is the lowest-index clique.
    """

    cliques: tuple[Clique, ...]
    parent: dict[int, int]
    root: int

    def clique(self, index: int) -> Clique:
        for c in self.cliques:
            if c.index == index:
                return c
        raise KeyError(index)

    def separator(self, child_index: int) -> frozenset[Variable]:
        return self.clique(child_index).members & self.clique(self.parent[child_index]).members

    def children(self, index: int) -> list[int]:
        return sorted(k for k, p in self.parent.items() if p == index)

    def variables(self) -> frozenset[Variable]:
        out: set[Variable] = set()
        for c in self.cliques:
            out |= c.members
        return frozenset(out)

    def path(self, a: int, b: int) -> list[int]:
        """Clique indices along the unique tree path from a to b, inclusive."""

        def to_root(i: int) -> list[int]:
            chain = [i]
            while chain[-1] != self.root:
                chain.append(self.parent[chain[-1]])
            return chain

        pa, pb = to_root(a), to_root(b)
        common = next(i for i in pa if i in set(pb))
        return pa[: pa.index(common) + 1] + pb[: pb.index(common)][::-1]


def build_strong_tree(cliques: Sequence[Clique]) -> StrongJunctionTree:
    """Attach each clique to the lowest-index earlier clique holding its separator."""
    ordered = sorted(cliques, key=lambda c: c.index)
    if not ordered:
        raise CompileError("no cliques")
    parent: dict[int, int] = {}
    earlier: set[Variable] = set(ordered[0].members)
    for c in ordered[1:]:
        sep = c.members & earlier
        holder = next((d for d in ordered if d.index < c.index and sep <= d.members), None)
        if holder is None:
            raise CompileError(f"running intersection violated at clique {c.index}")
        parent[c.index] = holder.index
        earlier |= c.members
    return StrongJunctionTree(tuple(ordered), parent, ordered[0].index)


def verify_strong(tree: StrongJunctionTree, partition: TemporalPartition) -> list[Violation]:
    """Junction property, running intersection, and the strong-root rank test.

    An edge (parent C1, child C2) with separator S is strongly ordered when
    every separator member temporally precedes-or-ties every member of C2\\S;
    that is exactly the condition letting the child be eliminated before the
    separator during collect.
    """
    del partition  # ranks are carried on the variables themselves
    out: list[Violation] = []
    indices = [c.index for c in tree.cliques]
    if tree.root not in indices:
        out.append(Violation("tree", f"root {tree.root} is not a clique index"))
        return out
    for k in indices:
        if k == tree.root:
            continue
        hops = set()
        i = k
        while i != tree.root:
            if i not in tree.parent or i in hops:
                out.append(Violation("tree", f"clique {k} is not connected to the root"))
                return out
            hops.add(i)
            i = tree.parent[i]

    for a, b in combinations(indices, 2):
        inter = tree.clique(a).members & tree.clique(b).members
        if not inter:
            continue
        for on_path in tree.path(a, b)[1:-1]:
            if not inter <= tree.clique(on_path).members:
                missing = sorted(v.name for v in inter - tree.clique(on_path).members)
                out.append(
                    Violation(
                        "junction",
                        f"intersection of cliques {a} and {b} ({missing}) missing from "
                        f"clique {on_path} on their path",
                    )
                )

    earlier: set[Variable] = set()
    for c in tree.cliques:
        if c.index != tree.root:
            sep = c.members & earlier
            if not any(d.index < c.index and sep <= d.members for d in tree.cliques):
                out.append(
                    Violation(
                        "running-intersection",
                        f"separator of clique {c.index} fits no earlier clique",
                    )
                )
        earlier |= c.members

    for child, par in tree.parent.items():
        sep = tree.clique(child).members & tree.clique(par).members
        rest = tree.clique(child).members - sep
        for s in sep:
            for w in rest:
                if s.rank > w.rank:
                    out.append(
                        Violation(
                            "strong-root",
                            f"edge {par}->{child}: separator member {s.name!r} comes after "
                            f"{w.name!r}; no ordering of the child respects precedence",
                        )
                    )
    return out


def compile_diagram(
    diagram: InfluenceDiagram,
    heuristic: Heuristic | None = "min-fill",
    given: Sequence[Variable] | None = None,
):
    """Full pipeline from a valid diagram to a verified strong junction tree."""
    moral = moralize(diagram)
    order = strong_elimination_order(moral, diagram.partition, heuristic, given)
    tri, fills = triangulate(moral, order)
    cliques = cliques_of(tri, order)
    tree = build_strong_tree(cliques)
    problems = verify_strong(tree, diagram.partition)
    if problems:
        raise CompileError("; ".join(str(p) for p in problems))
    return tree, order, fills, moral, tri


# ---------------------------------------------------------------------------
# DOT export


def _dot_vertex(v: Variable) -> str:
    shape = "box" if v.is_decision else "ellipse"
    return f'  "{v.name}" [shape={shape}];'


def _sorted_edges(edges: Iterable[frozenset[Variable]]) -> list[tuple[str, str]]:
    return sorted(tuple(sorted(w.name for w in e)) for e in edges)


def moral_to_dot(graph: MoralGraph) -> str:
    lines = ["graph moral {"]
    lines += [_dot_vertex(v) for v in sorted(graph.vertices, key=lambda v: v.name)]
    lines += [f'  "{a}" -- "{b}";' for a, b in _sorted_edges(graph.edges)]
    lines.append("}")
    return "\n".join(lines) + "\n"


def triangulated_to_dot(graph: MoralGraph, fills: Iterable[frozenset[Variable]]) -> str:
    fills = set(fills)
    lines = ["graph triangulated {"]
    lines += [_dot_vertex(v) for v in sorted(graph.vertices, key=lambda v: v.name)]
    lines += [f'  "{a}" -- "{b}";' for a, b in _sorted_edges(graph.edges - fills)]
    lines += [f'  "{a}" -- "{b}" [style=dashed];' for a, b in _sorted_edges(fills)]
    lines.append("}")
    return "\n".join(lines) + "\n"


def tree_to_dot(tree: StrongJunctionTree) -> str:
    lines = ["digraph junction_tree {", "  node [shape=box];"]
    for c in tree.cliques:
        label = f"C{c.index}: {', '.join(c.names())}"
        lines.append(f'  C{c.index} [label="{label}"];')
    for child in sorted(tree.parent):
        sep = ", ".join(sorted(v.name for v in tree.separator(child)))
        lines.append(f'  C{child} -> C{tree.parent[child]} [label="{sep}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
