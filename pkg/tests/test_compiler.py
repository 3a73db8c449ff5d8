"""Moralization, strong elimination, triangulation, cliques, tree assembly."""

import itertools

import pytest

from idjt import (
    CompileError,
    EliminationOrder,
    MoralGraph,
    OrderError,
    StrongJunctionTree,
    TemporalPartition,
    build_strong_tree,
    chance_var,
    cliques_of,
    compile_diagram,
    moralize,
    parse_model,
    strong_elimination_order,
    triangulate,
    verify_strong,
)
from idjt.compiler import Clique, moral_to_dot, tree_to_dot, triangulated_to_dot
from idjt.randmodels import random_model

from conftest import (
    GOLDEN_CLIQUES,
    GOLDEN_FILLS,
    GOLDEN_PARENT_LINKS,
    GOLDEN_SEQUENCE,
    edge_names,
)


# ---------------------------------------------------------------------------
# moralize


def test_chain_moralizes_to_its_arcs():
    d = parse_model(
        "chance a states 0 1 stage 0\nchance b states 0 1 stage 0\n"
        "chance c states 0 1 stage 0\n"
        "cpt a : .5 .5\ncpt b given a : .5 .5 .5 .5\ncpt c given b : .5 .5 .5 .5\n"
    )
    g = moralize(d)
    assert edge_names(g.edges) == {("a", "b"), ("b", "c")}


def test_v_structure_marries_parents():
    d = parse_model(
        "chance a states 0 1 stage 0\nchance b states 0 1 stage 0\n"
        "chance c states 0 1 stage 0\n"
        "cpt a : .5 .5\ncpt b : .5 .5\ncpt c given a b : .5 .5 .5 .5 .5 .5 .5 .5\n"
    )
    assert edge_names(moralize(d).edges) == {("a", "c"), ("b", "c"), ("a", "b")}


def test_utility_domain_is_completed():
    d = parse_model(
        "chance j states 0 1 stage 0\nchance k states 0 1 stage 0\n"
        "cpt j : .5 .5\ncpt k : .5 .5\nutility u over j k : 1 2 3 4\n"
    )
    assert edge_names(moralize(d).edges) == {("j", "k")}


def test_fixture_model_moralizes_to_the_golden_graph(golden_model, golden):
    golden, _ = golden
    got = moralize(golden_model)
    assert edge_names(got.edges) == edge_names(golden.edges)
    assert set(v.name for v in got.vertices) == set(v.name for v in golden.vertices)


def test_every_family_and_utility_domain_complete_in_moral_graph(golden_model):
    g = moralize(golden_model)
    for v in golden_model.chance_variables:
        fam = golden_model.family(v)
        for a, b in itertools.combinations(fam, 2):
            assert g.has_edge(a, b)
    for u in golden_model.utilities:
        for a, b in itertools.combinations(u.domain, 2):
            assert g.has_edge(a, b)


# ---------------------------------------------------------------------------
# elimination order


def _golden_order(golden):
    graph, vs = golden
    part = TemporalPartition.from_variables(vs.values())
    given = [vs[n] for n in GOLDEN_SEQUENCE]
    return strong_elimination_order(graph, part, given=given), graph, vs, part


def test_reference_sequence_accepted_as_given(golden):
    order, _, vs, _ = _golden_order(golden)
    assert [v.name for v in order.sequence] == GOLDEN_SEQUENCE
    assert order.alpha[vs["l"]] == 16
    assert order.alpha[vs["b"]] == 1


def test_stage_constraint_rejects_premature_decision(golden):
    graph, vs = golden
    part = TemporalPartition.from_variables(vs.values())
    bad = [vs["D4"]] + [vs[n] for n in GOLDEN_SEQUENCE if n != "D4"]
    with pytest.raises(OrderError, match="stage constraint"):
        strong_elimination_order(graph, part, given=bad)


def test_given_sequence_must_be_a_permutation(golden):
    graph, vs = golden
    part = TemporalPartition.from_variables(vs.values())
    with pytest.raises(OrderError, match="permutation"):
        strong_elimination_order(graph, part, given=[vs["l"], vs["j"]])


def test_reverse_order_extends_precedence(golden):
    order, _, _, _ = _golden_order(golden)
    ranks = [v.rank for v in order.sequence]
    assert all(a >= b for a, b in zip(ranks, ranks[1:]))


def test_min_fill_picks_the_simplicial_vertex_first():
    # chordless 4-cycle plus a pendant: the pendant is the only simplicial vertex
    s, p, q, r, w = (chance_var(n, ("0", "1"), 0) for n in "spqrw")
    edges = frozenset(
        frozenset(e) for e in [(p, q), (q, r), (r, w), (w, p), (s, p)]
    )
    graph = MoralGraph((s, p, q, r, w), edges)
    part = TemporalPartition.from_variables([s, p, q, r, w])

    adj = graph.adjacency()

    def fill_count(v):
        return sum(1 for a, b in itertools.combinations(adj[v], 2) if not graph.has_edge(a, b))

    # independent count of fill edges per candidate: s is uniquely zero
    assert fill_count(s) == 0
    assert all(fill_count(v) > 0 for v in (p, q, r, w))
    order = strong_elimination_order(graph, part, heuristic="min-fill")
    assert order.sequence[0] == s


def test_heuristics_produce_verified_trees(golden_model):
    for heuristic in ("min-fill", "min-weight"):
        tree, order, fills, moral, tri = compile_diagram(golden_model, heuristic=heuristic)
        assert verify_strong(tree, golden_model.partition) == []


def test_determinism_same_input_same_result(golden_model):
    a = compile_diagram(golden_model, heuristic="min-fill")
    b = compile_diagram(golden_model, heuristic="min-fill")
    assert [c.members for c in a[0].cliques] == [c.members for c in b[0].cliques]
    assert a[1].sequence == b[1].sequence
    assert a[0].parent == b[0].parent


# ---------------------------------------------------------------------------
# triangulate


def test_reference_sequence_produces_exactly_the_nine_fills(golden):
    order, graph, vs, _ = _golden_order(golden)
    tri, fills = triangulate(graph, order)
    assert {frozenset(v.name for v in f) for f in fills} == GOLDEN_FILLS
    assert len(fills) == 9


def test_already_triangulated_graph_has_zero_fills():
    a = chance_var("a", ("0", "1"), 0)
    b = chance_var("b", ("0", "1"), 0)
    c = chance_var("c", ("0", "1"), 0)
    graph = MoralGraph((a, b, c), frozenset({frozenset((a, b)), frozenset((b, c))}))
    order = EliminationOrder((a, c, b))
    _, fills = triangulate(graph, order)
    assert fills == []


def test_re_elimination_of_triangulated_graph_adds_nothing(golden):
    order, graph, _, _ = _golden_order(golden)
    tri, _ = triangulate(graph, order)
    tri2, fills2 = triangulate(tri, order)
    assert fills2 == []
    assert tri2.edges == tri.edges


# ---------------------------------------------------------------------------
# cliques


def test_golden_cliques_with_indices(golden):
    order, graph, vs, _ = _golden_order(golden)
    tri, _ = triangulate(graph, order)
    cliques = cliques_of(tri, order)
    got = {c.index: {v.name for v in c.members} for c in cliques}
    assert got == GOLDEN_CLIQUES


def test_complete_graph_is_one_clique_with_index_one():
    a = chance_var("a", ("0", "1"), 0)
    b = chance_var("b", ("0", "1"), 0)
    c = chance_var("c", ("0", "1"), 0)
    edges = frozenset(frozenset(p) for p in itertools.combinations((a, b, c), 2))
    graph = MoralGraph((a, b, c), edges)
    cliques = cliques_of(graph, EliminationOrder((a, b, c)))
    assert len(cliques) == 1
    assert cliques[0].index == 1
    assert cliques[0].members == {a, b, c}


def _brute_force_maximal_cliques(graph):
    vs = list(graph.vertices)
    complete = []
    for r in range(1, len(vs) + 1):
        for sub in itertools.combinations(vs, r):
            if all(graph.has_edge(a, b) for a, b in itertools.combinations(sub, 2)):
                complete.append(frozenset(sub))
    return {c for c in complete if not any(c < d for d in complete)}


def test_cliques_match_brute_force_enumeration_on_random_graphs():
    for seed in range(25):
        model = random_model(seed + 300, max_variables=7)
        tree, order, fills, moral, tri = compile_diagram(model)
        expected = _brute_force_maximal_cliques(tri)
        got = {c.members for c in cliques_of(tri, order)}
        assert got == expected


def test_cliques_of_rejects_non_perfect_order():
    a = chance_var("a", ("0", "1"), 0)
    b = chance_var("b", ("0", "1"), 0)
    c = chance_var("c", ("0", "1"), 0)
    d = chance_var("d", ("0", "1"), 0)
    # 4-cycle, chordless
    edges = frozenset(
        {frozenset((a, b)), frozenset((b, c)), frozenset((c, d)), frozenset((d, a))}
    )
    graph = MoralGraph((a, b, c, d), edges)
    with pytest.raises(CompileError, match="perfectly eliminate"):
        cliques_of(graph, EliminationOrder((a, b, c, d)))


# ---------------------------------------------------------------------------
# tree assembly and verification


def _golden_tree(golden):
    order, graph, vs, part = _golden_order(golden)
    tri, _ = triangulate(graph, order)
    return build_strong_tree(cliques_of(tri, order)), part, vs


def test_golden_parent_links(golden):
    tree, _, _ = _golden_tree(golden)
    assert tree.parent == GOLDEN_PARENT_LINKS
    assert tree.root == 1


def test_alternative_attachment_would_also_hold_separator(golden):
    # the separator {e} of C5 also fits C10; the builder still picks C1,
    # the lowest-index container
    tree, _, vs = _golden_tree(golden)
    sep = tree.separator(5)
    assert sep == {vs["e"]}
    c10 = tree.clique(10)
    assert sep <= c10.members
    assert tree.parent[5] == 1


def test_single_clique_tree_has_no_edges():
    a = chance_var("a", ("0", "1"), 0)
    tree = build_strong_tree([Clique(frozenset({a}), 1)])
    assert tree.parent == {}
    assert tree.root == 1


def test_running_intersection_violation_detected():
    a = chance_var("a", ("0", "1"), 0)
    b = chance_var("b", ("0", "1"), 0)
    c = chance_var("c", ("0", "1"), 0)
    disjoint = [Clique(frozenset({a, b}), 1), Clique(frozenset({c}), 2)]
    tree = build_strong_tree(disjoint)  # empty separator attaches to the root
    assert tree.parent == {2: 1}

    overlapping = [
        Clique(frozenset({a}), 1),
        Clique(frozenset({b, c}), 2),
        Clique(frozenset({a, c}), 3),
    ]
    # separator of clique 3 is {a, c}: no single earlier clique holds both
    with pytest.raises(CompileError, match="running intersection"):
        build_strong_tree(overlapping)


def test_verify_strong_accepts_the_golden_tree(golden):
    tree, part, _ = _golden_tree(golden)
    assert verify_strong(tree, part) == []


def test_junction_property_violation_on_rewired_edge(golden):
    tree, part, vs = _golden_tree(golden)
    broken = StrongJunctionTree(tree.cliques, {**tree.parent, 8: 6}, tree.root)
    problems = verify_strong(broken, part)
    junction = [p for p in problems if p.kind == "junction"]
    assert junction, problems
    assert any("D2" in p.message for p in junction)


def test_strong_root_violations_after_rerooting(golden):
    tree, part, _ = _golden_tree(golden)
    # same undirected edges, reoriented away from clique 16
    undirected = [(child, parent) for child, parent in tree.parent.items()]
    adj = {}
    for x, y in undirected:
        adj.setdefault(x, set()).add(y)
        adj.setdefault(y, set()).add(x)
    new_parent = {}
    seen = {16}
    frontier = [16]
    while frontier:
        cur = frontier.pop()
        for nb in adj[cur]:
            if nb not in seen:
                seen.add(nb)
                new_parent[nb] = cur
                frontier.append(nb)
    rerooted = StrongJunctionTree(tree.cliques, new_parent, 16)
    problems = verify_strong(rerooted, part)
    assert any(p.kind == "strong-root" for p in problems)


def test_compiled_random_models_pass_all_structure_checks():
    for seed in range(30):
        model = random_model(seed + 900)
        tree, order, fills, moral, tri = compile_diagram(model)
        assert verify_strong(tree, model.partition) == []
        ranks = [v.rank for v in order.sequence]
        assert all(x >= y for x, y in zip(ranks, ranks[1:]))
        _, refills = triangulate(tri, order)
        assert refills == []
        indices = [c.index for c in tree.cliques]
        assert len(set(indices)) == len(indices)
        assert indices[0] == 1
        # every family and utility domain fits inside some clique
        for v in model.chance_variables:
            fam = set(model.family(v))
            assert any(fam <= c.members for c in tree.cliques)
        for u in model.utilities:
            assert any(set(u.domain) <= c.members for c in tree.cliques)


# ---------------------------------------------------------------------------
# DOT export


def test_dot_outputs_are_well_formed(golden, golden_model):
    tree, part, _ = _golden_tree(golden)
    graph, _ = golden
    order, _, _, _ = _golden_order(golden)
    tri, fills = triangulate(graph, order)
    moral_dot = moral_to_dot(graph)
    tri_dot = triangulated_to_dot(tri, fills)
    tree_dot = tree_to_dot(tree)
    assert moral_dot.startswith("graph moral {") and moral_dot.rstrip().endswith("}")
    assert '"D1" [shape=box];' in moral_dot
    assert tri_dot.count("style=dashed") == 9
    assert 'C5 [label="C5: D2, e, g"]' in tree_dot
    assert 'C5 -> C1 [label="e"]' in tree_dot
