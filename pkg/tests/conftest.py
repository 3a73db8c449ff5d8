"""Shared fixtures: the four-decision golden network and small helpers."""

from itertools import combinations
from pathlib import Path

import pytest

from idjt import MoralGraph, chance_var, decision_var, parse_model

MODELS = Path(__file__).parents[1] / "models"

# The golden four-decision network.  Its moral graph is pinned down exactly by
# the known clique list and fill-in list of the reference elimination
# sequence: (union of pairwise edges within the cliques) minus the fill-ins.

GOLDEN_STAGES = {
    "b": 0,
    "e": 1,
    "f": 1,
    "g": 3,
    "a": 4,
    "c": 4,
    "d": 4,
    "h": 4,
    "i": 4,
    "j": 4,
    "k": 4,
    "l": 4,
}

GOLDEN_CLIQUES = {
    1: {"b", "D1", "e", "f", "d"},
    5: {"e", "D2", "g"},
    6: {"f", "D3", "h"},
    8: {"D2", "g", "D4", "i"},
    10: {"b", "e", "d", "c"},
    11: {"b", "c", "a"},
    14: {"D3", "h", "k"},
    15: {"h", "k", "j"},
    16: {"D4", "i", "l"},
}

GOLDEN_FILLS = {
    frozenset(p)
    for p in [
        ("D2", "D4"),
        ("g", "D4"),
        ("f", "D3"),
        ("b", "e"),
        ("D1", "e"),
        ("D1", "f"),
        ("b", "f"),
        ("e", "f"),
        ("e", "D2"),
    ]
}

GOLDEN_SEQUENCE = ["l", "j", "k", "i", "h", "a", "c", "d", "D4", "g", "D3", "D2", "f", "e", "D1", "b"]

GOLDEN_PARENT_LINKS = {5: 1, 6: 1, 10: 1, 8: 5, 11: 10, 14: 6, 15: 14, 16: 8}

GOLDEN_POLICY_CLIQUES = {"D1": 1, "D2": 5, "D3": 6, "D4": 8}


def golden_variables():
    out = {}
    for name, stage in GOLDEN_STAGES.items():
        out[name] = chance_var(name, (f"{name}0", f"{name}1"), stage)
    for k in range(1, 5):
        out[f"D{k}"] = decision_var(f"D{k}", (f"D{k}a", f"D{k}b"), k)
    return out


def golden_moral_graph():
    vs = golden_variables()
    union = set()
    for members in GOLDEN_CLIQUES.values():
        for a, b in combinations(sorted(members), 2):
            union.add(frozenset((vs[a], vs[b])))
    fills = {frozenset(vs[n] for n in e) for e in GOLDEN_FILLS}
    return MoralGraph(tuple(vs.values()), frozenset(union - fills)), vs


@pytest.fixture(scope="session")
def golden():
    graph, vs = golden_moral_graph()
    return graph, vs


@pytest.fixture(scope="session")
def golden_model():
    return parse_model((MODELS / "golden.idm").read_text())


@pytest.fixture(scope="session")
def tiny_model():
    return parse_model((MODELS / "tiny.idm").read_text())


def names(variables):
    return sorted(v.name for v in variables)


def edge_names(edges):
    return {tuple(sorted(v.name for v in e)) for e in edges}
