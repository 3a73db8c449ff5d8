"""Influence diagram model: variables, temporal structure, parsing, validation.

A model is a DAG of discrete chance variables (each with a CPT given its
parents, which may include decision variables), a set of decision variables
ordered by index, and additive utility potentials.  Chance variables are
grouped into observation stages: stage k holds the variables revealed between
decisions k and k+1 (stage 0 before the first decision, the last stage never
observed).  Stages and decision indices induce the temporal order used
throughout compilation and solving.

Model file grammar (UTF-8, line oriented, ``#`` starts a comment, tokens
whitespace separated)::

    chance   <name> states <s1> <s2> ... stage <k>       # observed in stage k, k >= 0
    decision <name> states <a1> <a2> ... index <k>       # k-th decision, k >= 1
    cpt <name> [given <p1> <p2> ...] : <v1> <v2> ...     # row-major, last variable
                                                         # fastest; order (p1..pm, name)
    utility <uname> over <v1> <v2> ... : <u1> <u2> ...   # same row-major convention

Exactly one ``cpt`` per chance variable; state declaration order defines the
index order everywhere.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple

import numpy as np

from .tables import Table

CHANCE = "chance"
DECISION = "decision"

BEFORE = "before"
AFTER = "after"
UNORDERED = "unordered"

ROW_SUM_TOL = 1e-9

_KEYWORDS = frozenset(
    {"chance", "decision", "cpt", "utility", "states", "stage", "index", "given", "over"}
)
_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
_LABEL_RE = re.compile(r"[A-Za-z0-9_.+-]+\Z")


class ParseError(Exception):
    """Syntax or structural error in a model document."""

    def __init__(self, message: str, line: int, column: int = 1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


@dataclass(frozen=True)
class Variable:
    """A discrete chance or decision variable.

    ``rank`` encodes the temporal position: 2k for a chance variable observed
    in stage k, 2k-1 for the k-th decision.  Lower rank means earlier.
    """

    name: str
    kind: str
    states: tuple[str, ...]
    rank: int

    @property
    def is_decision(self) -> bool:
        return self.kind == DECISION

    @property
    def stage(self) -> int:
        """Observation stage for chance, decision index for decisions."""
        return (self.rank + 1) // 2 if self.kind == DECISION else self.rank // 2

    def __repr__(self):  # keep test output readable
        return f"{self.kind[0]}:{self.name}"


def chance_var(name: str, states: Iterable[str], stage: int) -> Variable:
    return Variable(name, CHANCE, tuple(states), 2 * stage)


def decision_var(name: str, states: Iterable[str], index: int) -> Variable:
    return Variable(name, DECISION, tuple(states), 2 * index - 1)


@dataclass(frozen=True)
class TemporalPartition:
    """Observation stages and decision order of a diagram.

    ``information_sets[k]`` is the set of chance variables in stage k; the
    list covers every declared stage (at least stages 0..n for n decisions).
    """

    information_sets: tuple[frozenset[Variable], ...]
    decision_order: tuple[Variable, ...]

    @classmethod
    def from_variables(cls, variables: Iterable[Variable]) -> "TemporalPartition":
        variables = list(variables)
        decisions = sorted((v for v in variables if v.is_decision), key=lambda v: (v.rank, v.name))
        n = len(decisions)
        chance = [v for v in variables if not v.is_decision]
        top = max([n] + [v.stage for v in chance])
        sets = [set() for _ in range(top + 1)]
        for v in chance:
            sets[v.stage].add(v)
        return cls(tuple(frozenset(s) for s in sets), tuple(decisions))

    @property
    def n(self) -> int:
        return len(self.decision_order)

    @property
    def variables(self) -> frozenset[Variable]:
        members = set(self.decision_order)
        for s in self.information_sets:
            members |= s
        return frozenset(members)


def precedes(u: Variable, v: Variable, partition: TemporalPartition) -> str:
    """Temporal comparison of two variables: BEFORE, AFTER, or UNORDERED.

    Variables of the same information set are unordered; everything else is
    totally ordered by rank.
    """
    known = partition.variables
    for w in (u, v):
        if w not in known:
            raise KeyError(f"unknown variable {w.name!r}")
    if u.rank < v.rank:
        return BEFORE
    if u.rank > v.rank:
        return AFTER
    return UNORDERED


@dataclass(frozen=True)
class Utility:
    """One additive utility term: a real table over its declared domain."""

    name: str
    domain: tuple[Variable, ...]  # declaration order, used for serialization
    table: Table


@dataclass(frozen=True)
class InfluenceDiagram:
    variables: tuple[Variable, ...]  # declaration order
    parents: Mapping[str, tuple[Variable, ...]]  # chance name -> parent list
    cpts: Mapping[str, Table]  # chance name -> table over (parents, child)
    utilities: tuple[Utility, ...]
    partition: TemporalPartition = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.partition is None:
            object.__setattr__(self, "partition", TemporalPartition.from_variables(self.variables))

    def var(self, name: str) -> Variable:
        for v in self.variables:
            if v.name == name:
                return v
        raise KeyError(name)

    @property
    def chance_variables(self) -> tuple[Variable, ...]:
        return tuple(v for v in self.variables if not v.is_decision)

    @property
    def decisions(self) -> tuple[Variable, ...]:
        return self.partition.decision_order

    def family(self, v: Variable) -> tuple[Variable, ...]:
        """Parents of v followed by v itself."""
        return self.parents[v.name] + (v,)

    def children(self, v: Variable) -> list[Variable]:
        return [c for c in self.chance_variables if v in self.parents[c.name]]

    def descendants(self, v: Variable) -> set[Variable]:
        seen: set[Variable] = set()
        stack = self.children(v)
        while stack:
            w = stack.pop()
            if w not in seen:
                seen.add(w)
                stack.extend(self.children(w))
        return seen

    def state_space_size(self) -> int:
        return math.prod(len(v.states) for v in self.variables)


class Violation(NamedTuple):
    kind: str
    message: str

    def __str__(self):
        return f"{self.kind}: {self.message}"


def validate(diagram: InfluenceDiagram) -> list[Violation]:
    """Check every semantic invariant; returns all violations, empty if valid.

    Structural completeness (names resolve, tables have the right shapes) is
    the parser's job; everything semantic lands here so tests can build
    deliberately broken diagrams.
    """
    out: list[Violation] = []
    seen_names: set[str] = set()
    for v in diagram.variables:
        if v.name in seen_names:
            out.append(Violation("name", f"duplicate variable name {v.name!r}"))
        seen_names.add(v.name)
        if len(v.states) < 2:
            out.append(Violation("states", f"variable {v.name!r} needs at least 2 states"))
        if len(set(v.states)) != len(v.states):
            out.append(Violation("states", f"variable {v.name!r} has duplicate state labels"))

    p = diagram.partition
    n = p.n
    indices = sorted(v.stage for v in p.decision_order)
    if indices != list(range(1, n + 1)):
        out.append(
            Violation("decision-index", f"decision indices {indices} must be exactly 1..{n}")
        )
    chance = set(diagram.chance_variables)
    in_sets: set[Variable] = set()
    for k, s in enumerate(p.information_sets):
        overlap = in_sets & s
        if overlap:
            names = sorted(v.name for v in overlap)
            out.append(Violation("partition", f"information sets overlap on {names}"))
        in_sets |= s
        if k > n and s:
            names = sorted(v.name for v in s)
            out.append(
                Violation("stage", f"stage {k} exceeds decision count {n} (variables {names})")
            )
    if in_sets != chance:
        missing = sorted(v.name for v in chance - in_sets)
        extra = sorted(v.name for v in in_sets - chance)
        out.append(
            Violation(
                "partition",
                f"information sets must cover exactly the chance variables "
                f"(missing {missing}, extra {extra})",
            )
        )

    for v in diagram.variables:
        if v.is_decision and v.name in diagram.parents and diagram.parents[v.name]:
            out.append(Violation("parents", f"decision {v.name!r} must not have parents"))

    for v in diagram.chance_variables:
        ps = diagram.parents.get(v.name)
        if ps is None:
            out.append(Violation("parents", f"chance variable {v.name!r} has no parent entry"))
            continue
        if len(set(ps)) != len(ps):
            out.append(Violation("parents", f"chance variable {v.name!r} lists a parent twice"))
        cpt = diagram.cpts.get(v.name)
        if cpt is None:
            out.append(Violation("cpt", f"chance variable {v.name!r} has no cpt"))
            continue
        if set(cpt.domain) != set(ps) | {v}:
            out.append(
                Violation("cpt", f"cpt of {v.name!r} is not over its family")
            )
            continue
        if np.any(cpt.values < 0):
            out.append(Violation("cpt", f"cpt of {v.name!r} has negative entries"))
        axis = cpt.domain.index(v)
        sums = cpt.values.sum(axis=axis)
        bad = np.abs(sums - 1.0) > ROW_SUM_TOL
        if np.any(bad):
            worst = float(np.asarray(sums)[bad].flat[0]) if sums.ndim else float(sums)
            out.append(
                Violation(
                    "normalization",
                    f"cpt rows of {v.name!r} must sum to 1 (found {worst!r})",
                )
            )

    for u in diagram.utilities:
        if not np.all(np.isfinite(u.table.values)):
            out.append(Violation("utility", f"utility {u.name!r} has non-finite values"))

    # cycle check over chance arcs plus decision->child arcs
    color: dict[Variable, int] = {}

    def dfs(v: Variable) -> bool:
        color[v] = 1
        for c in diagram.children(v):
            st = color.get(c, 0)
            if st == 1 or (st == 0 and dfs(c)):
                return True
        color[v] = 2
        return False

    if any(color.get(v, 0) == 0 and dfs(v) for v in diagram.variables):
        out.append(Violation("cycle", "directed graph over the variables has a cycle"))
    else:
        for d in p.decision_order:
            k = d.stage
            past = set().union(*p.information_sets[:k]) if k else set()
            hit = diagram.descendants(d) & past
            for x in sorted(hit, key=lambda v: v.name):
                out.append(
                    Violation(
                        "temporal",
                        f"decision {d.name!r} influences {x.name!r}, which is observed "
                        f"before it (stage {x.stage})",
                    )
                )
    return out


# ---------------------------------------------------------------------------
# parsing and serialization


class _Line:
    def __init__(self, number: int, tokens: list[tuple[str, int]]):
        self.number = number
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> str | None:
        return self.tokens[self.pos][0] if self.pos < len(self.tokens) else None

    def column(self) -> int:
        if self.pos < len(self.tokens):
            return self.tokens[self.pos][1]
        return self.tokens[-1][1] + len(self.tokens[-1][0]) if self.tokens else 1

    def take(self, what: str) -> str:
        tok = self.peek()
        if tok is None:
            raise ParseError(f"expected {what} at end of line", self.number, self.column())
        self.pos += 1
        return tok

    def expect(self, literal: str):
        col = self.column()
        tok = self.take(repr(literal))
        if tok != literal:
            raise ParseError(f"expected {literal!r}, found {tok!r}", self.number, col)


def _tokenize(text: str) -> list[_Line]:
    lines = []
    for i, raw in enumerate(text.splitlines(), 1):
        body = raw.split("#", 1)[0]
        tokens = [(m.group(0), m.start() + 1) for m in re.finditer(r"\S+", body)]
        if tokens:
            lines.append(_Line(i, tokens))
    return lines


def _take_name(line: _Line, what: str) -> str:
    col = line.column()
    tok = line.take(what)
    if not _NAME_RE.match(tok) or tok in _KEYWORDS:
        raise ParseError(f"invalid {what} {tok!r}", line.number, col)
    return tok


def _take_int(line: _Line, what: str, minimum: int) -> int:
    col = line.column()
    tok = line.take(what)
    try:
        value = int(tok)
    except ValueError:
        raise ParseError(f"expected integer {what}, found {tok!r}", line.number, col) from None
    if value < minimum:
        raise ParseError(f"{what} must be >= {minimum}, found {value}", line.number, col)
    return value


def _take_float(line: _Line) -> float:
    col = line.column()
    tok = line.take("a numeric value")
    try:
        return float(tok)
    except ValueError:
        raise ParseError(f"expected a number, found {tok!r}", line.number, col) from None


def parse_model(text: str) -> InfluenceDiagram:
    """Parse a model document into a structurally complete diagram.

    Semantic checks (normalization, acyclicity, temporal consistency) are
    deferred to :func:`validate`; this raises :class:`ParseError` only for
    syntax problems, unresolved or duplicate names, and wrong table sizes.
    """
    variables: list[Variable] = []
    by_name: dict[str, Variable] = {}
    parents: dict[str, tuple[Variable, ...]] = {}
    cpt_lines: dict[str, tuple[_Line, int, list[Variable], list[float]]] = {}
    utilities: list[Utility] = []
    util_names: set[str] = set()

    def declare(line: _Line, kind: str) -> None:
        col = line.column()
        name = _take_name(line, "variable name")
        if name in by_name:
            raise ParseError(f"duplicate name {name!r}", line.number, col)
        line.expect("states")
        labels: list[str] = []
        stop = "stage" if kind == CHANCE else "index"
        while line.peek() is not None and line.peek() != stop:
            tcol = line.column()
            tok = line.take("state label")
            if not _LABEL_RE.match(tok):
                raise ParseError(f"invalid state label {tok!r}", line.number, tcol)
            labels.append(tok)
        if not labels:
            raise ParseError("at least one state label required", line.number, line.column())
        line.expect(stop)
        if kind == CHANCE:
            v = chance_var(name, labels, _take_int(line, "stage", 0))
        else:
            v = decision_var(name, labels, _take_int(line, "index", 1))
        if line.peek() is not None:
            raise ParseError(f"unexpected token {line.peek()!r}", line.number, line.column())
        variables.append(v)
        by_name[name] = v

    def resolve(line: _Line, what: str) -> Variable:
        col = line.column()
        tok = line.take(what)
        v = by_name.get(tok)
        if v is None:
            raise ParseError(f"undeclared variable {tok!r}", line.number, col)
        return v

    def values_after_colon(line: _Line) -> list[float]:
        line.expect(":")
        vals = []
        while line.peek() is not None:
            vals.append(_take_float(line))
        return vals

    for line in _tokenize(text):
        head_col = line.column()
        head = line.take("a directive")
        if head in (CHANCE, DECISION):
            declare(line, head)
        elif head == "cpt":
            tcol = line.column()
            target = resolve(line, "cpt target")
            if target.is_decision:
                raise ParseError(
                    f"decision {target.name!r} cannot have a cpt", line.number, tcol
                )
            if target.name in cpt_lines:
                raise ParseError(f"duplicate cpt for {target.name!r}", line.number, tcol)
            given: list[Variable] = []
            if line.peek() == "given":
                line.expect("given")
                while line.peek() is not None and line.peek() != ":":
                    given.append(resolve(line, "parent name"))
            vals = values_after_colon(line)
            cpt_lines[target.name] = (line, tcol, given, vals)
        elif head == "utility":
            ucol = line.column()
            uname = _take_name(line, "utility name")
            if uname in util_names or uname in by_name:
                raise ParseError(f"duplicate name {uname!r}", line.number, ucol)
            util_names.add(uname)
            line.expect("over")
            dom: list[Variable] = []
            while line.peek() is not None and line.peek() != ":":
                dom.append(resolve(line, "utility variable"))
            vals = values_after_colon(line)
            expected = math.prod(len(v.states) for v in dom)
            if len(vals) != expected:
                raise ParseError(
                    f"utility {uname!r} needs {expected} values, found {len(vals)}",
                    line.number,
                    ucol,
                )
            if len(set(dom)) != len(dom):
                raise ParseError(f"utility {uname!r} repeats a variable", line.number, ucol)
            utilities.append(Utility(uname, tuple(dom), Table.from_flat(dom, vals)))
        else:
            raise ParseError(f"unknown directive {head!r}", line.number, head_col)

    cpts: dict[str, Table] = {}
    for v in variables:
        if v.is_decision:
            continue
        entry = cpt_lines.pop(v.name, None)
        if entry is None:
            raise ParseError(f"missing cpt for chance variable {v.name!r}", 0, 1)
        line, col, given, vals = entry
        dom = given + [v]
        if len(set(dom)) != len(dom):
            raise ParseError(f"cpt of {v.name!r} repeats a variable", line.number, col)
        expected = math.prod(len(w.states) for w in dom)
        if len(vals) != expected:
            raise ParseError(
                f"cpt of {v.name!r} needs {expected} values, found {len(vals)}",
                line.number,
                col,
            )
        parents[v.name] = tuple(given)
        cpts[v.name] = Table.from_flat(dom, vals)

    return InfluenceDiagram(tuple(variables), parents, cpts, tuple(utilities))


def _fmt(x: float) -> str:
    return repr(float(x))


def write_model(diagram: InfluenceDiagram) -> str:
    """Serialize a diagram; ``parse_model`` of the result is structurally equal."""
    out = []
    for v in diagram.variables:
        labels = " ".join(v.states)
        if v.is_decision:
            out.append(f"decision {v.name} states {labels} index {v.stage}")
        else:
            out.append(f"chance {v.name} states {labels} stage {v.stage}")
    for v in diagram.variables:
        if v.is_decision:
            continue
        ps = diagram.parents[v.name]
        given = f" given {' '.join(p.name for p in ps)}" if ps else ""
        flat = diagram.cpts[v.name].to_flat(list(ps) + [v])
        out.append(f"cpt {v.name}{given} : {' '.join(_fmt(x) for x in flat)}")
    for u in diagram.utilities:
        names = " ".join(v.name for v in u.domain)
        flat = u.table.to_flat(u.domain)
        out.append(f"utility {u.name} over {names} : {' '.join(_fmt(x) for x in flat)}")
    return "\n".join(out) + "\n"


def diagrams_equal(a: InfluenceDiagram, b: InfluenceDiagram) -> bool:
    """Structural equality: same variables, arcs, tables, and partition."""
    if a.variables != b.variables or a.partition != b.partition:
        return False
    if dict(a.parents) != dict(b.parents):
        return False
    if set(a.cpts) != set(b.cpts):
        return False
    if any(not a.cpts[k].equals(b.cpts[k]) for k in a.cpts):
        return False
    if len(a.utilities) != len(b.utilities):
        return False
    return all(
        ua.name == ub.name and ua.domain == ub.domain and ua.table.equals(ub.table)
        for ua, ub in zip(a.utilities, b.utilities)
    )
