"""Evaluation on the strong junction tree: collect, MEU, optimal policies.

Each clique carries a probability potential and a utility potential.  After
initialization the product of all probability potentials is the joint
distribution and the sum of all utility potentials is the total utility.
Absorbing a leaf contracts it over the variables outside the separator and
folds the result into its parent; running absorptions from the highest clique
index down to the root leaves the root holding the contraction of the whole
model, from which a final contraction yields the maximum expected utility.

Every max step over a decision happens exactly once, in the clique nearest
the root that contains the decision.  The probability component must be
constant in the decision there (a model/compiler invariant that is checked),
so the optimal choice is the argmax of the utility contraction, recorded at
the moment the step runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .compiler import StrongJunctionTree
from .model import InfluenceDiagram, Variable
from .tables import Table, add, argmax_over, divide, extend, marg_all, multiply

CONSTANCY_TOL = 1e-9
ROOT_MASS_TOL = 1e-9


class InvariantError(Exception):
    """A propagation invariant failed; the model or compilation is unsound."""


@dataclass
class CliqueState:
    """Probability and utility potentials of one clique.

    Domains stay as small as the assigned factors allow; both potentials are
    read as functions on the full clique state space (constant in missing
    members), which the marginalization primitives honor.
    """

    phi: Table
    psi: Table


@dataclass(frozen=True)
class Policy:
    """Optimal choice of one decision per configuration of its requisite past."""

    decision: Variable
    domain: tuple[Variable, ...]
    choice: Table  # integer state indices over ``domain``

    def decide(self, assignment: dict[Variable, int]) -> int:
        idx = tuple(assignment[v] for v in self.domain)
        return int(self.choice.values[idx])


@dataclass(frozen=True)
class SolveResult:
    meu: float
    policies: tuple[Policy, ...]
    policy_clique: dict[str, int]


@dataclass
class _MaxStep:
    clique: int
    phi: Table
    rho: Table


@dataclass
class SolveRun:
    """Mutable state of one collect/extract pass over an initialized tree."""

    tree: StrongJunctionTree
    diagram: InfluenceDiagram
    states: dict[int, CliqueState]
    sent: dict[int, tuple[Table, Table]] = field(default_factory=dict)
    retired: set[int] = field(default_factory=set)
    max_steps: dict[Variable, _MaxStep] = field(default_factory=dict)
    root_scalar: tuple[float, float] | None = None
    constancy_worst: float = 0.0  # largest constancy spread seen at any max step

    def live_indices(self) -> list[int]:
        return [c.index for c in self.tree.cliques if c.index not in self.retired]


def initialize(tree: StrongJunctionTree, diagram: InfluenceDiagram) -> SolveRun:
    """Assign each CPT and utility to the lowest-index clique covering it.

    Unassigned cliques keep the unit probability / null utility potentials,
    so globally the tree still represents the model's joint and total utility.
    """
    states = {c.index: CliqueState(Table.unit(), Table.null()) for c in tree.cliques}
    ordered = sorted(tree.cliques, key=lambda c: c.index)

    def host(domain: set[Variable], what: str) -> int:
        for c in ordered:
            if domain <= c.members:
                return c.index
        names = sorted(v.name for v in domain)
        raise InvariantError(f"no clique contains the {what} {names}")

    for v in diagram.chance_variables:
        k = host(set(diagram.family(v)), f"family of {v.name!r}")
        st = states[k]
        st.phi = multiply(st.phi, diagram.cpts[v.name])
    for u in diagram.utilities:
        k = host(set(u.domain), f"domain of utility {u.name!r}")
        st = states[k]
        st.psi = add(st.psi, u.table)
    return SolveRun(tree, diagram, states)


def _constancy_spread(phi: Table, decision: Variable) -> float:
    """Largest relative spread of phi across the decision's states; 0 if absent."""
    if decision not in phi.domain:
        return 0.0
    axis = phi.domain.index(decision)
    hi = phi.values.max(axis=axis)
    lo = phi.values.min(axis=axis)
    if np.any(lo < 0):
        raise InvariantError(
            f"probability potential is negative at the max step over {decision.name!r}"
        )
    denom = np.maximum(np.abs(hi), np.abs(lo))
    spread = np.where(denom > 0, (hi - lo) / np.where(denom > 0, denom, 1.0), 0.0)
    return float(np.max(spread)) if spread.size else 0.0


def _recorder(run: SolveRun, clique_index: int):
    def on_decision(decision: Variable, phi: Table, rho: Table):
        if decision in run.max_steps:
            raise InvariantError(f"decision {decision.name!r} max-marginalized twice")
        worst = _constancy_spread(phi, decision)
        run.constancy_worst = max(run.constancy_worst, worst)
        if worst > CONSTANCY_TOL:
            raise InvariantError(
                f"probability potential is not a non-negative constant in decision "
                f"{decision.name!r} at its max step (relative spread {worst:.3e})"
            )
        run.max_steps[decision] = _MaxStep(clique_index, phi, rho)

    return on_decision


def _contract(run: SolveRun, clique_index: int, keep: frozenset[Variable]):
    st = run.states[clique_index]
    members = run.tree.clique(clique_index).members
    return marg_all(st.phi, st.psi, members - keep, on_decision=_recorder(run, clique_index))


def absorb(run: SolveRun, child_index: int) -> None:
    """Contract a leaf clique onto its separator and fold it into the parent.

    The utility message arrives already divided by the probability message
    (with 0/0 = 0), so the parent update is a multiply and an add.  Wherever
    the probability message is zero the utility message must be zero too;
    nonzero utility on zero support means the model's joint cannot carry it.
    """
    if child_index in run.retired:
        raise InvariantError(f"clique {child_index} already absorbed")
    if any(k not in run.retired for k in run.tree.children(child_index)):
        raise InvariantError(f"clique {child_index} still has live children")
    sep = run.tree.separator(child_index)
    phi_s, psi_s = _contract(run, child_index, sep)
    parent = run.states[run.tree.parent[child_index]]
    parent.phi = multiply(parent.phi, phi_s)
    parent.psi = add(parent.psi, psi_s)
    run.sent[child_index] = (phi_s, psi_s)
    run.retired.add(child_index)


def collect(run: SolveRun) -> SolveRun:
    """Absorb every clique into its parent, highest index first (leaf first)."""
    for c in sorted(run.tree.cliques, key=lambda c: -c.index):
        if c.index != run.tree.root:
            absorb(run, c.index)
    return run


def meu(run: SolveRun) -> float:
    """Contract the collected root to scalars and return the expected utility.

    The probability scalar must come out 1 (the joint sums to one for any
    decision policy); the utility scalar is the maximum expected utility.
    """
    if run.root_scalar is None:
        live = run.live_indices()
        if live != [run.tree.root]:
            raise InvariantError("collect must retire every non-root clique before meu")
        phi0, psi0 = _contract(run, run.tree.root, frozenset())
        mass = float(phi0.values)
        if mass == 0.0:
            raise InvariantError("model has zero total probability mass")
        if abs(mass - 1.0) > ROOT_MASS_TOL:
            raise InvariantError(f"root probability mass {mass!r} differs from 1")
        run.root_scalar = (mass, float(psi0.values))
    return run.root_scalar[1]


def extract_policies(run: SolveRun) -> SolveResult:
    """Read each decision's optimal choice from its recorded max step.

    At the step, the probability component is constant in the decision and
    everything already absorbed is independent of it, so the argmax of the
    utility contraction (ties to the lowest state index) is optimal.  The
    remaining table variables all precede the decision and form the policy
    domain.
    """
    value = meu(run)
    policies = []
    clique_of: dict[str, int] = {}
    for d in run.diagram.decisions:
        step = run.max_steps.get(d)
        if step is None:
            raise InvariantError(f"decision {d.name!r} was never max-marginalized")
        rho = step.rho
        if d not in rho.domain:
            rho = extend(rho, set(rho.domain) | {d})
        choice = argmax_over(rho, d)
        if any(v.rank >= d.rank for v in choice.domain):
            raise InvariantError(f"policy domain of {d.name!r} reaches into its future")
        policies.append(Policy(d, choice.domain, choice))
        clique_of[d.name] = step.clique
    return SolveResult(value, tuple(policies), clique_of)


def solve(tree: StrongJunctionTree, diagram: InfluenceDiagram) -> SolveResult:
    """Initialize, collect, and extract in one go."""
    run = collect(initialize(tree, diagram))
    return extract_policies(run)


def global_pair(run: SolveRun, live_only: bool = True) -> tuple[Table, Table]:
    """Product of live probability potentials and sum of live utility potentials.

    With ``live_only`` false, every clique contributes regardless of
    absorption state (the model's original joint and utility).
    """
    phi = Table.unit()
    psi = Table.null()
    for c in run.tree.cliques:
        if live_only and c.index in run.retired:
            continue
        phi = multiply(phi, run.states[c.index].phi)
        psi = add(psi, run.states[c.index].psi)
    return phi, psi


def rho_of(phi: Table, psi: Table) -> Table:
    """Contraction product, the quantity preserved by absorption."""
    return multiply(phi, psi)


def psi_from_rho(rho: Table, phi: Table) -> Table:
    return divide(rho, phi)
