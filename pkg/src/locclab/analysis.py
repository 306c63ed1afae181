"""Structural and thermodynamic analysis of product-state catalogs.

Covers dissectibility (recursive orthogonality-respecting splittings by
single parties), the waste-information accounting table for the standard
catalogs, quantum-communication costs of making the measurement exact, the
classical entropy a perfect protocol discards, and optimal compression of
"not member j" advice.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import log2
from typing import Sequence, Union

import numpy as np

from .ensembles import ProductEnsemble, build_nine_states, subset
from .infotheory import binary_entropy, check_prob_vec, shannon_entropy
from .linalg import ATOL_STRUCTURAL, projector
from .protocol import Internal, LocalElement, ProtocolNode, ProtocolRun, run_protocol


@dataclass(frozen=True)
class SplitLeaf:
    member: int


@dataclass(frozen=True)
class SplitNode:
    """One orthogonality-respecting splitting: the named party separates the
    first group of members from the second."""

    party: int
    first: tuple[int, ...]
    second: tuple[int, ...]
    children: tuple["SplittingTree", "SplittingTree"]


SplittingTree = Union[SplitNode, SplitLeaf]


def _nonorthogonality_components(e: ProductEnsemble, party: int, members: Sequence[int]):
    """Connected components of the party's local non-orthogonality graph."""
    members = list(members)
    adjacency = {m: set() for m in members}
    for x in range(len(members)):
        for y in range(x + 1, len(members)):
            i, j = members[x], members[y]
            inner = np.vdot(e.members[i].factors[party], e.members[j].factors[party])
            if abs(inner) > ATOL_STRUCTURAL:
                adjacency[i].add(j)
                adjacency[j].add(i)
    seen: set[int] = set()
    components: list[tuple[int, ...]] = []
    for m in members:
        if m in seen:
            continue
        stack, comp = [m], []
        while stack:
            u = stack.pop()
            if u in seen:
                continue
            seen.add(u)
            comp.append(u)
            stack.extend(adjacency[u] - seen)
        components.append(tuple(sorted(comp)))
    return components


def is_dissectible(e: ProductEnsemble, members: Sequence[int] | None = None):
    """Decide dissectibility; on success also return a splitting tree.

    Any valid splitting is a union of connected components of some party's
    non-orthogonality graph, and subsets of dissectible sets stay
    dissectible, so peeling one component at a time loses nothing.
    """
    members = tuple(range(e.n_members)) if members is None else tuple(members)
    if not members:
        raise ValueError("member set must be nonempty")
    if len(members) == 1:
        return True, SplitLeaf(members[0])
    for party in range(e.n_parties):
        components = _nonorthogonality_components(e, party, members)
        if len(components) < 2:
            continue
        first = components[0]
        second = tuple(sorted(m for m in members if m not in first))
        ok_first, tree_first = is_dissectible(e, first)
        ok_second, tree_second = is_dissectible(e, second)
        if ok_first and ok_second:
            return True, SplitNode(party, first, second, (tree_first, tree_second))
        return False, None
    return False, None


def splitting_protocol(tree: SplittingTree, e: ProductEnsemble) -> ProtocolNode:
    """Projective protocol realizing a splitting tree.

    Each splitting becomes a two-element projective round on the splitting
    party: the projector onto the span of the first group's local factors
    versus its complement.  Members never branch, so no entropy is produced.
    """
    if isinstance(tree, SplitLeaf):
        from .protocol import Guess

        return Guess(e.origin[tree.member])
    dim = e.party_dims[tree.party]
    p_first = projector([e.members[m].factors[tree.party] for m in tree.first])
    p_second = np.eye(dim) - p_first
    elements = (
        LocalElement(tree.party, p_first, "0"),
        LocalElement(tree.party, p_second, "1"),
    )
    children = tuple(splitting_protocol(child, e) for child in tree.children)
    return Internal(tree.party, elements, children)


def measurement_entropy(tree: ProtocolNode, e: ProductEnsemble) -> float:
    """Classical waste information, in bits, of a perfect protocol.

    Equals the conditional entropy of the outcome record given the member.
    Raises if any outcome leaves more than one member possible, since the
    accounting only applies to protocols that identify the ensemble exactly.
    """
    run = run_protocol(tree, e)
    return measurement_entropy_of_run(run)


def measurement_entropy_of_run(run: ProtocolRun) -> float:
    joint = run.joint
    for k, column in enumerate(joint.T):
        alive = np.flatnonzero(column > 1e-12 * column.sum() if column.sum() > 0 else column > 0)
        if len(alive) > 1:
            raise ValueError(
                f"outcome {run.outcomes[k]!r} leaves {len(alive)} members possible; "
                "the protocol does not identify the ensemble"
            )
    h_joint = shannon_entropy(joint.ravel() / joint.sum())
    h_members = shannon_entropy(joint.sum(axis=1))
    return max(h_joint - h_members, 0.0)


@dataclass(frozen=True, eq=False)
class HintPlan:
    """Optimal frequencies for negative hints of the form "not member j"."""

    hintable: tuple[int, ...]
    q: np.ndarray
    cost: float


def advice_cost(priors, hintable: Sequence[int]) -> HintPlan:
    """Cheapest asymptotic rate, in bits per state, of always-valid negative hints.

    Minimizes ``-sum_i p_i log2(1 - q_i)`` over hint frequencies ``q`` on the
    hintable set.  Stationarity makes ``1 - q_i`` proportional to ``p_i``;
    members too probable for that to keep ``q_i`` nonnegative get ``q_i = 0``.
    """
    p = check_prob_vec(priors)
    hintable = tuple(sorted(set(int(h) for h in hintable)))
    if not hintable:
        raise ValueError("hintable set must be nonempty")
    for h in hintable:
        if not 0 <= h < len(p):
            raise ValueError(f"hintable index {h} out of range")

    active = [h for h in hintable]
    while True:
        if len(active) == 1:
            lone = active[0]
            if p[lone] > 0.0:
                raise ValueError(
                    "infeasible: the only usable hint would sometimes be false"
                )
            break
        mass = float(sum(p[h] for h in active))
        if mass == 0.0:
            break
        c = (len(active) - 1) / mass
        worst = max(active, key=lambda h: p[h])
        if c * p[worst] > 1.0 + 1e-15:
            active.remove(worst)
            continue
        break

    q = np.zeros(len(p))
    if len(active) == 1:
        q[active[0]] = 1.0
    else:
        mass = float(sum(p[h] for h in active))
        if mass == 0.0:
            share = 1.0 / len(active)
            for h in active:
                q[h] = share
        else:
            c = (len(active) - 1) / mass
            for h in active:
                q[h] = max(0.0, 1.0 - c * p[h])
    cost = -float(sum(p[h] * log2(1.0 - q[h]) for h in hintable if q[h] > 0.0))
    return HintPlan(hintable, q, cost)


@dataclass(frozen=True)
class QuantumCost:
    """Qubits of transmission making the named measurement exact."""

    variant: str
    qubits: float
    ship_baseline: float


def quantum_cost(variant: str) -> QuantumCost:
    """Quantum-communication cost of completing the measurement.

    ``nine``: compressing the transferred third component costs h(1/3), plus
    a 2/9-weighted return qubit.  ``eight``: h(3/8) plus a 1/4-weighted
    return.  The baseline is shipping one party's whole system, Schumacher
    compressed where its marginal entropy is below maximal.
    """
    if variant == "nine":
        return QuantumCost("nine", binary_entropy(1.0 / 3.0) + 2.0 / 9.0, log2(3.0))
    if variant == "eight":
        return QuantumCost(
            "eight", binary_entropy(3.0 / 8.0) + 2.0 / 8.0, 11.0 / 4.0 - log2(3.0)
        )
    raise ValueError(f"variant must be 'nine' or 'eight', not {variant!r}")


@dataclass(frozen=True)
class AccountingRow:
    """Nonlocality accounting for one catalog: flags plus bit costs."""

    ensemble: str
    locally_preparable: bool
    locally_measurable: bool
    dissectible: bool
    entropy_prep: float
    entropy_meas: float
    entanglement_prep: float
    entanglement_meas: float
    advice_meas: float


#: Deficit of the best known local strategy on the nine-state catalog; the
#: residual advice that identifies the member exactly after that strategy.
NINE_STATE_ADVICE_BITS = 0.1575


def entropy_table() -> tuple[AccountingRow, ...]:
    """Accounting rows for the standard catalogs.

    Cell values come from the best known protocols: preparation entropies
    from erasing the work bit that selects a dissectible stand-in catalog,
    measurement entropies from the cheapest perfect protocol (teleportation
    assisted where no local protocol exists, at two waste bits per qubit).
    Dissectibility is computed, not quoted.
    """
    nine = build_nine_states()
    dissect_nine = is_dissectible(nine)[0]
    dissect_2468 = is_dissectible(subset(nine, [1, 3, 5, 7]))[0]
    dissect_246 = is_dissectible(subset(nine, [1, 3, 5]))[0]
    nine_qubits = quantum_cost("nine").qubits
    return (
        AccountingRow(
            "nine",
            locally_preparable=True,
            locally_measurable=False,
            dissectible=dissect_nine,
            entropy_prep=binary_entropy(2.0 / 9.0),
            entropy_meas=2.0 * nine_qubits,
            entanglement_prep=0.0,
            entanglement_meas=nine_qubits,
            advice_meas=NINE_STATE_ADVICE_BITS,
        ),
        AccountingRow(
            "2468",
            locally_preparable=True,
            locally_measurable=True,
            dissectible=dissect_2468,
            entropy_prep=binary_entropy(1.0 / 4.0),
            entropy_meas=0.25,
            entanglement_prep=0.0,
            entanglement_meas=0.0,
            advice_meas=0.0,
        ),
        AccountingRow(
            "246",
            locally_preparable=True,
            locally_measurable=True,
            dissectible=dissect_246,
            entropy_prep=0.0,
            entropy_meas=0.0,
            entanglement_prep=0.0,
            entanglement_meas=0.0,
            advice_meas=0.0,
        ),
        AccountingRow(
            "4-Bell",
            locally_preparable=False,
            locally_measurable=False,
            dissectible=False,
            entropy_prep=2.0,
            entropy_meas=2.0,
            entanglement_prep=1.0,
            entanglement_meas=1.0,
            advice_meas=1.0,
        ),
        AccountingRow(
            "2-Bell",
            locally_preparable=False,
            locally_measurable=True,
            dissectible=False,
            entropy_prep=1.0,
            entropy_meas=1.0,
            entanglement_prep=1.0,
            entanglement_meas=0.0,
            advice_meas=0.0,
        ),
    )
