"""Multi-round local measurement protocols as outcome-conditioned trees.

An internal node holds one party's measurement round: a list of operation
elements whose squared sum is the identity on that party's local space.
Each element has one child subtree.  Leaves either guess a member, run the
optimal two-outcome discrimination on a surviving pair of residuals, or
declare a bare token.  Executing a tree against a product ensemble is exact:
branches are enumerated depth first and each member's residual stays a
product state, so only per-party factors are ever updated.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence, Union

import numpy as np

from .ensembles import ProductEnsemble
from .infotheory import binary_entropy, mutual_information
from .linalg import dagger

#: Members below this posterior weight are ignored by overlap scans.
PROB_FLOOR = 1e-15
#: Branches below this total mass are treated as structurally unreachable.
MASS_FLOOR = 1e-30


class ProtocolError(ValueError):
    """Tree structure or execution contract violated."""


class ImpossibleRecordError(ProtocolError):
    """A measurement record with zero likelihood was requested."""


class TreeFormatError(ValueError):
    """Serialized protocol text does not parse, or a tree cannot be emitted."""


@dataclass(frozen=True, eq=False)
class LocalElement:
    """One operation element of a round, acting on a single party.

    The matrix may be rectangular (rows exceeding columns) should an ancilla
    ever enlarge the local space; the strategies shipped here only use square
    square-root-of-diagonal elements.
    """

    party: int
    matrix: np.ndarray
    outcome: str


def sqrt_diag_element(party: int, diag: Sequence[float], outcome: str) -> LocalElement:
    """Element realizing the diagonal POVM entry ``diag`` as its square root."""
    d = np.asarray(diag, dtype=float)
    if np.any(d < 0.0) or np.any(d > 1.0 + 1e-12):
        raise ProtocolError(f"POVM diagonal {d} outside [0, 1]")
    return LocalElement(party, np.diag(np.sqrt(d)).astype(np.complex128), outcome)


@dataclass(frozen=True)
class Guess:
    """Terminal claim that the state is one specific member (origin index)."""

    member: int


@dataclass(frozen=True)
class PairDiscriminate:
    """Terminal optimal two-state measurement between two members.

    With both residuals alive and normalized overlap ``delta``, the guess is
    right with probability ``(1 + sqrt(1 - delta**2)) / 2``.
    """

    first: int
    second: int

    def __post_init__(self):
        if self.first == self.second:
            raise ProtocolError("pair discrimination needs two distinct members")


@dataclass(frozen=True)
class Declare:
    """Terminal bare token, for outcomes that identify nothing."""

    label: str


@dataclass(frozen=True, eq=False)
class Internal:
    party: int
    elements: tuple[LocalElement, ...]
    children: tuple["ProtocolNode", ...]

    def __post_init__(self):
        if len(self.elements) != len(self.children) or not self.elements:
            raise ProtocolError("internal node needs one child per element")
        labels = [e.outcome for e in self.elements]
        if len(set(labels)) != len(labels):
            raise ProtocolError(f"duplicate outcome labels {labels}")
        for e in self.elements:
            if e.party != self.party:
                raise ProtocolError("all elements of a round act on the node's party")


ProtocolNode = Union[Internal, Guess, PairDiscriminate, Declare]


def povm_node(party: int, diags: Sequence[Sequence[float]], children: Sequence[ProtocolNode]) -> Internal:
    """Internal node from diagonal POVM entries, with positional outcome labels."""
    elements = tuple(
        sqrt_diag_element(party, d, str(k)) for k, d in enumerate(diags)
    )
    return Internal(party, elements, tuple(children))


def completeness_defect(node: Internal, dim: int) -> float:
    total = np.zeros((dim, dim), dtype=np.complex128)
    for e in node.elements:
        m = np.asarray(e.matrix, dtype=np.complex128)
        if m.shape[1] != dim:
            raise ProtocolError(f"element for party {node.party} expects dim {m.shape[1]}, space has {dim}")
        total += dagger(m) @ m
    return float(np.max(np.abs(total - np.eye(dim))))


def iter_nodes(tree: ProtocolNode) -> Iterator[ProtocolNode]:
    stack = [tree]
    while stack:
        node = stack.pop()
        yield node
        if isinstance(node, Internal):
            stack.extend(node.children)


def validate_tree(tree: ProtocolNode, party_dims: Sequence[int], atol: float = 1e-10) -> None:
    """Check round completeness and leaf sanity everywhere in the tree."""
    dims = tuple(party_dims)
    for node in iter_nodes(tree):
        if isinstance(node, Internal):
            if not 0 <= node.party < len(dims):
                raise ProtocolError(f"party {node.party} outside {len(dims)}-party space")
            defect = completeness_defect(node, dims[node.party])
            if defect > atol:
                raise ProtocolError(
                    f"round on party {node.party} not complete (defect {defect:.3e})"
                )


# ---------------------------------------------------------------------------
# Posterior tracking along a single record path.


@dataclass(frozen=True, eq=False)
class Posterior:
    """State of knowledge after some prefix of a protocol.

    ``factors`` holds each member's unnormalized residual factors (member
    major, then party); ``accumulated`` holds the composed per-party
    operators, whose tensor square reproduces the likelihoods.
    """

    ensemble: ProductEnsemble
    record: tuple[str, ...]
    factors: tuple[tuple[np.ndarray, ...], ...]
    accumulated: tuple[np.ndarray, ...]

    def residual_sqnorms(self) -> np.ndarray:
        return np.array(
            [np.prod([float(np.vdot(f, f).real) for f in member]) for member in self.factors]
        )

    @property
    def probs(self) -> np.ndarray:
        w = self.ensemble.priors * self.residual_sqnorms()
        total = float(w.sum())
        if total <= MASS_FLOOR:
            raise ImpossibleRecordError(f"record {self.record} has zero likelihood")
        return w / total


def initial_posterior(e: ProductEnsemble) -> Posterior:
    factors = tuple(tuple(np.array(f) for f in m.factors) for m in e.members)
    accumulated = tuple(np.eye(d, dtype=np.complex128) for d in e.party_dims)
    return Posterior(e, (), factors, accumulated)


def apply_round(post: Posterior, element: LocalElement) -> Posterior:
    """Condition on one element's outcome: update residuals and accumulators."""
    m = np.asarray(element.matrix, dtype=np.complex128)
    p = element.party
    if not 0 <= p < post.ensemble.n_parties:
        raise ProtocolError(f"party {p} outside ensemble")
    if m.shape[1] != post.accumulated[p].shape[0]:
        raise ProtocolError(
            f"element expects local dim {m.shape[1]}, current is {post.accumulated[p].shape[0]}"
        )
    factors = tuple(
        tuple(m @ f if k == p else f for k, f in enumerate(member))
        for member in post.factors
    )
    accumulated = tuple(
        m @ a if k == p else a for k, a in enumerate(post.accumulated)
    )
    return Posterior(post.ensemble, post.record + (element.outcome,), factors, accumulated)


def posterior_probs(tree: ProtocolNode, e: ProductEnsemble, record: Sequence[str]) -> np.ndarray:
    """Posterior over members after following ``record`` down the tree."""
    post = initial_posterior(e)
    node = tree
    for token in record:
        if not isinstance(node, Internal):
            raise ProtocolError(f"record {tuple(record)} longer than the tree")
        by_label = {el.outcome: (el, child) for el, child in zip(node.elements, node.children)}
        if token not in by_label:
            raise ProtocolError(f"no outcome {token!r} at this round")
        element, node = by_label[token]
        post = apply_round(post, element)
    return post.probs


def residual_overlaps(post: Posterior, floor: float = PROB_FLOOR) -> float:
    """Largest normalized overlap between residuals of still-possible members."""
    sqnorms = post.residual_sqnorms()
    sq = post.ensemble.priors * sqnorms
    total = float(sq.sum())
    if total <= MASS_FLOOR:
        raise ImpossibleRecordError("no member survives this record")
    alive = [k for k in range(len(sq)) if sq[k] / total > floor]
    norms = {k: float(np.sqrt(sqnorms[k])) for k in alive}
    worst = 0.0
    for a in range(len(alive)):
        for b in range(a + 1, len(alive)):
            i, j = alive[a], alive[b]
            inner = 1.0 + 0.0j
            for fi, fj in zip(post.factors[i], post.factors[j]):
                inner *= np.vdot(fi, fj)
            worst = max(worst, abs(inner) / (norms[i] * norms[j]))
    return worst


def pair_discriminate_info(delta: float) -> float:
    """Accessible information, in bits, of two equiprobable pure states.

    ``delta`` is the magnitude of their overlap; the optimal measurement
    yields ``1 - h(1/2 - sqrt(1 - delta**2)/2)`` bits.
    """
    delta = float(delta)
    if not 0.0 <= delta <= 1.0:
        raise ValueError(f"overlap {delta} outside [0, 1]")
    return 1.0 - binary_entropy(0.5 - 0.5 * np.sqrt(max(0.0, 1.0 - delta * delta)))


# ---------------------------------------------------------------------------
# Exact protocol execution.


@dataclass(frozen=True)
class LeafReport:
    record: str
    kind: str
    detail: str
    mass: float
    survivors: tuple[int, ...]
    max_overlap: float


@dataclass(frozen=True, eq=False)
class ProtocolRun:
    """Exact joint distribution over (true member, outcome record)."""

    ensemble: ProductEnsemble
    outcomes: tuple[str, ...]
    joint: np.ndarray
    leaves: tuple[LeafReport, ...]

    def mutual_information(self) -> float:
        return mutual_information(self.joint)

    def outcome_masses(self) -> np.ndarray:
        return self.joint.sum(axis=0)


def _pair_stats(factors, i: int, j: int) -> tuple[float, float, float]:
    """Squared norms of residuals i and j and their normalized overlap."""
    ni = np.prod([float(np.vdot(fp[i], fp[i]).real) for fp in factors])
    nj = np.prod([float(np.vdot(fp[j], fp[j]).real) for fp in factors])
    if ni <= MASS_FLOOR or nj <= MASS_FLOOR:
        return float(ni), float(nj), 0.0
    inner = 1.0 + 0.0j
    for fp in factors:
        inner *= np.vdot(fp[i], fp[j])
    return float(ni), float(nj), float(abs(inner) / np.sqrt(ni * nj))


def _max_overlap(factors, alive: Sequence[int]) -> float:
    worst = 0.0
    for a in range(len(alive)):
        for b in range(a + 1, len(alive)):
            _, _, d = _pair_stats(factors, alive[a], alive[b])
            worst = max(worst, d)
    return worst


def run_protocol(
    tree: ProtocolNode,
    e: ProductEnsemble,
    *,
    validate: bool = True,
    atol: float = 1e-10,
) -> ProtocolRun:
    """Enumerate every branch of the tree exactly against the ensemble.

    Pair-discrimination leaves expand into two outcomes with the optimal
    two-state success probability; a leaf reached by members it does not
    reference raises :class:`ProtocolError`.
    """
    if validate:
        validate_tree(tree, e.party_dims, atol=atol)
    n = e.n_members
    priors = e.priors
    outcomes: list[str] = []
    columns: list[np.ndarray] = []
    leaves: list[LeafReport] = []

    def masses(factors) -> np.ndarray:
        sq = np.ones(n)
        for fp in factors:
            sq *= np.einsum("ij,ij->i", fp.conj(), fp).real
        return priors * sq

    def emit(record: str, col: np.ndarray, leaf: LeafReport) -> None:
        outcomes.append(record)
        columns.append(col)
        leaves.append(leaf)

    def walk(node: ProtocolNode, factors, record: tuple[str, ...]) -> None:
        if isinstance(node, Internal):
            for element, child in zip(node.elements, node.children):
                m = element.matrix
                new_factors = [
                    fp @ m.conj().T if p == node.party else fp
                    for p, fp in enumerate(factors)
                ]
                if float(masses(new_factors).sum()) <= MASS_FLOOR:
                    continue
                walk(child, new_factors, record + (element.outcome,))
            return

        mass = masses(factors)
        total = float(mass.sum())
        if total <= MASS_FLOOR:
            return
        alive = [k for k in range(n) if mass[k] / total > PROB_FLOOR]
        name = ":".join(record) if record else "-"

        if isinstance(node, (Guess, Declare)):
            detail = f"guess={node.member}" if isinstance(node, Guess) else f"declare={node.label}"
            kind = "guess" if isinstance(node, Guess) else "declare"
            emit(
                name,
                mass,
                LeafReport(name, kind, detail, total, tuple(e.origin[k] for k in alive),
                           _max_overlap(factors, alive)),
            )
            return

        pos_i = e.position(node.first)
        pos_j = e.position(node.second)
        referenced = {p for p in (pos_i, pos_j) if p is not None}
        stray = sum(mass[k] for k in alive if k not in referenced)
        if stray > 1e-9 * total:
            raise ProtocolError(
                f"pair leaf ({node.first}, {node.second}) at {name} reached by other members"
            )
        mi = mass[pos_i] if pos_i is not None else 0.0
        mj = mass[pos_j] if pos_j is not None else 0.0
        if mi / total > PROB_FLOOR and mj / total > PROB_FLOOR:
            _, _, delta = _pair_stats(factors, pos_i, pos_j)
            success = 0.5 * (1.0 + np.sqrt(max(0.0, 1.0 - delta * delta)))
            for target, other, mt, mo in (
                (node.first, node.second, mi, mj),
                (node.second, node.first, mj, mi),
            ):
                col = np.zeros(n)
                col[e.position(target)] = mt * success
                col[e.position(other)] = mo * (1.0 - success)
                emit(
                    f"{name}/g{target}",
                    col,
                    LeafReport(name, "pair", f"pair=({node.first},{node.second})",
                               float(col.sum()), tuple(e.origin[k] for k in alive), delta),
                )
        else:
            survivor = node.first if mi >= mj else node.second
            col = np.zeros(n)
            pos = e.position(survivor)
            col[pos] = mass[pos]
            emit(
                f"{name}/g{survivor}",
                col,
                LeafReport(name, "pair", f"pair=({node.first},{node.second})",
                           float(col.sum()), tuple(e.origin[k] for k in alive), 0.0),
            )

    factors0 = [
        np.stack([m.factors[p] for m in e.members]) for p in range(e.n_parties)
    ]
    walk(tree, factors0, ())
    if not columns:
        raise ProtocolError("protocol produced no reachable outcome")
    joint = np.column_stack(columns)
    total = float(joint.sum())
    if abs(total - 1.0) > atol:
        raise ProtocolError(f"joint mass {total} differs from 1; tree is not complete")
    return ProtocolRun(e, tuple(outcomes), joint / total, tuple(leaves))


# ---------------------------------------------------------------------------
# Plain-text serialization.  Internal nodes carry the POVM diagonals of their
# elements (the element matrix is the square root), leaves their kind and
# payload.  parse(emit(tree)) reproduces the tree exactly.

_INDENT = "  "


def _diag_of(element: LocalElement) -> np.ndarray:
    m = np.asarray(element.matrix)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise TreeFormatError("only square elements are serializable")
    if np.any(m != np.diag(np.diagonal(m))):
        raise TreeFormatError("only diagonal-POVM elements are serializable")
    d = np.diagonal(m)
    if np.any(d.imag != 0.0) or np.any(d.real < 0.0):
        raise TreeFormatError("element diagonal must be real nonnegative")
    return (d.real ** 2)


def emit_tree(tree: ProtocolNode) -> str:
    lines: list[str] = []

    def put(depth: int, text: str) -> None:
        lines.append(_INDENT * depth + text)

    def walk(node: ProtocolNode, depth: int) -> None:
        if isinstance(node, Internal):
            put(depth, f"internal party={node.party}")
            for element, child in zip(node.elements, node.children):
                put(depth + 1, "element diag=" + ",".join(repr(float(x)) for x in _diag_of(element)))
                walk(child, depth + 2)
        elif isinstance(node, Guess):
            put(depth, f"leaf guess {node.member}")
        elif isinstance(node, PairDiscriminate):
            put(depth, f"leaf pair {node.first} {node.second}")
        elif isinstance(node, Declare):
            put(depth, f"leaf declare {node.label}")
        else:
            raise TreeFormatError(f"unknown node {node!r}")

    walk(tree, 0)
    return "\n".join(lines) + "\n"


def parse_tree(text: str) -> ProtocolNode:
    rows: list[tuple[int, str]] = []
    for ln, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip() or raw.lstrip().startswith("#"):
            continue
        stripped = raw.lstrip(" ")
        pad = len(raw) - len(stripped)
        if pad % len(_INDENT) != 0:
            raise TreeFormatError(f"line {ln}: indentation must be multiples of two spaces")
        rows.append((pad // len(_INDENT), stripped.rstrip()))
    if not rows:
        raise TreeFormatError("empty protocol document")

    pos = 0

    def parse_node(depth: int) -> ProtocolNode:
        nonlocal pos
        if pos >= len(rows):
            raise TreeFormatError("unexpected end of document")
        d, line = rows[pos]
        if d != depth:
            raise TreeFormatError(f"expected depth {depth}, found {d} at {line!r}")
        pos += 1
        if line.startswith("internal party="):
            party = int(line.removeprefix("internal party="))
            diags: list[list[float]] = []
            children: list[ProtocolNode] = []
            while pos < len(rows) and rows[pos][0] == depth + 1:
                dd, eline = rows[pos]
                if not eline.startswith("element diag="):
                    raise TreeFormatError(f"expected element line, found {eline!r}")
                pos += 1
                diags.append([float(x) for x in eline.removeprefix("element diag=").split(",")])
                children.append(parse_node(depth + 2))
            if not diags:
                raise TreeFormatError("internal node with no elements")
            return povm_node(party, diags, children)
        if line.startswith("leaf guess "):
            return Guess(int(line.split()[2]))
        if line.startswith("leaf pair "):
            _, _, a, b = line.split()
            return PairDiscriminate(int(a), int(b))
        if line.startswith("leaf declare "):
            return Declare(line.removeprefix("leaf declare "))
        raise TreeFormatError(f"unrecognized line {line!r}")

    tree = parse_node(0)
    if pos != len(rows):
        raise TreeFormatError("trailing content after the root subtree")
    return tree


def trees_equal(a: ProtocolNode, b: ProtocolNode) -> bool:
    if type(a) is not type(b):
        return False
    if isinstance(a, Internal):
        return (
            a.party == b.party
            and len(a.elements) == len(b.elements)
            and all(
                ea.outcome == eb.outcome and np.array_equal(ea.matrix, eb.matrix)
                for ea, eb in zip(a.elements, b.elements)
            )
            and all(trees_equal(ca, cb) for ca, cb in zip(a.children, b.children))
        )
    return a == b
