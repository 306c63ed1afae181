"""State catalogs: prior-weighted product ensembles and related families.

The central family is a complete orthonormal set of nine two-party product
states on a 3 x 3 space whose superposed pairs tile the board like dominoes,
together with its rotated generalization, subsets of it, a three-party
eight-state analogue, Bell-state catalogs, and one orthogonal mixed-state
pair.  Local factors may be given unnormalized; constructors normalize.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import linalg
from .infotheory import check_prob_vec
from .linalg import ATOL_STRUCTURAL, basis_ket, gram, ket, kron, kron_all, normalized

_HALF_PI = np.pi / 2.0


@dataclass(frozen=True, eq=False)
class PartyState:
    """Pure multiparty product state, one unit-normalized factor per party."""

    factors: tuple[np.ndarray, ...]

    @property
    def party_dims(self) -> tuple[int, ...]:
        return tuple(f.size for f in self.factors)

    def joint(self) -> np.ndarray:
        return kron_all(self.factors)


def party_state(*factors) -> PartyState:
    return PartyState(tuple(normalized(ket(f)) for f in factors))


@dataclass(frozen=True, eq=False)
class ProductEnsemble:
    """Prior-weighted catalog of product states over fixed party dimensions.

    ``origin`` records each member's position in the catalog it was taken
    from, so protocol trees built against a full catalog keep addressing the
    same physical members after :func:`subset`.
    """

    party_dims: tuple[int, ...]
    members: tuple[PartyState, ...]
    priors: np.ndarray
    labels: tuple[str, ...]
    origin: tuple[int, ...] = field(default=())

    def __post_init__(self):
        if not self.members:
            raise ValueError("ensemble needs at least one member")
        for m in self.members:
            if m.party_dims != self.party_dims:
                raise linalg.DimensionMismatchError(
                    f"member dims {m.party_dims} != ensemble dims {self.party_dims}"
                )
        if len(self.labels) != len(self.members):
            raise ValueError("one label per member required")
        check_prob_vec(self.priors)
        if len(self.priors) != len(self.members):
            raise ValueError("one prior per member required")
        if not self.origin:
            object.__setattr__(self, "origin", tuple(range(len(self.members))))
        if len(self.origin) != len(self.members):
            raise ValueError("one origin index per member required")

    @property
    def n_members(self) -> int:
        return len(self.members)

    @property
    def n_parties(self) -> int:
        return len(self.party_dims)

    def joint_vectors(self) -> np.ndarray:
        return np.stack([m.joint() for m in self.members])

    def gram(self) -> np.ndarray:
        return gram(self.joint_vectors())

    def is_orthonormal(self, atol: float = ATOL_STRUCTURAL) -> bool:
        g = self.gram()
        return bool(np.max(np.abs(g - np.eye(self.n_members))) <= atol)

    def position(self, origin_index: int) -> int | None:
        """Member position holding the given origin index, or None if absent."""
        try:
            return self.origin.index(origin_index)
        except ValueError:
            return None


@dataclass(frozen=True, eq=False)
class KetEnsemble:
    """Catalog of joint kets; members need not be product states."""

    party_dims: tuple[int, ...]
    kets: tuple[np.ndarray, ...]
    priors: np.ndarray
    labels: tuple[str, ...]

    def __post_init__(self):
        dim = int(np.prod(self.party_dims))
        for v in self.kets:
            if v.size != dim:
                raise linalg.DimensionMismatchError("ket dimension mismatch")
        check_prob_vec(self.priors)

    def gram(self) -> np.ndarray:
        return gram(self.kets)


def _uniform(n: int) -> np.ndarray:
    return np.full(n, 1.0 / n)


def build_nine_states(
    theta23: float = np.pi / 4,
    theta45: float = np.pi / 4,
    theta67: float = np.pi / 4,
    theta89: float = np.pi / 4,
    priors=None,
) -> ProductEnsemble:
    """Nine orthonormal two-qutrit product states, one rotation per domino pair.

    All angles at pi/4 give the standard equal-superposition catalog; the
    Gram matrix is the identity for every choice of angles.
    """
    e0, e1, e2 = (basis_ket(3, k) for k in range(3))

    def rot(c0, c1, theta):
        return np.cos(theta) * c0 + np.sin(theta) * c1, -np.sin(theta) * c0 + np.cos(theta) * c1

    b23a, b23b = rot(e0, e1, theta23)
    b45a, b45b = rot(e2, e1, theta45)
    a67a, a67b = rot(e2, e1, theta67)
    a89a, a89b = rot(e0, e1, theta89)
    members = (
        party_state(e1, e1),
        party_state(e0, b23a),
        party_state(e0, b23b),
        party_state(e2, b45a),
        party_state(e2, b45b),
        party_state(a67a, e0),
        party_state(a67b, e0),
        party_state(a89a, e2),
        party_state(a89b, e2),
    )
    priors = _uniform(9) if priors is None else np.asarray(priors, dtype=float)
    labels = tuple(f"psi{k}" for k in range(1, 10))
    return ProductEnsemble((3, 3), members, priors, labels)


def build_eight_states_three_party(priors=None) -> ProductEnsemble:
    """Eight orthonormal three-qubit product states laid out as dumbbells."""
    e0, e1 = basis_ket(2, 0), basis_ket(2, 1)
    plus, minus = e0 + e1, e0 - e1
    rows = (
        (e0, e0, e0),
        (e1, e1, e1),
        (plus, e0, e1),
        (minus, e0, e1),
        (e0, e1, plus),
        (e0, e1, minus),
        (e1, plus, e0),
        (e1, minus, e0),
    )
    members = tuple(party_state(*r) for r in rows)
    priors = _uniform(8) if priors is None else np.asarray(priors, dtype=float)
    labels = tuple(f"phi{k}" for k in range(1, 9))
    return ProductEnsemble((2, 2, 2), members, priors, labels)


def bell_states() -> dict[str, np.ndarray]:
    e0, e1 = basis_ket(2, 0), basis_ket(2, 1)
    s = np.sqrt(2.0)
    return {
        "Phi+": (kron(e0, e0) + kron(e1, e1)) / s,
        "Phi-": (kron(e0, e0) - kron(e1, e1)) / s,
        "Psi+": (kron(e0, e1) + kron(e1, e0)) / s,
        "Psi-": (kron(e0, e1) - kron(e1, e0)) / s,
    }


def build_bell_ensemble(count: int) -> KetEnsemble:
    """Equiprobable catalog of four Bell states, or of the {Phi+, Psi+} pair."""
    table = bell_states()
    if count == 4:
        names = ("Phi+", "Phi-", "Psi+", "Psi-")
    elif count == 2:
        names = ("Phi+", "Psi+")
    else:
        raise ValueError(f"count must be 2 or 4, not {count!r}")
    return KetEnsemble((2, 2), tuple(table[n] for n in names), _uniform(count), names)


def build_mixed_pair() -> tuple[np.ndarray, np.ndarray]:
    """Two orthogonal separable two-qubit density operators.

    The first mixes |0+> with |+0>; the second mixes |11> with |-->.  Their
    supports are orthogonal even though no pure-state decomposition of
    either is locally distinguishable from the other.
    """
    e0, e1 = basis_ket(2, 0), basis_ket(2, 1)
    plus = normalized(e0 + e1)
    minus = normalized(e0 - e1)

    def proj(v):
        return np.outer(v, v.conj())

    rho0 = 0.5 * (proj(kron(e0, plus)) + proj(kron(plus, e0)))
    rho1 = 0.5 * (proj(kron(e1, e1)) + proj(kron(minus, minus)))
    return rho0, rho1


def subset(e: ProductEnsemble, keep: Sequence[int], weights=None) -> ProductEnsemble:
    """Restrict to the members at the given positions.

    Priors are uniform over the kept members unless explicit weights are
    supplied.
    """
    keep = tuple(keep)
    if not keep:
        raise ValueError("keep set must be nonempty")
    if len(set(keep)) != len(keep):
        raise ValueError("keep set has duplicates")
    for k in keep:
        if not 0 <= k < e.n_members:
            raise ValueError(f"member position {k} out of range")
    priors = _uniform(len(keep)) if weights is None else np.asarray(weights, dtype=float)
    return ProductEnsemble(
        e.party_dims,
        tuple(e.members[k] for k in keep),
        priors,
        tuple(e.labels[k] for k in keep),
        tuple(e.origin[k] for k in keep),
    )


#: Catalog names addressable from the service and the CLI.
CATALOG_NAMES = (
    "nine",
    "nine-rotated",
    "eight-no-psi4",
    "2468",
    "246",
    "three-party-8",
    "bell2",
    "bell4",
    "mixed-pair",
)


def load_catalog(name: str, thetas: Sequence[float] | None = None):
    """Build a named catalog.

    ``thetas`` applies only to ``nine-rotated`` (four angles in radians).
    Returns a :class:`ProductEnsemble`, a :class:`KetEnsemble`, or the
    mixed-state pair depending on the name.
    """
    if name == "nine":
        return build_nine_states()
    if name == "nine-rotated":
        angles = tuple(thetas) if thetas is not None else (np.pi / 4,) * 4
        if len(angles) != 4:
            raise ValueError("nine-rotated needs exactly four angles")
        return build_nine_states(*angles)
    if name == "eight-no-psi4":
        return subset(build_nine_states(), [0, 1, 2, 4, 5, 6, 7, 8])
    if name == "2468":
        return subset(build_nine_states(), [1, 3, 5, 7])
    if name == "246":
        return subset(build_nine_states(), [1, 3, 5])
    if name == "three-party-8":
        return build_eight_states_three_party()
    if name == "bell2":
        return build_bell_ensemble(2)
    if name == "bell4":
        return build_bell_ensemble(4)
    if name == "mixed-pair":
        return build_mixed_pair()
    raise KeyError(f"unknown catalog {name!r}")
