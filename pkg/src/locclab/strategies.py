"""The four named local strategies for the nine-state board, plus an optimizer.

All four open with a Bob round and then cascade through conditional cuts
that isolate one domino at a time; pairs that survive with damaged or merged
residuals terminate in optimal two-state discrimination leaves.  Members are
addressed by their position 0..8 in the standard nine-state catalog
(psi1 .. psi9), and the board's quarter-turn symmetry generates the variants.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import optimize as sciopt
from scipy.stats import qmc

from .ensembles import ProductEnsemble, build_nine_states
from .protocol import (
    Guess,
    Internal,
    PairDiscriminate,
    ProtocolNode,
    povm_node,
    run_protocol,
)

ALICE, BOB = 0, 1

#: Quarter turn of the board: party swap with one basis reversal.  Acting on
#: members it cycles (psi2 psi8 psi4 psi6) and (psi3 psi9 psi5 psi7).
_TURN = {0: 0, 1: 7, 7: 3, 3: 5, 5: 1, 2: 8, 8: 4, 4: 6, 6: 2}


def _reverse_diag(matrix: np.ndarray) -> np.ndarray:
    return matrix[::-1, ::-1].copy()


def quarter_turn(node: ProtocolNode) -> ProtocolNode:
    """Conjugate a two-party tree by the board's quarter-turn symmetry."""
    if isinstance(node, Internal):
        if node.party == ALICE:
            party, transform = BOB, _reverse_diag
        else:
            party, transform = ALICE, lambda m: m.copy()
        elements = tuple(
            type(e)(party, transform(e.matrix), e.outcome) for e in node.elements
        )
        return Internal(party, elements, tuple(quarter_turn(c) for c in node.children))
    if isinstance(node, Guess):
        return Guess(_TURN[node.member])
    if isinstance(node, PairDiscriminate):
        return PairDiscriminate(_TURN[node.first], _TURN[node.second])
    return node


def half_turn(node: ProtocolNode) -> ProtocolNode:
    """Conjugate by the 180-degree board symmetry (basis reversal on both sides)."""
    return quarter_turn(quarter_turn(node))


def _pd(i: int, j: int) -> PairDiscriminate:
    return PairDiscriminate(i, j)


def _continuation_after_col2_ruled_out() -> ProtocolNode:
    """Cut cascade used once Bob's third column carries no intact pair.

    Alice first splits her 0 subspace from {1, 2} (cutting the 8-9 pair,
    which is either absent or already merged), then free cuts locate the
    remaining dominoes clockwise.
    """
    return povm_node(
        ALICE,
        [(1, 0, 0), (0, 1, 1)],
        [
            _pd(1, 2),
            povm_node(
                BOB,
                [(1, 0, 0), (0, 1, 1)],
                [
                    _pd(5, 6),
                    povm_node(ALICE, [(1, 1, 0), (0, 0, 1)], [Guess(0), _pd(3, 4)]),
                ],
            ),
        ],
    )


def build_domino_cut(excluded: int) -> ProtocolNode:
    """Four-round tree of conditional projective cuts for one excluded member.

    ``excluded`` is the 1-based member number (2..9) whose absence makes the
    cascade exact.  Trees for members other than 4/5 are the quarter-turn
    conjugates of the canonical one; the central member 1 never completes a
    pair, so excluding it enables nothing.
    """
    if excluded == 1:
        raise ValueError("excluding the central member does not enable a projective cascade")
    if not 2 <= excluded <= 9:
        raise ValueError(f"excluded member must lie in 2..9, got {excluded!r}")
    canonical = povm_node(
        BOB,
        [(1, 1, 0), (0, 0, 1)],
        [
            povm_node(
                ALICE,
                [(1, 0, 0), (0, 1, 1)],
                [
                    _pd(1, 2),
                    povm_node(
                        BOB,
                        [(1, 0, 0), (0, 1, 1)],
                        [
                            _pd(5, 6),
                            povm_node(ALICE, [(1, 1, 0), (0, 0, 1)], [Guess(0), _pd(3, 4)]),
                        ],
                    ),
                ],
            ),
            povm_node(ALICE, [(1, 1, 0), (0, 0, 1)], [_pd(7, 8), _pd(3, 4)]),
        ],
    )
    turns = {4: 0, 5: 0, 6: 1, 7: 1, 2: 2, 3: 2, 8: 3, 9: 3}[excluded]
    tree = canonical
    for _ in range(turns):
        tree = quarter_turn(tree)
    return tree


def build_symmetric() -> ProtocolNode:
    """Opening POVM {1, 1/2, 0} vs {0, 1/2, 1} on Bob, then free cuts.

    Each opening outcome empties one of Bob's outer columns, so the cascade
    afterwards never damages an intact pair; the two pairs bruised by the
    opening finish in optimal two-state leaves.
    """
    first = _continuation_after_col2_ruled_out()
    return povm_node(BOB, [(1, 0.5, 0), (0, 0.5, 1)], [first, half_turn(first)])


def _single_p_continuation() -> ProtocolNode:
    """Cascade for the gentle opening: the 8-9 pair stays alive, so the cuts
    that merge it are followed by rounds that still separate it from the rest.
    """
    return povm_node(
        ALICE,
        [(1, 0, 0), (0, 1, 1)],
        [
            povm_node(BOB, [(1, 1, 0), (0, 0, 1)], [_pd(1, 2), _pd(7, 8)]),
            povm_node(
                BOB,
                [(1, 0, 0), (0, 1, 1)],
                [
                    _pd(5, 6),
                    povm_node(
                        ALICE,
                        [(1, 1, 0), (0, 0, 1)],
                        [
                            povm_node(BOB, [(1, 1, 0), (0, 0, 1)], [Guess(0), _pd(7, 8)]),
                            _pd(3, 4),
                        ],
                    ),
                ],
            ),
        ],
    )


def build_single_p(p: float) -> ProtocolNode:
    """One-parameter opening {p, 1/2, 1-p} vs {1-p, 1/2, p} on Bob."""
    p = float(p)
    if not 0.5 < p < 1.0:
        raise ValueError(f"opening parameter must satisfy 1/2 < p < 1, got {p}")
    cont = _single_p_continuation()
    return povm_node(BOB, [(p, 0.5, 1 - p), (1 - p, 0.5, p)], [cont, half_turn(cont)])


def _five_param_branch(p: float, q: float, r: float, s: float, t: float) -> ProtocolNode:
    """Subtree after Bob's first outcome of the five-parameter strategy.

    Alice either annihilates her 0 subspace (collapsing the 8-9 pair) or
    attenuates {1, 2}; in the latter case Bob either kills his 2 subspace
    (collapsing 4-5) or attenuates, after which Alice firmly cuts 6-7.
    Every branch ends in the free locating cascade.
    """
    after_89_cut = povm_node(
        BOB,
        [(1, 0, 0), (0, 1, 1)],
        [
            _pd(5, 6),
            povm_node(
                ALICE,
                [(1, 1, 0), (0, 0, 1)],
                [
                    povm_node(BOB, [(1, 1, 0), (0, 0, 1)], [Guess(0), _pd(7, 8)]),
                    _pd(3, 4),
                ],
            ),
        ],
    )
    after_45_cut = _continuation_after_col2_ruled_out()
    after_67_cut_upper = povm_node(
        BOB,
        [(1, 1, 0), (0, 0, 1)],
        [
            povm_node(
                ALICE,
                [(1, 0, 0), (0, 1, 1)],
                [
                    _pd(1, 2),
                    povm_node(BOB, [(1, 0, 0), (0, 1, 1)], [_pd(5, 6), Guess(0)]),
                ],
            ),
            _pd(7, 8),
        ],
    )
    after_67_cut_lower = povm_node(BOB, [(1, 0, 0), (0, 1, 1)], [_pd(5, 6), _pd(3, 4)])
    return povm_node(
        ALICE,
        [(0, 1 - q, 1 - r), (1, q, r)],
        [
            after_89_cut,
            povm_node(
                BOB,
                [(1 - s, 1 - t, 0), (s, t, 1)],
                [
                    after_45_cut,
                    povm_node(
                        ALICE,
                        [(1, 1, 0), (0, 0, 1)],
                        [after_67_cut_upper, after_67_cut_lower],
                    ),
                ],
            ),
        ],
    )


def build_five_param(p: float, q: float, r: float, s: float, t: float) -> ProtocolNode:
    """Five-parameter strategy that delays the first firm cut to round four."""
    params = tuple(float(x) for x in (p, q, r, s, t))
    p, q, r, s, t = params
    if not 0.5 < p < 1.0:
        raise ValueError(f"p must satisfy 1/2 < p < 1, got {p}")
    for name, value in zip("qrst", (q, r, s, t)):
        if not 0.0 < value < 1.0:
            raise ValueError(f"{name} must lie in (0, 1), got {value}")
    branch = _five_param_branch(p, q, r, s, t)
    return povm_node(
        BOB,
        [(p, 0.5, 1 - p), (1 - p, 0.5, p)],
        [branch, half_turn(branch)],
    )


@dataclass(frozen=True)
class StrategyFamily:
    """A named strategy with a fixed-size parameter box and a tree builder."""

    name: str
    param_count: int
    bounds: tuple[tuple[float, float], ...]
    build: Callable[..., ProtocolNode]


#: Margin keeping optimizer iterates inside the open parameter boxes.
BOX_MARGIN = 1e-6

FAMILIES: dict[str, StrategyFamily] = {
    "domino-cut": StrategyFamily("domino-cut", 0, (), lambda: build_domino_cut(4)),
    "symmetric": StrategyFamily("symmetric", 0, (), build_symmetric),
    "single-p": StrategyFamily("single-p", 1, ((0.5, 1.0),), build_single_p),
    "five-param": StrategyFamily(
        "five-param",
        5,
        ((0.5, 1.0), (0.0, 1.0), (0.0, 1.0), (0.0, 1.0), (0.0, 1.0)),
        build_five_param,
    ),
}

#: Published reference point for the five-parameter family.
FIVE_PARAM_REFERENCE = (0.726, 0.395, 0.312, 0.071, 0.104)


def evaluate(family: StrategyFamily, params=(), ensemble: ProductEnsemble | None = None):
    """Build the family's tree at the given parameters and run it exactly."""
    e = build_nine_states() if ensemble is None else ensemble
    tree = family.build(*params)
    return run_protocol(tree, e)


@dataclass(frozen=True)
class OptimizeResult:
    family: str
    params: tuple[float, ...]
    mutual_information: float
    starts: int
    seed: int


def optimize(
    family: StrategyFamily,
    ensemble: ProductEnsemble | None = None,
    seed: int = 0,
    starts: int = 20,
) -> OptimizeResult:
    """Multi-start simplex descent over the family's parameter box.

    Quasi-random starts feed a coarse Nelder-Mead pass; the best point gets a
    tight polishing pass.  Deterministic for a fixed seed.
    """
    e = build_nine_states() if ensemble is None else ensemble
    if family.param_count == 0:
        run = run_protocol(family.build(), e)
        return OptimizeResult(family.name, (), run.mutual_information(), 0, seed)

    lo = np.array([b[0] + BOX_MARGIN for b in family.bounds])
    hi = np.array([b[1] - BOX_MARGIN for b in family.bounds])
    box = sciopt.Bounds(lo, hi)

    def objective(x: np.ndarray) -> float:
        x = np.clip(x, lo, hi)
        return -run_protocol(family.build(*x), e, validate=False).mutual_information()

    sampler = qmc.Sobol(d=family.param_count, scramble=True, seed=seed)
    with warnings.catch_warnings():
        # Start points need diversity, not the balance of a full 2^m block.
        warnings.simplefilter("ignore", UserWarning)
        points = lo + sampler.random(starts) * (hi - lo)

    best_x, best_f = None, np.inf
    for x0 in points:
        res = sciopt.minimize(
            objective,
            x0,
            method="Nelder-Mead",
            bounds=box,
            options={"xatol": 1e-4, "fatol": 1e-7, "maxfev": 400},
        )
        if res.fun < best_f:
            best_x, best_f = res.x, res.fun
    polished = sciopt.minimize(
        objective,
        best_x,
        method="Nelder-Mead",
        bounds=box,
        options={"xatol": 1e-9, "fatol": 1e-12, "maxfev": 4000},
    )
    if polished.fun < best_f:
        best_x, best_f = polished.x, polished.fun
    best_x = np.clip(best_x, lo, hi)
    return OptimizeResult(family.name, tuple(float(v) for v in best_x), -best_f, starts, seed)
