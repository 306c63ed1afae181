"""Decomposition of a strong binary measurement into weak probe readouts.

A weak probe pair uses overlap angle ``theta = pi/4 - epsilon``: each
readout gives the right branch with probability ``cos^2(theta)``, barely
better than a coin.  An odd number of repetitions followed by a majority
vote recovers the strong measurement to exponential accuracy while each
individual readout disturbs the state only at order ``epsilon``.

Randomness comes from a counter-based generator, so every simulation is
bit-exact reproducible from its seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import binom

__all__ = [
    "WeakScheme",
    "WeakRunResult",
    "EmpiricalMajority",
    "weak_angle",
    "single_weak_correct_prob",
    "majority_success",
    "bernstein_bound",
    "single_step_posterior",
    "residual_fidelity",
    "simulate_stream",
    "majority_frequency",
]


@dataclass(frozen=True)
class WeakScheme:
    """Weakness parameter, odd repetition count, and generator seed."""

    epsilon: float
    repetitions: int
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.epsilon <= np.pi / 4.0:
            raise ValueError(f"epsilon must lie in (0, pi/4], got {self.epsilon}")
        if self.repetitions < 1 or self.repetitions % 2 == 0:
            raise ValueError(f"repetitions must be odd and positive, got {self.repetitions}")


def weak_angle(epsilon: float) -> float:
    if not 0.0 < epsilon <= np.pi / 4.0:
        raise ValueError(f"epsilon must lie in (0, pi/4], got {epsilon}")
    return np.pi / 4.0 - epsilon


def single_weak_correct_prob(epsilon: float) -> float:
    """cos^2(pi/4 - epsilon) = (1 + sin 2 epsilon) / 2."""
    return float(np.cos(weak_angle(epsilon)) ** 2)


def majority_success(alpha0_sq: float, epsilon: float, repetitions: int) -> float:
    """Probability that the majority vote reads 0.

    ``S``, the chance that a branch's own majority wins, sums the binomial
    terms with at most (K-1)/2 minority readouts; the k = 0 all-correct term
    is included so the two majority sums cover every one of the 2^K vote
    patterns.  The mixture weights are the branch probabilities.
    """
    if not 0.0 <= alpha0_sq <= 1.0:
        raise ValueError(f"branch probability {alpha0_sq} outside [0, 1]")
    if repetitions < 1 or repetitions % 2 == 0:
        raise ValueError(f"repetitions must be odd and positive, got {repetitions}")
    theta = weak_angle(epsilon)
    flip = float(np.sin(theta) ** 2)
    s = float(binom.cdf((repetitions - 1) // 2, repetitions, flip))
    return alpha0_sq * s + (1.0 - alpha0_sq) * (1.0 - s)


def bernstein_bound(epsilon: float, repetitions: int) -> float:
    """Large-deviation envelope 2 exp(-K sin^2(2 epsilon) / 4) for 1 - S."""
    return float(2.0 * np.exp(-repetitions * np.sin(2.0 * epsilon) ** 2 / 4.0))


def single_step_posterior(prior0: float, epsilon: float, outcome: int) -> float:
    """Posterior branch-0 weight after one weak readout."""
    theta = weak_angle(epsilon)
    c2, s2 = np.cos(theta) ** 2, np.sin(theta) ** 2
    like0, like1 = (c2, s2) if outcome == 0 else (s2, c2)
    total = prior0 * like0 + (1.0 - prior0) * like1
    return float(prior0 * like0 / total)


def residual_fidelity(alpha0: complex, alpha1: complex, epsilon: float, outcome: int) -> float:
    """Overlap of the post-readout state with the input, for one weak step."""
    if abs(abs(alpha0) ** 2 + abs(alpha1) ** 2 - 1.0) > 1e-10:
        raise ValueError("input amplitudes must be normalized")
    if epsilon == 0.0:
        return 1.0
    theta = weak_angle(epsilon)
    c, s = np.cos(theta), np.sin(theta)
    w0, w1 = (c, s) if outcome == 0 else (s, c)
    out = np.array([alpha0 * w0, alpha1 * w1])
    norm = np.linalg.norm(out)
    if norm == 0.0:
        raise ValueError("outcome has zero probability on this input")
    reference = np.array([alpha0, alpha1])
    return float(abs(np.vdot(reference, out)) / norm)


@dataclass(frozen=True, eq=False)
class WeakRunResult:
    """One simulated readout stream: votes, their majority, and the residual."""

    votes: np.ndarray
    majority: int
    residual: np.ndarray
    correct: bool


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed))


def simulate_stream(alpha0: complex, alpha1: complex, scheme: WeakScheme) -> WeakRunResult:
    """Sample one full weak-readout stream on ``alpha0|...0> + alpha1|...1>``.

    The probe branch is sampled first with the Born weights; the readouts
    are then independent coins biased ``cos^2 theta`` toward that branch.
    The residual follows the coherent per-outcome update, evaluated in log
    space so long streams cannot underflow.
    """
    p0 = abs(alpha0) ** 2
    if abs(p0 + abs(alpha1) ** 2 - 1.0) > 1e-10:
        raise ValueError("input amplitudes must be normalized")
    rng = _rng(scheme.seed)
    k = scheme.repetitions
    branch = 0 if rng.random() < p0 else 1
    theta = weak_angle(scheme.epsilon)
    hit = rng.random(k) < np.cos(theta) ** 2
    votes = np.where(hit, branch, 1 - branch).astype(np.int8)
    majority = int(votes.sum() * 2 > k)

    n1 = int(votes.sum())
    n0 = k - n1
    # amplitude0 picks up cos per 0-vote and sin per 1-vote; amplitude1 the reverse
    if alpha0 == 0 or (theta == 0.0 and branch == 1):
        residual = np.array([0.0, 1.0], dtype=np.complex128) * (alpha1 / abs(alpha1))
    elif alpha1 == 0 or (theta == 0.0 and branch == 0):
        residual = np.array([1.0, 0.0], dtype=np.complex128) * (alpha0 / abs(alpha0))
    else:
        log_c, log_s = np.log(np.cos(theta)), np.log(np.sin(theta))
        log_ratio = (
            np.log(abs(alpha1) / abs(alpha0)) + (n0 - n1) * (log_s - log_c)
        )
        phase0 = alpha0 / abs(alpha0)
        phase1 = alpha1 / abs(alpha1)
        if log_ratio <= 0.0:
            residual = np.array([phase0, phase1 * np.exp(log_ratio)])
        else:
            residual = np.array([phase0 * np.exp(-log_ratio), phase1])
        residual = residual / np.linalg.norm(residual)
    return WeakRunResult(votes, majority, residual, majority == branch)


@dataclass(frozen=True)
class EmpiricalMajority:
    """Vectorized majority-vote statistics over many independent streams."""

    runs: int
    majority0_frequency: float
    correct_frequency: float
    closed_form_majority0: float
    closed_form_correct: float

    def sigma(self) -> float:
        p = self.closed_form_majority0
        return float(np.sqrt(max(p * (1.0 - p), 1e-300) / self.runs))


def majority_frequency(alpha0_sq: float, scheme: WeakScheme, runs: int) -> EmpiricalMajority:
    """Empirical majority statistics from ``runs`` independent streams.

    Only the per-run count of branch-agreeing readouts matters for the
    majority, so each run draws a branch and one binomial count.
    """
    if runs < 1:
        raise ValueError("need at least one run")
    rng = _rng(scheme.seed)
    theta = weak_angle(scheme.epsilon)
    flip = float(np.sin(theta) ** 2)
    k = scheme.repetitions
    branch0 = rng.random(runs) < alpha0_sq
    flips = rng.binomial(k, flip, size=runs)
    branch_wins = flips <= (k - 1) // 2
    majority0 = np.where(branch0, branch_wins, ~branch_wins)
    theory_s = float(binom.cdf((k - 1) // 2, k, flip))
    return EmpiricalMajority(
        runs=runs,
        majority0_frequency=float(np.mean(majority0)),
        correct_frequency=float(np.mean(branch_wins)),
        closed_form_majority0=majority_success(alpha0_sq, scheme.epsilon, k),
        closed_form_correct=theory_s,
    )
