"""Upper-bound pipeline for the information deficit of two-stage local protocols.

The pipeline links the stage-I posterior departure ``epsilon`` to a minimum
residual nonorthogonality ``delta`` and converts that into a deficit, in
bits, below the entropy of the nine-state ensemble.  A companion verifier
checks the matrix-element inequalities the link rests on against sampled
positive pairs, and a small constraint solver reproduces the three-party
rigidity argument: exact residual orthogonality forces every local operator
to be proportional to the identity.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .ensembles import build_eight_states_three_party, build_nine_states
from .infotheory import binary_entropy
from .linalg import dagger, is_psd, kron

#: Stage-I departure must stay below this for every posterior to stay positive.
EPSILON_MAX = 1.0 / 72.0


class DomainError(ValueError):
    """Argument outside the pipeline's validity region."""


def _check_epsilon(epsilon: float) -> float:
    epsilon = float(epsilon)
    if not 0.0 < epsilon < EPSILON_MAX:
        raise DomainError(f"epsilon must lie in (0, 1/72), got {epsilon}")
    return epsilon


def z_factor(epsilon: float) -> float:
    """Off-diagonal leverage factor (2 + 18 eps) / (2 - 63 eps)."""
    epsilon = _check_epsilon(epsilon)
    return (2.0 + 18.0 * epsilon) / (2.0 - 63.0 * epsilon)


def spread_rhs(epsilon: float) -> float:
    """Guaranteed diagonal-ratio floor sqrt((8 + 72 eps) / (8 - 9 eps))."""
    epsilon = _check_epsilon(epsilon)
    return float(np.sqrt((8.0 + 72.0 * epsilon) / (8.0 - 9.0 * epsilon)))


def nu_epsilon(epsilon: float, delta: float) -> float:
    """Largest off-diagonal-to-diagonal ratio consistent with overlap delta."""
    delta = float(delta)
    if not 0.0 <= delta < 1.0:
        raise DomainError(f"delta must lie in [0, 1), got {delta}")
    z = z_factor(epsilon)
    sz = np.sqrt(z)
    return float(
        (2.0 * delta / (1.0 - delta))
        * (sz + 0.25 * (z + 2.0 * sz + 1.0) * np.sqrt((1.0 + delta) / (1.0 - delta)))
    )


def f_epsilon(epsilon: float, delta: float) -> float:
    """Ceiling on any diagonal ratio of a single party's accumulated operator."""
    nu = nu_epsilon(epsilon, delta)
    root = nu * np.sqrt(1.0 - delta * delta)
    if root >= 1.0:
        raise DomainError(
            f"pole crossed: nu * sqrt(1 - delta^2) = {root} >= 1 at delta={delta}"
        )
    return float(((1.0 + delta) / (1.0 - delta)) * (1.0 + root) / (1.0 - root))


def solve_delta(epsilon: float, tol: float = 1e-12) -> float:
    """Smallest residual overlap compatible with a stage-I departure of epsilon.

    Bisection root of ``f_epsilon(delta) == spread_rhs(epsilon)``; the left
    side rises monotonically from 1, so the root is unique.
    """
    epsilon = _check_epsilon(epsilon)
    target = spread_rhs(epsilon)

    def g(delta: float) -> float:
        try:
            return f_epsilon(epsilon, delta) - target
        except DomainError:
            return np.inf

    lo, hi = 0.0, 1e-6
    while g(hi) < 0.0:
        hi *= 2.0
        if hi >= 1.0:
            raise DomainError(f"no overlap below the pole solves the link at eps={epsilon}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if g(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def deficit(epsilon: float) -> float:
    """Deficit in bits: (2/9 - 16 eps) * h(1/2 - sqrt(1 - delta^2)/2)."""
    epsilon = _check_epsilon(epsilon)
    delta = solve_delta(epsilon)
    prefactor = 2.0 / 9.0 - 16.0 * epsilon
    return prefactor * binary_entropy(0.5 - 0.5 * float(np.sqrt(1.0 - delta * delta)))


@dataclass(frozen=True)
class BoundReport:
    """Full record of one point of the deficit pipeline."""

    epsilon: float
    delta: float
    beta: float
    z: float
    nu: float
    deficit: float


def report_at(epsilon: float) -> BoundReport:
    epsilon = _check_epsilon(epsilon)
    delta = solve_delta(epsilon)
    return BoundReport(
        epsilon=epsilon,
        delta=delta,
        beta=1.0 / 9.0 - 8.0 * epsilon,
        z=z_factor(epsilon),
        nu=nu_epsilon(epsilon, delta),
        deficit=deficit(epsilon),
    )


def sweep(grid: int = 50) -> list[BoundReport]:
    """Deficit reports over an interior grid of stage-I departures."""
    if grid < 2:
        raise ValueError("grid needs at least two points")
    eps = (np.arange(grid) + 0.5) / grid * EPSILON_MAX
    return [report_at(float(e)) for e in eps]


def optimize_bound(grid: int = 200, tol: float = 1e-10) -> BoundReport:
    """Maximize the deficit over the open stage-I interval.

    A coarse grid brackets the maximum; golden-section search refines it.
    """
    eps = (np.arange(grid) + 0.5) / grid * EPSILON_MAX
    values = [deficit(float(e)) for e in eps]
    k = int(np.argmax(values))
    lo = float(eps[max(k - 1, 0)])
    hi = float(eps[min(k + 1, grid - 1)])
    phi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c, d = b - phi * (b - a), a + phi * (b - a)
    fc, fd = deficit(c), deficit(d)
    while b - a > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - phi * (b - a)
            fc = deficit(c)
        else:
            a, c, fc = c, d, fd
            d = a + phi * (b - a)
            fd = deficit(d)
    return report_at(0.5 * (a + b))


# ---------------------------------------------------------------------------
# Matrix-element inequality verifier.


@dataclass(frozen=True)
class InequalityResult:
    name: str
    lhs: float
    bound: float
    passed: bool

    @property
    def slack(self) -> float:
        return self.bound - self.lhs


@dataclass(frozen=True)
class ConstraintReport:
    """Outcome of checking one positive pair against all derived inequalities."""

    preconditions_ok: bool
    precondition_notes: tuple[str, ...]
    results: tuple[InequalityResult, ...]

    @property
    def all_passed(self) -> bool:
        return all(r.passed for r in self.results)

    @property
    def min_slack(self) -> float:
        return min(r.slack for r in self.results)


def pair_preconditions(a: np.ndarray, b: np.ndarray, epsilon: float, delta: float):
    """Check positivity, the diagonal-ratio ceiling, and the overlap ceiling.

    Ratios and overlaps are taken over the nine-state catalog with the
    tensor operator a (x) b standing in for a stage-I accumulation.
    """
    epsilon = _check_epsilon(epsilon)
    notes: list[str] = []
    if not is_psd(a):
        notes.append("first operator is not positive semidefinite")
    if not is_psd(b):
        notes.append("second operator is not positive semidefinite")
    states = build_nine_states().joint_vectors()
    op = kron(a, b)
    diag = np.array([float(np.vdot(v, op @ v).real) for v in states])
    if np.any(diag <= 0.0):
        notes.append("some member has zero detection weight")
        return False, tuple(notes)
    ratio_cap = (1.0 + 9.0 * epsilon) / (1.0 - 72.0 * epsilon)
    worst_ratio = float(diag.max() / diag.min())
    if worst_ratio > ratio_cap:
        notes.append(f"diagonal ratio {worst_ratio:.6g} exceeds cap {ratio_cap:.6g}")
    overlaps = np.abs(states.conj() @ op @ states.T) / np.sqrt(np.outer(diag, diag))
    np.fill_diagonal(overlaps, 0.0)
    worst_overlap = float(overlaps.max())
    if worst_overlap > delta:
        notes.append(f"residual overlap {worst_overlap:.6g} exceeds delta {delta:.6g}")
    return not notes, tuple(notes)


def verify_pair_constraints(
    a: np.ndarray, b: np.ndarray, epsilon: float, delta: float
) -> ConstraintReport:
    """Evaluate the derived matrix-element inequalities on a positive pair.

    Preconditions are reported, never raised, so deliberately violating
    inputs can be inspected.
    """
    ok, notes = pair_preconditions(a, b, epsilon, delta)
    kappa = 81.0 * epsilon / (2.0 - 63.0 * epsilon)
    z = z_factor(epsilon)
    off_cap = 0.5 * (z + 2.0 * np.sqrt(z) + 1.0) * delta / (1.0 - delta)
    nu = nu_epsilon(epsilon, delta)
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    results: list[InequalityResult] = []

    def check(name: str, lhs: float, bound: float) -> None:
        lhs, bound = float(lhs), float(bound)
        results.append(InequalityResult(name, lhs, bound, lhs <= bound + 1e-12))

    def real_off(m, i, j):
        return abs(2.0 * m[i, j].real)

    check("re-offdiag b10", real_off(b, 1, 0), kappa * (b[0, 0].real + b[1, 1].real))
    check("re-offdiag b21", real_off(b, 2, 1), kappa * (b[1, 1].real + b[2, 2].real))
    check("re-offdiag a21", real_off(a, 2, 1), kappa * (a[1, 1].real + a[2, 2].real))
    check("re-offdiag a10", real_off(a, 1, 0), kappa * (a[0, 0].real + a[1, 1].real))

    def spread(m, i, j):
        return abs(m[i, i].real - m[j, j].real) / (m[i, i].real + m[j, j].real)

    check("diag-spread b00/b11", spread(b, 0, 1), delta)
    check("diag-spread b11/b22", spread(b, 1, 2), delta)
    check("diag-spread a11/a22", spread(a, 1, 2), delta)
    check("diag-spread a00/a11", spread(a, 0, 1), delta)

    def corner(m):
        return abs(m[0, 2]) / np.sqrt(m[0, 0].real * m[2, 2].real)

    check("corner a02", corner(a), off_cap)
    check("corner b02", corner(b), off_cap)

    def near(m, i, j):
        return abs(m[i, j]) / np.sqrt(m[i, i].real * m[j, j].real)

    check("near-offdiag a21", near(a, 2, 1), nu)
    check("near-offdiag b10", near(b, 1, 0), nu)
    check("near-offdiag a01", near(a, 0, 1), nu)
    check("near-offdiag b12", near(b, 1, 2), nu)

    return ConstraintReport(ok, notes, tuple(results))


def sample_constrained_pair(
    rng: np.random.Generator, epsilon: float, delta: float, scale: float | None = None
):
    """One rejection-sampling attempt at a positive pair meeting the preconditions.

    Draws near-identity Hermitian perturbations; returns ``None`` on reject.
    """
    if scale is None:
        scale = 1.2 * delta

    def draw():
        g = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        h = (g + dagger(g)) / 2.0
        h /= max(np.abs(np.linalg.eigvalsh(h)).max(), 1e-12)
        return np.eye(3) + rng.uniform(0.2, 1.0) * scale * h

    a, b = draw(), draw()
    ok, _ = pair_preconditions(a, b, epsilon, delta)
    return (a, b) if ok else None


@dataclass(frozen=True)
class SampledVerification:
    requested: int
    attempts: int
    accepted: int
    failures: int
    min_slack: float


def verify_sampled(
    samples: int,
    epsilon: float,
    delta: float,
    seed: int = 0,
    max_attempts_factor: int = 200,
) -> SampledVerification:
    """Check the inequality set on freshly sampled precondition-passing pairs."""
    rng = np.random.default_rng(seed)
    accepted = failures = attempts = 0
    min_slack = np.inf
    limit = samples * max_attempts_factor
    while accepted < samples and attempts < limit:
        attempts += 1
        pair = sample_constrained_pair(rng, epsilon, delta)
        if pair is None:
            continue
        accepted += 1
        report = verify_pair_constraints(*pair, epsilon, delta)
        min_slack = min(min_slack, report.min_slack)
        if not report.all_passed:
            failures += 1
    if accepted < samples:
        raise RuntimeError(
            f"sampler accepted only {accepted}/{samples} pairs in {attempts} attempts"
        )
    return SampledVerification(samples, attempts, accepted, failures, float(min_slack))


# ---------------------------------------------------------------------------
# Three-party rigidity: exact orthogonality of all residual pairs forces the
# three local operators to be proportional to the identity.

_PAULI_BASIS = (
    np.array([[1, 0], [0, 0]], dtype=np.complex128),   # x0: top diagonal
    np.array([[0, 0], [0, 1]], dtype=np.complex128),   # x1: bottom diagonal
    np.array([[0, 1], [1, 0]], dtype=np.complex128),   # x2: real off-diagonal
    np.array([[0, -1j], [1j, 0]], dtype=np.complex128),  # x3: imaginary off-diagonal
)

#: Real parameter vectors for the 2x2 identity, in the basis above.
_IDENTITY_PARAMS = np.array([1.0, 1.0, 0.0, 0.0])


def _hermitian_from_params(x: Sequence[float]) -> np.ndarray:
    return sum(float(c) * m for c, m in zip(x, _PAULI_BASIS))


def three_party_condition_values(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> dict:
    """All 28 orthogonality conditions <phi_i| a(x)b(x)c |phi_j>, i < j."""
    members = build_eight_states_three_party().members
    ops = (a, b, c)
    values = {}
    for i in range(8):
        for j in range(i + 1, 8):
            v = 1.0 + 0.0j
            for p in range(3):
                v *= complex(np.vdot(members[i].factors[p], ops[p] @ members[j].factors[p]))
            values[(i + 1, j + 1)] = v
    return values


def three_party_max_violation(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> float:
    return max(abs(v) for v in three_party_condition_values(a, b, c).values())


def _factor_functional(bra: np.ndarray, ket: np.ndarray) -> np.ndarray:
    """Complex coefficient row of x -> <bra| X(x) |ket> over the 4 real params."""
    return np.array([complex(np.vdot(bra, m @ ket)) for m in _PAULI_BASIS])


@dataclass(frozen=True, eq=False)
class ForcingStep:
    name: str
    party: str
    constraint_rows: np.ndarray
    forced: str


@dataclass(frozen=True, eq=False)
class RigidityReport:
    steps: tuple[ForcingStep, ...]
    solution_params: dict
    max_identity_deviation: float
    max_condition_residual: float
    spread_bound_ok: bool

    @property
    def proportional_to_identity(self) -> bool:
        return self.max_identity_deviation <= 1e-10


def _rows_from_functional(coeffs: np.ndarray) -> np.ndarray:
    rows = np.vstack([coeffs.real, coeffs.imag])
    keep = [r for r in rows if np.linalg.norm(r) > 1e-14]
    return np.vstack(keep)


def three_party_spread_arithmetic_ok(grid: int = 200) -> bool:
    """(7 + 56 eps) / (7 - 8 eps) <= (1 + 8 eps) / (1 - 56 eps) on (0, 1/56)."""
    eps = (np.arange(grid) + 0.5) / grid * (1.0 / 56.0)
    lower = (7.0 + 56.0 * eps) / (7.0 - 8.0 * eps)
    upper = (1.0 + 8.0 * eps) / (1.0 - 56.0 * eps)
    return bool(np.all(lower <= upper + 1e-12))


def three_party_rigidity() -> RigidityReport:
    """Solve the 28 exact orthogonality conditions for Hermitian 2x2 operators.

    Positive diagonals are assumed throughout (they are guaranteed whenever
    every member keeps nonzero posterior weight).  The solver walks the
    product structure: conditions inside one dumbbell leave two parties'
    factors strictly positive and force the third party's form to vanish;
    each cross-dumbbell block then kills one remaining off-diagonal, since
    keeping it nonzero would need every spectator factor in the block to
    vanish, contradicting the positive diagonals.  The accumulated linear
    constraints leave exactly the multiples of the identity.
    """
    members = build_eight_states_three_party().members

    def functional(party: int, j: int, i: int) -> np.ndarray:
        return _factor_functional(members[j - 1].factors[party], members[i - 1].factors[party])

    steps: list[ForcingStep] = []
    rows = {0: [], 1: [], 2: []}

    # Within-dumbbell pairs: the two spectator factors are strictly positive
    # diagonal entries, so the superposed party's form must vanish.
    for name, party, (i, j) in (
        ("within-dumbbell (3,4)", 0, (3, 4)),
        ("within-dumbbell (5,6)", 2, (5, 6)),
        ("within-dumbbell (7,8)", 1, (7, 8)),
    ):
        coeffs = functional(party, j, i)
        extracted = _rows_from_functional(coeffs)
        rows[party].append(extracted)
        steps.append(
            ForcingStep(name, "abc"[party], extracted, "equal diagonals, real off-diagonal")
        )

    # Cross-dumbbell blocks: in every condition of the block the target party
    # contributes one and the same off-diagonal functional.  Were it nonzero,
    # all the spectator factors in the block would have to vanish, and that
    # (together with what is already forced) would kill a strictly positive
    # diagonal entry.  Hence the target functional itself must vanish.
    def _nullspace(stack: np.ndarray) -> np.ndarray:
        _, sing, vt = np.linalg.svd(stack)
        return vt[np.sum(sing > 1e-12):]

    def cross_block(name: str, pair1, pair2, target_party: int) -> None:
        target_funcs = [functional(target_party, j, i) for i in pair1 for j in pair2]
        base = target_funcs[0]
        for f in target_funcs[1:]:
            projected = (np.vdot(base, f) / np.vdot(base, base)) * base
            if np.linalg.norm(f - projected) > 1e-12:
                raise AssertionError(f"{name}: block target factors are not one functional")
        for spectator in sorted({0, 1, 2} - {target_party}):
            vanish_rows = [
                _rows_from_functional(functional(spectator, j, i))
                for i in pair1
                for j in pair2
            ]
            stack = np.vstack(rows[spectator] + vanish_rows)
            null = _nullspace(stack)
            diag_killed = null.shape[0] == 0 or any(
                np.all(np.abs(null[:, d]) <= 1e-12) for d in (0, 1)
            )
            if not diag_killed:
                raise AssertionError(
                    f"{name}: spectator {'abc'[spectator]} factors could all vanish "
                    "without killing a positive diagonal"
                )
        extracted = _rows_from_functional(base)
        rows[target_party].append(extracted)
        steps.append(ForcingStep(name, "abc"[target_party], extracted, "off-diagonal vanishes"))

    cross_block("cross-dumbbell (3,4)x(5,6)", (3, 4), (5, 6), 1)
    cross_block("cross-dumbbell (3,4)x(7,8)", (3, 4), (7, 8), 2)
    cross_block("cross-dumbbell (5,6)x(7,8)", (5, 6), (7, 8), 0)

    solution_params = {}
    deviation = 0.0
    for party, label in enumerate("abc"):
        system = np.vstack(rows[party])
        _, sing, vt = np.linalg.svd(system)
        null = vt[np.sum(sing > 1e-12):]
        if null.shape[0] != 1:
            raise AssertionError(
                f"operator {label}: expected a one-dimensional solution space, got {null.shape[0]}"
            )
        direction = null[0]
        direction = direction / direction[:2].sum() * 2.0
        solution_params[label] = direction
        deviation = max(deviation, float(np.max(np.abs(direction - _IDENTITY_PARAMS))))

    ops = [_hermitian_from_params(solution_params[l]) for l in "abc"]
    residual = three_party_max_violation(*ops)
    return RigidityReport(
        steps=tuple(steps),
        solution_params=solution_params,
        max_identity_deviation=deviation,
        max_condition_residual=float(residual),
        spread_bound_ok=three_party_spread_arithmetic_ok(),
    )
