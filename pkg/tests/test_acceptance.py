"""Acceptance criteria, one test per criterion.

Each test enforces its stated tolerances and runtime budget and prints one
PASS line on success (run with ``pytest -s`` to see them as they happen).
Criterion 11 replays every criterion's CLI command twice and compares bytes.
"""

import time

import numpy as np
import pytest
from click.testing import CliRunner

from locclab import analysis, bound, weakmeas
from locclab.cli import main as cli_main
from locclab.ensembles import (
    build_eight_states_three_party,
    build_nine_states,
    subset,
)
from locclab.protocol import emit_tree, run_protocol
from locclab.strategies import (
    FAMILIES,
    FIVE_PARAM_REFERENCE,
    build_domino_cut,
    build_symmetric,
    optimize,
)

LOG2_9 = float(np.log2(9))


def _report(number: int, elapsed: float, detail: str) -> None:
    print(f"ACCEPTANCE {number:02d} PASS ({elapsed:.2f}s) {detail}")


def test_criterion_01_orthonormality():
    start = time.time()
    nine = build_nine_states()
    worst = float(np.max(np.abs(nine.gram() - np.eye(9))))
    grid = (np.arange(5) + 0.5) / 5 * (np.pi / 2)
    for t23 in grid:
        for t45 in grid:
            for t67 in grid:
                for t89 in grid:
                    g = build_nine_states(t23, t45, t67, t89).gram()
                    worst = max(worst, float(np.max(np.abs(g - np.eye(9)))))
    eight = build_eight_states_three_party()
    worst = max(worst, float(np.max(np.abs(eight.gram() - np.eye(8)))))
    elapsed = time.time() - start
    assert worst <= 1e-10
    assert elapsed < 1.0
    _report(1, elapsed, f"max gram defect {worst:.2e} over 627 catalogs")


def test_criterion_02_mutual_information_ladder():
    start = time.time()
    nine = build_nine_states()
    domino = run_protocol(build_domino_cut(4), nine).mutual_information()
    assert domino == pytest.approx(LOG2_9 - 2 / 9, abs=1e-6)
    assert domino == pytest.approx(2.947703, abs=1e-6)
    symmetric = run_protocol(build_symmetric(), nine).mutual_information()
    assert symmetric == pytest.approx(2.9964, abs=5e-4)
    single = optimize(FAMILIES["single-p"], seed=0)
    assert single.mutual_information == pytest.approx(3.009, abs=1e-3)
    five = optimize(FAMILIES["five-param"], seed=0)
    assert five.mutual_information == pytest.approx(3.0125, abs=1e-3)
    reference = run_protocol(
        FAMILIES["five-param"].build(*FIVE_PARAM_REFERENCE), nine
    ).mutual_information()
    assert five.mutual_information >= reference - 1e-6
    assert domino < symmetric < single.mutual_information < five.mutual_information
    elapsed = time.time() - start
    assert elapsed < 60.0
    _report(
        2,
        elapsed,
        f"ladder {domino:.6f} < {symmetric:.6f} < "
        f"{single.mutual_information:.6f} < {five.mutual_information:.6f}",
    )


def test_criterion_03_perfect_measurement_without_psi4():
    start = time.time()
    nine = build_nine_states()
    eight = subset(nine, [0, 1, 2, 4, 5, 6, 7, 8])
    run = run_protocol(build_domino_cut(4), eight)
    mi = run.mutual_information()
    worst_overlap = max(l.max_overlap for l in run.leaves)
    assert mi == pytest.approx(3.0, abs=1e-9)
    assert worst_overlap <= 1e-10
    elapsed = time.time() - start
    _report(3, elapsed, f"I = {mi:.12f} bits, max leaf overlap {worst_overlap:.2e}")


def test_criterion_04_bound_pipeline():
    start = time.time()
    rep = bound.optimize_bound()
    assert rep.deficit == pytest.approx(5.31e-6, rel=0.02)
    assert rep.epsilon == pytest.approx(0.00823, abs=5e-4)
    assert rep.delta == pytest.approx(0.00344, abs=5e-5)
    assert rep.beta == pytest.approx(0.0453, abs=5e-4)
    for k in range(50):
        eps = (k + 0.5) / 50 * bound.EPSILON_MAX
        delta = bound.solve_delta(eps)
        assert abs(bound.f_epsilon(eps, delta) - bound.spread_rhs(eps)) <= 1e-10
    elapsed = time.time() - start
    assert elapsed < 5.0
    _report(
        4,
        elapsed,
        f"deficit {rep.deficit:.3e} at eps {rep.epsilon:.5f}, "
        f"delta {rep.delta:.5f}, beta {rep.beta:.5f}; 50-point round trip ok",
    )


def test_criterion_05_inequality_soundness():
    start = time.time()
    sv = bound.verify_sampled(500, epsilon=0.005, delta=0.05, seed=0)
    assert sv.accepted == 500
    assert sv.failures == 0
    elapsed = time.time() - start
    assert elapsed < 30.0
    _report(
        5,
        elapsed,
        f"500 sampled pairs, 0 violations, min slack {sv.min_slack:.4f} "
        f"({sv.attempts} attempts)",
    )


def test_criterion_06_three_party_rigidity():
    start = time.time()
    rep = bound.three_party_rigidity()
    assert rep.max_identity_deviation <= 1e-10
    assert rep.proportional_to_identity
    perturbed = np.eye(2, dtype=complex)
    perturbed[0, 1] = perturbed[1, 0] = 0.1
    violation = bound.three_party_max_violation(perturbed, np.eye(2), np.eye(2))
    assert violation >= 1e-3
    elapsed = time.time() - start
    _report(
        6,
        elapsed,
        f"identity deviation {rep.max_identity_deviation:.2e}, "
        f"perturbation residual {violation:.4f}",
    )


def test_criterion_07_dissectibility():
    start = time.time()
    nine = build_nine_states()
    assert analysis.is_dissectible(subset(nine, [1, 5, 7]))[0] is True
    assert analysis.is_dissectible(subset(nine, [1, 3, 5, 7]))[0] is False
    rng = np.random.default_rng(0)
    flat = build_nine_states(0.0, 0.0, 0.0, 0.0)
    bases = [
        (flat, list(range(9))),
        (nine, [1, 5, 7]),
        (nine, [1, 3, 5]),
    ]
    checked = 0
    while checked < 100:
        ensemble, base = bases[checked % len(bases)]
        size = int(rng.integers(1, len(base) + 1))
        pick = sorted(rng.choice(len(base), size=size, replace=False))
        ok, _ = analysis.is_dissectible(subset(subset(ensemble, base), pick))
        assert ok, (base, pick)
        checked += 1
    elapsed = time.time() - start
    _report(7, elapsed, "268 dissectible, 2468 not; hereditary on 100 sampled subsets")


def test_criterion_08_entropy_and_advice_accounting():
    start = time.time()
    printed = {
        "nine": (0.764, 2.283, 0.0, 1.142, 0.1575),
        "2468": (0.811, 0.250, 0.0, 0.0, 0.0),
        "246": (0.0, 0.0, 0.0, 0.0, 0.0),
        "4-Bell": (2.0, 2.0, 1.0, 1.0, 1.0),
        "2-Bell": (1.0, 1.0, 1.0, 0.0, 0.0),
    }
    rows = {r.ensemble: r for r in analysis.entropy_table()}
    for name, cells in printed.items():
        row = rows[name]
        computed = (
            row.entropy_prep,
            row.entropy_meas,
            row.entanglement_prep,
            row.entanglement_meas,
            row.advice_meas,
        )
        for got, want in zip(computed, cells):
            # two-decimal agreement; covers the 2.281/2.283 and 1.1405/1.142
            # published-digit discrepancies
            assert round(got, 2) == round(want, 2), (name, got, want)
    plan8 = analysis.advice_cost(np.full(8, 1 / 8), range(8))
    assert plan8.cost == pytest.approx(np.log2(8 / 7), abs=1e-12)
    assert plan8.cost == pytest.approx(0.19265, abs=1e-5)
    plan9 = analysis.advice_cost(np.full(9, 1 / 9), range(1, 9))
    assert plan9.cost == pytest.approx(8 / 9 * np.log2(8 / 7), abs=1e-12)
    assert plan9.cost == pytest.approx(0.17124, abs=1e-5)
    nine = build_nine_states()
    eight = subset(nine, [0, 1, 2, 4, 5, 6, 7, 8])
    me8 = analysis.measurement_entropy(build_domino_cut(4), eight)
    assert me8 == pytest.approx(1 / 8, abs=1e-12)
    from test_analysis import _tree_2468

    me4 = analysis.measurement_entropy(_tree_2468(), subset(nine, [1, 3, 5, 7]))
    assert me4 == pytest.approx(1 / 4, abs=1e-12)
    elapsed = time.time() - start
    _report(
        8,
        elapsed,
        f"table cells at 2 decimals; advice {plan8.cost:.5f}/{plan9.cost:.5f}; "
        f"measurement entropies {me8:.3f}/{me4:.3f}",
    )


def test_criterion_09_quantum_cost():
    start = time.time()
    eight = analysis.quantum_cost("eight")
    assert eight.qubits == pytest.approx(1.204434, abs=1e-5)
    assert eight.ship_baseline == pytest.approx(11 / 4 - np.log2(3), abs=1e-12)
    assert eight.ship_baseline == pytest.approx(1.165037, abs=1e-5)
    nine = analysis.quantum_cost("nine")
    assert nine.qubits == pytest.approx(1.140518, abs=1e-5)
    # the formula value, explicitly not the 1.14152 sometimes printed for it
    assert abs(nine.qubits - 1.14152) > 5e-4
    elapsed = time.time() - start
    _report(
        9,
        elapsed,
        f"eight {eight.qubits:.6f} (baseline {eight.ship_baseline:.6f}), "
        f"nine {nine.qubits:.6f}",
    )


def test_criterion_10_weak_measurement_suite():
    start = time.time()
    for eps, reps in ((0.1, 101), (0.05, 1001)):
        for alpha0_sq in (1.0, 0.7):
            scheme = weakmeas.WeakScheme(eps, reps, seed=0)
            em = weakmeas.majority_frequency(alpha0_sq, scheme, 100_000)
            assert abs(em.majority0_frequency - em.closed_form_majority0) <= max(
                3 * em.sigma(), 1e-9
            ), (eps, reps, alpha0_sq)
    for eps in (0.05, 0.1, 0.2, 0.4, 0.7):
        k_min = int(np.ceil(8.0 / np.sin(2 * eps) ** 2)) | 1
        for reps in (k_min, 2 * k_min + 1, 4 * k_min + 1):
            shortfall = 1.0 - weakmeas.majority_success(1.0, eps, reps)
            assert shortfall <= weakmeas.bernstein_bound(eps, reps)
    amplitudes = np.sqrt(np.linspace(0.0, 1.0, 21))
    for eps in (0.001, 0.01, 0.05, 0.1):
        for a0 in amplitudes:
            a1 = np.sqrt(max(0.0, 1.0 - a0**2))
            for outcome in (0, 1):
                with np.errstate(invalid="ignore"):
                    try:
                        f = weakmeas.residual_fidelity(a0, a1, eps, outcome)
                    except ValueError:
                        continue  # zero-probability outcome on an eigenstate
                assert f >= 1.0 - 2.0 * eps * eps
    elapsed = time.time() - start
    assert elapsed < 60.0
    _report(10, elapsed, "closed form within 3 sigma; envelope and fidelity floors hold")


CRITERION_COMMANDS = {
    1: [
        ["ensembles", "show", "nine"],
        ["ensembles", "show", "nine-rotated", "--thetas", "0.55,0.3,1.1,0.9"],
        ["ensembles", "show", "three-party-8"],
    ],
    2: [
        ["strategy", "build", "domino-cut"],
        ["strategy", "build", "symmetric"],
        ["strategy", "optimize", "single-p", "--seed", "0"],
        ["strategy", "optimize", "five-param", "--seed", "0"],
    ],
    3: [["protocol", "run", "--tree", "TREEFILE", "--keep", "0,1,2,4,5,6,7,8"]],
    4: [["bound", "optimize"], ["bound", "sweep", "--epsilon-grid", "50"]],
    5: [["bound", "verify", "--samples", "500", "--epsilon", "0.005", "--delta", "0.05", "--seed", "0"]],
    6: [["bound", "three-party"]],
    7: [
        ["analyze", "dissect", "nine", "--keep", "1,5,7"],
        ["analyze", "dissect", "2468"],
    ],
    8: [
        ["analyze", "table"],
        ["analyze", "advice", "--priors", "0.125,0.125,0.125,0.125,0.125,0.125,0.125,0.125"],
    ],
    9: [["analyze", "qcost", "eight"], ["analyze", "qcost", "nine"]],
    10: [
        ["weak", "simulate", "--alpha0", "1.0", "--epsilon", "0.1",
         "--repetitions", "101", "--runs", "100000", "--seed", "0"],
        ["weak", "simulate", "--alpha0", "1.0", "--epsilon", "0.05",
         "--repetitions", "1001", "--runs", "100000", "--seed", "0"],
    ],
}


def test_criterion_11_reproducibility(tmp_path):
    start = time.time()
    tree_file = tmp_path / "domino.tree"
    tree_file.write_text(emit_tree(build_domino_cut(4)))
    runner = CliRunner()
    commands = 0
    for criterion in sorted(CRITERION_COMMANDS):
        for template in CRITERION_COMMANDS[criterion]:
            args = [str(tree_file) if a == "TREEFILE" else a for a in template]
            first = runner.invoke(cli_main, args, catch_exceptions=False)
            second = runner.invoke(cli_main, args, catch_exceptions=False)
            assert first.exit_code == 0, (criterion, args, first.output)
            assert second.exit_code == 0
            assert first.output == second.output, (criterion, args)
            commands += 1
    elapsed = time.time() - start
    _report(11, elapsed, f"{commands} commands byte-identical across repeat runs")
