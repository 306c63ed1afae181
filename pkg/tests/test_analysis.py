import numpy as np
import pytest

from locclab import analysis
from locclab.analysis import (
    SplitLeaf,
    SplitNode,
    advice_cost,
    entropy_table,
    is_dissectible,
    measurement_entropy,
    quantum_cost,
    splitting_protocol,
)
from locclab.ensembles import build_nine_states, subset
from locclab.infotheory import binary_entropy
from locclab.protocol import Guess, povm_node, run_protocol
from locclab.strategies import ALICE, BOB, build_domino_cut


def positions(nine, labels):
    return [list(nine.labels).index(l) for l in labels]


def test_dissectible_268(nine):
    ok, tree = is_dissectible(subset(nine, positions(nine, ["psi2", "psi6", "psi8"])))
    assert ok
    assert isinstance(tree, SplitNode)


def test_not_dissectible_2468(nine):
    ok, tree = is_dissectible(subset(nine, positions(nine, ["psi2", "psi4", "psi6", "psi8"])))
    assert not ok
    assert tree is None


def test_dissectible_singleton(nine):
    ok, tree = is_dissectible(subset(nine, [0]))
    assert ok
    assert isinstance(tree, SplitLeaf)


def test_dissectible_246(nine):
    assert is_dissectible(subset(nine, positions(nine, ["psi2", "psi4", "psi6"])))[0]


def test_full_nine_not_dissectible(nine):
    assert not is_dissectible(nine)[0]


def test_dissectible_rejects_empty(nine):
    with pytest.raises(ValueError):
        is_dissectible(nine, [])


def test_dissectibility_hereditary(nine, rng):
    # every subset of a dissectible set is dissectible
    flat = __import__("locclab.ensembles", fromlist=["build_nine_states"]).build_nine_states(
        0.0, 0.0, 0.0, 0.0
    )
    seeds = [
        (flat, list(range(9))),
        (nine, positions(nine, ["psi2", "psi6", "psi8"])),
        (nine, positions(nine, ["psi2", "psi4", "psi6"])),
    ]
    checked = 0
    for index, (ensemble, base) in enumerate(seeds):
        assert is_dissectible(subset(ensemble, base))[0]
        while checked < 100 * (index + 1) / len(seeds):
            size = int(rng.integers(1, len(base) + 1))
            pick = sorted(rng.choice(len(base), size=size, replace=False))
            sub = subset(subset(ensemble, base), pick)
            assert is_dissectible(sub)[0]
            checked += 1
    assert checked >= 100


def test_splitting_protocol_identifies_and_is_silent(nine):
    members = positions(nine, ["psi2", "psi4", "psi6"])
    sub = subset(nine, members)
    ok, tree = is_dissectible(sub)
    assert ok
    protocol = splitting_protocol(tree, sub)
    run = run_protocol(protocol, sub)
    assert run.mutual_information() == pytest.approx(np.log2(3), abs=1e-10)
    assert measurement_entropy(protocol, sub) == pytest.approx(0.0, abs=1e-12)


def test_advice_uniform_eight():
    plan = advice_cost(np.full(8, 1 / 8), range(8))
    assert plan.cost == pytest.approx(np.log2(8 / 7), abs=1e-12)
    assert plan.cost == pytest.approx(0.19265, abs=1e-5)
    assert np.allclose(plan.q[list(plan.hintable)], 1 / 8)


def test_advice_nine_states_excluding_center():
    plan = advice_cost(np.full(9, 1 / 9), range(1, 9))
    assert plan.cost == pytest.approx(8 / 9 * np.log2(8 / 7), abs=1e-12)
    assert plan.cost == pytest.approx(0.17124, abs=1e-5)
    assert plan.q[0] == 0.0


def test_advice_clamped_water_filling():
    plan = advice_cost([0.5, 0.25, 0.25], [0, 1, 2])
    assert np.allclose(plan.q, [0.0, 0.5, 0.5])
    assert plan.cost == pytest.approx(0.5, abs=1e-12)


def test_advice_grid_oracle():
    # brute-force the simplex at resolution 1e-3 (steps of the first two
    # coordinates) and compare with the closed-form optimum
    p = np.array([0.5, 0.25, 0.25])
    best = np.inf
    grid = np.arange(0.0, 1.0 + 1e-12, 1e-3)
    for q0 in grid:
        remaining = 1.0 - q0
        q1 = np.arange(0.0, remaining + 1e-12, 1e-3)
        q2 = remaining - q1
        with np.errstate(divide="ignore"):
            cost = -(
                p[0] * np.log2(1 - q0)
                + p[1] * np.log2(1 - q1)
                + p[2] * np.log2(np.clip(1 - q2, 1e-300, None))
            )
        best = min(best, float(np.min(cost)))
    plan = advice_cost(p, [0, 1, 2])
    assert plan.cost <= best + 1e-6


def test_advice_local_optimality_certificate(rng):
    p = np.array([0.4, 0.3, 0.2, 0.1])
    plan = advice_cost(p, range(4))
    for _ in range(1000):
        q = rng.dirichlet(np.ones(4))
        with np.errstate(divide="ignore"):
            cost = -float(np.sum(p * np.log2(np.clip(1 - q, 1e-300, None))))
        assert plan.cost <= cost + 1e-12


def test_advice_uniform_n_closed_form(rng):
    for n in (2, 3, 5, 8):
        p = np.full(n, 1 / n)
        plan = advice_cost(p, range(n))
        assert plan.cost == pytest.approx(np.log2(n / (n - 1)), abs=1e-12)
        assert np.allclose(plan.q[: n], 1 / n)


def test_advice_infeasible_single_hint():
    with pytest.raises(ValueError):
        advice_cost([0.6, 0.4], [0])


def test_advice_errors():
    with pytest.raises(ValueError):
        advice_cost([0.5, 0.5], [])
    with pytest.raises(ValueError):
        advice_cost([0.5, 0.5], [7])


def test_quantum_cost_eight():
    qc = quantum_cost("eight")
    assert qc.qubits == pytest.approx(binary_entropy(3 / 8) + 0.25, abs=1e-15)
    assert qc.qubits == pytest.approx(1.204434, abs=1e-5)
    assert qc.ship_baseline == pytest.approx(11 / 4 - np.log2(3), abs=1e-12)
    assert qc.ship_baseline == pytest.approx(1.165037, abs=1e-5)


def test_quantum_cost_nine_formula_value():
    qc = quantum_cost("nine")
    assert qc.qubits == pytest.approx(binary_entropy(1 / 3) + 2 / 9, abs=1e-15)
    # formula value; deliberately not the 1.14152 sometimes quoted for it
    assert qc.qubits == pytest.approx(1.140518, abs=1e-5)
    assert abs(qc.qubits - 1.14152) > 5e-4
    assert qc.ship_baseline == pytest.approx(np.log2(3), abs=1e-12)


def test_quantum_cost_rejects_unknown():
    with pytest.raises(ValueError):
        quantum_cost("ten")


def _tree_2468():
    # cut the incomplete 4-5 pair, then locate members without further damage
    return povm_node(
        BOB,
        [(1, 1, 0), (0, 0, 1)],
        [
            povm_node(
                ALICE,
                [(1, 0, 0), (0, 1, 1)],
                [
                    Guess(1),
                    povm_node(BOB, [(1, 0, 0), (0, 1, 1)], [Guess(5), Guess(3)]),
                ],
            ),
            povm_node(ALICE, [(1, 1, 0), (0, 0, 1)], [Guess(7), Guess(3)]),
        ],
    )


def test_measurement_entropy_eight_state(nine):
    eight = subset(nine, [0, 1, 2, 4, 5, 6, 7, 8])
    assert measurement_entropy(build_domino_cut(4), eight) == pytest.approx(1 / 8, abs=1e-12)


def test_measurement_entropy_2468(nine):
    catalog = subset(nine, [1, 3, 5, 7])
    assert measurement_entropy(_tree_2468(), catalog) == pytest.approx(1 / 4, abs=1e-12)


def test_measurement_entropy_rejects_imperfect_protocol(nine):
    with pytest.raises(ValueError):
        measurement_entropy(build_domino_cut(4), nine)


def test_entropy_table_against_printed_cells():
    printed = {
        "nine": (True, False, False, 0.764, 2.283, 0.0, 1.142, 0.1575),
        "2468": (True, True, False, 0.811, 0.250, 0.0, 0.0, 0.0),
        "246": (True, True, True, 0.0, 0.0, 0.0, 0.0, 0.0),
        "4-Bell": (False, False, False, 2.0, 2.0, 1.0, 1.0, 1.0),
        "2-Bell": (False, True, False, 1.0, 1.0, 1.0, 0.0, 0.0),
    }
    rows = {r.ensemble: r for r in entropy_table()}
    assert set(rows) == set(printed)
    for name, (prep, meas, dissect, e_prep, e_meas, ent_prep, ent_meas, advice) in printed.items():
        row = rows[name]
        assert row.locally_preparable == prep
        assert row.locally_measurable == meas
        assert row.dissectible == dissect
        assert row.entropy_prep == pytest.approx(e_prep, abs=5e-3)
        assert row.entropy_meas == pytest.approx(e_meas, abs=5e-3)
        assert row.entanglement_prep == pytest.approx(ent_prep, abs=5e-3)
        assert row.entanglement_meas == pytest.approx(ent_meas, abs=5e-3)
        assert row.advice_meas == pytest.approx(advice, abs=5e-3)


def test_entropy_table_exact_cells():
    rows = {r.ensemble: r for r in entropy_table()}
    assert rows["nine"].entropy_prep == pytest.approx(binary_entropy(2 / 9), abs=1e-12)
    assert rows["2468"].entropy_prep == pytest.approx(binary_entropy(1 / 4), abs=1e-12)
    assert rows["2468"].entropy_prep == pytest.approx(0.811278, abs=1e-6)
    assert rows["nine"].entropy_prep == pytest.approx(0.76420, abs=1e-5)
    assert rows["nine"].advice_meas == pytest.approx(0.1575, abs=1e-12)
    assert rows["nine"].entropy_meas == pytest.approx(2 * rows["nine"].entanglement_meas, abs=1e-12)


def test_table_dissectibility_invariant():
    for row in entropy_table():
        if row.dissectible:
            assert row.entropy_prep == 0.0
            assert row.entropy_meas == 0.0


def test_nine_advice_matches_strategy_deficit():
    from locclab.strategies import FAMILIES, FIVE_PARAM_REFERENCE, evaluate

    run = evaluate(FAMILIES["five-param"], FIVE_PARAM_REFERENCE)
    deficit = np.log2(9) - run.mutual_information()
    assert deficit == pytest.approx(analysis.NINE_STATE_ADVICE_BITS, abs=1e-3)
