import numpy as np
import pytest

from locclab.ensembles import build_eight_states_three_party, subset
from locclab.infotheory import shannon_entropy
from locclab.linalg import basis_ket, kron, kron_all
from locclab.protocol import (
    Declare,
    Guess,
    ImpossibleRecordError,
    Internal,
    PairDiscriminate,
    ProtocolError,
    TreeFormatError,
    apply_round,
    emit_tree,
    initial_posterior,
    pair_discriminate_info,
    parse_tree,
    posterior_probs,
    povm_node,
    residual_overlaps,
    run_protocol,
    sqrt_diag_element,
    trees_equal,
    validate_tree,
)
from locclab.strategies import BOB, build_domino_cut, build_symmetric


def bob_element(diag):
    return sqrt_diag_element(BOB, diag, "x")


def test_apply_round_identity_element(nine):
    post = initial_posterior(nine)
    same = apply_round(post, sqrt_diag_element(BOB, (1, 1, 1), "i"))
    assert np.allclose(same.probs, post.probs)
    for a, b in zip(same.factors, post.factors):
        for fa, fb in zip(a, b):
            assert np.allclose(fa, fb)


def test_apply_round_residual_psi4_first_outcome(nine):
    # Bob's {1, 1/2, 0} outcome collapses psi4's side to half of |1>.
    post = apply_round(initial_posterior(nine), bob_element((1, 0.5, 0)))
    residual = post.factors[3]
    joint = kron_all(residual)
    expected = 0.5 * kron(basis_ket(3, 2), basis_ket(3, 1))
    assert np.allclose(joint, expected)
    assert float(np.vdot(joint, joint).real) == pytest.approx(0.25, abs=1e-12)


def test_apply_round_residual_psi4_second_outcome(nine):
    post = apply_round(initial_posterior(nine), bob_element((0, 0.5, 1)))
    joint = kron_all(post.factors[3])
    expected = kron(basis_ket(3, 2), 0.5 * basis_ket(3, 1) + basis_ket(3, 2) / np.sqrt(2))
    assert np.allclose(joint, expected)
    assert float(np.vdot(joint, joint).real) == pytest.approx(0.75, abs=1e-12)


def test_apply_round_dimension_mismatch(nine):
    with pytest.raises(ProtocolError):
        apply_round(initial_posterior(nine), sqrt_diag_element(BOB, (1, 1), "x"))


def test_posterior_invariant_matches_accumulated_operators(nine):
    post = initial_posterior(nine)
    for element in (bob_element((1, 0.5, 0)), sqrt_diag_element(0, (0, 1, 1), "y")):
        post = apply_round(post, element)
    op = kron_all([a.conj().T @ a for a in post.accumulated])
    direct = np.array([np.vdot(v, op @ v).real for v in nine.joint_vectors()])
    direct = nine.priors * direct
    assert np.allclose(post.probs, direct / direct.sum(), atol=1e-10)


def test_posterior_probs_empty_record_is_priors(nine):
    tree = build_domino_cut(4)
    assert np.allclose(posterior_probs(tree, nine, []), nine.priors)


def test_posterior_probs_after_gentle_opening(nine):
    # Oracle: p(outcome | psi_i) = <beta_i| diag(1, 1/2, 0) |beta_i> gives
    # unnormalized weights (1/2, 3/4, 3/4, 1/4, 1/4, 1, 1, 0, 0) / 9.
    tree = povm_node(
        BOB,
        [(1, 0.5, 0), (0, 0.5, 1)],
        [Declare("first"), Declare("second")],
    )
    weights = np.array([0.5, 0.75, 0.75, 0.25, 0.25, 1.0, 1.0, 0.0, 0.0]) / 9
    expected = weights / weights.sum()
    assert np.allclose(posterior_probs(tree, nine, ["0"]), expected, atol=1e-12)


def test_posterior_probs_impossible_record(nine):
    tree = povm_node(
        BOB,
        [(1, 1, 0), (0, 0, 1)],
        [Declare("a"), Declare("b")],
    )
    only_01 = subset(nine, [0, 1, 2])  # members with no Bob |2> support
    with pytest.raises(ImpossibleRecordError):
        posterior_probs(tree, only_01, ["1"])


def test_posterior_probs_bad_path(nine):
    tree = build_domino_cut(4)
    with pytest.raises(ProtocolError):
        posterior_probs(tree, nine, ["7"])


def test_residual_overlaps_initially_zero(nine):
    assert residual_overlaps(initial_posterior(nine)) == pytest.approx(0.0, abs=1e-12)


def test_residual_overlaps_after_gentle_opening(nine):
    post = apply_round(initial_posterior(nine), bob_element((1, 0.5, 0)))
    # psi4/psi5 collapse onto each other, so the scan maxes out at 1
    assert residual_overlaps(post) == pytest.approx(1.0, abs=1e-12)
    # the psi2/psi3 pair is merely bruised: overlap 1/3
    inner, sq2, sq3 = 1.0, 1.0, 1.0
    for f2, f3 in zip(post.factors[1], post.factors[2]):
        inner *= np.vdot(f2, f3)
        sq2 *= np.vdot(f2, f2).real
        sq3 *= np.vdot(f3, f3).real
    assert abs(inner) / np.sqrt(sq2 * sq3) == pytest.approx(1 / 3, abs=1e-12)


def test_residual_overlaps_projective_merge(nine):
    post = apply_round(initial_posterior(nine), bob_element((1, 1, 0)))
    # psi4 and psi5 residuals coincide in the {|0>,|1>} branch
    assert residual_overlaps(post) == pytest.approx(1.0, abs=1e-12)
    inner = 1.0
    for f4, f5 in zip(post.factors[3], post.factors[4]):
        inner *= np.vdot(f4, f5)
    assert abs(abs(inner) - float(np.vdot(kron_all(post.factors[3]), kron_all(post.factors[3])).real)) <= 1e-12


def test_pair_discriminate_info_limits():
    assert pair_discriminate_info(0.0) == pytest.approx(1.0, abs=1e-12)
    assert pair_discriminate_info(1.0) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ValueError):
        pair_discriminate_info(1.5)


def test_pair_discriminate_info_small_overlap_chain():
    from locclab.bound import optimize_bound

    rep = optimize_bound()
    h_term = 1.0 - pair_discriminate_info(rep.delta)
    assert h_term == pytest.approx(5.86e-5, rel=0.02)
    assert (2 / 9 - 16 * rep.epsilon) * h_term == pytest.approx(5.31e-6, rel=0.02)


def test_run_protocol_trivial_single_leaf(nine):
    run = run_protocol(Declare("done"), nine)
    assert run.mutual_information() == pytest.approx(0.0, abs=1e-12)
    assert run.joint.shape == (9, 1)


def test_run_protocol_trivial_on_three_party():
    eight = build_eight_states_three_party()
    run = run_protocol(Declare("done"), eight)
    assert run.mutual_information() == pytest.approx(0.0, abs=1e-12)


def test_run_protocol_domino_cut_values(nine):
    tree = build_domino_cut(4)
    assert run_protocol(tree, nine).mutual_information() == pytest.approx(
        np.log2(9) - 2 / 9, abs=1e-9
    )
    eight = subset(nine, [0, 1, 2, 4, 5, 6, 7, 8])
    run = run_protocol(tree, eight)
    assert run.mutual_information() == pytest.approx(3.0, abs=1e-9)
    assert max(l.max_overlap for l in run.leaves) <= 1e-10


def test_run_protocol_completeness_enforced(nine):
    broken = Internal(
        BOB,
        (sqrt_diag_element(BOB, (1, 0.5, 0), "only"),),
        (Declare("x"),),
    )
    with pytest.raises(ProtocolError):
        run_protocol(broken, nine)


def test_run_protocol_likelihoods_sum_to_prior_mass(nine):
    # completeness of each round makes outcome masses sum to one
    run = run_protocol(build_symmetric(), nine)
    assert run.joint.sum() == pytest.approx(1.0, abs=1e-12)
    assert shannon_entropy(run.joint.sum(axis=1)) == pytest.approx(np.log2(9), abs=1e-10)


def test_run_protocol_stray_member_at_pair_leaf(nine):
    bad = povm_node(BOB, [(1, 1, 1)], [PairDiscriminate(1, 2)])
    with pytest.raises(ProtocolError):
        run_protocol(bad, nine)


def test_data_processing_never_exceeds_prior_entropy(nine):
    for tree in (build_domino_cut(4), build_symmetric()):
        run = run_protocol(tree, nine)
        assert run.mutual_information() <= shannon_entropy(nine.priors) + 1e-12


def test_accumulated_factorization_matches_composed_element(nine):
    # net operation elements factorize into per-party accumulated operators
    post = initial_posterior(nine)
    elements = [
        bob_element((1, 0.5, 0)),
        sqrt_diag_element(0, (0, 1, 1), "a"),
        bob_element((1, 0, 1)),
    ]
    composed = np.eye(9, dtype=complex)
    for element in elements:
        post = apply_round(post, element)
        lifted = (
            kron(np.eye(3), element.matrix)
            if element.party == BOB
            else kron(element.matrix, np.eye(3))
        )
        composed = lifted @ composed
    assert np.max(np.abs(kron(*post.accumulated) - composed)) <= 1e-10


def test_guess_leaf_collects_surviving_mass(nine):
    tree = povm_node(BOB, [(1, 1, 0), (0, 0, 1)], [Guess(0), Guess(7)])
    run = run_protocol(tree, nine)
    assert run.joint.shape[1] == 2
    assert run.joint.sum() == pytest.approx(1.0, abs=1e-12)


def test_serialization_round_trip():
    for tree in (build_domino_cut(4), build_symmetric(), build_domino_cut(7)):
        text = emit_tree(tree)
        parsed = parse_tree(text)
        assert trees_equal(parsed, tree)
        assert emit_tree(parsed) == text


def test_serialization_survives_parameter_floats():
    from locclab.strategies import build_five_param

    tree = build_five_param(0.726, 0.395, 0.312, 0.071, 0.104)
    assert trees_equal(parse_tree(emit_tree(tree)), tree)


def test_parse_rejects_malformed_documents():
    with pytest.raises(TreeFormatError):
        parse_tree("")
    with pytest.raises(TreeFormatError):
        parse_tree("leaf guess 1\nleaf guess 2\n")
    with pytest.raises(TreeFormatError):
        parse_tree("internal party=1\n leaf guess 1\n")
    with pytest.raises(TreeFormatError):
        parse_tree("nonsense\n")


def test_emit_rejects_non_diagonal_elements(nine):
    hadamard_like = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    element = type(sqrt_diag_element(0, (1, 1), "x"))(0, hadamard_like, "x")
    node = Internal(0, (element,), (Declare("x"),))
    with pytest.raises(TreeFormatError):
        emit_tree(node)


def test_validate_tree_party_range(nine):
    node = povm_node(5, [(1, 1, 1)], [Declare("x")])
    with pytest.raises(ProtocolError):
        validate_tree(node, nine.party_dims)
