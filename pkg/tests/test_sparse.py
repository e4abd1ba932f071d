import numpy as np
import pytest

from asymcap.dmc import InputDist, bsc, bac, identity, sample_many, conditional_entropy
from asymcap.helpers import ConfigurationError, SparseSettings, generator_for, h2
from asymcap.sparse import SparseGraph, build_graph, build_regular_graph, select_checks, syndrome, to_dense, gf2_solve, \
    bp_decode_biased, task_messages, task_equivalence_check, bp_decimate_encode, build_integrated_code, \
    integrated_encode, integrated_decode, run_integrated
from asymcap.sparse.bp import phi, BeliefPropagation, belief_propagation


@pytest.fixture
def small_graph() -> SparseGraph:
    return build_regular_graph(96, 3, 6, seed=4)


def test_graph_degrees():
    g = build_graph(100, 37, 3, seed=1)
    assert np.all(g.variable_degrees() == 3)
    assert g.check_degrees().max() - g.check_degrees().min() <= 1
    assert g.check_degrees().sum() == 300
    assert g.remainder == 300 % 37
    assert not g.has_parallel_edges()


def test_regular_graph(small_graph):
    assert small_graph.m == 48
    assert np.all(small_graph.check_degrees() == 6)
    with pytest.raises(ValueError):
        build_regular_graph(10, 3, 4, seed=0)


@pytest.mark.parametrize('n, m, l', [(0, 5, 3), (10, 2, 3), (10, 5, 0)])
def test_graph_rejects_sizes(n, m, l):
    with pytest.raises(ValueError):
        build_graph(n, m, l, seed=0)


def test_graph_is_reproducible():
    assert np.array_equal(build_graph(64, 32, 3, seed=9).edge_var, build_graph(64, 32, 3, seed=9).edge_var)


def test_syndrome_of_trivial_words(small_graph):
    assert not syndrome(small_graph, np.zeros(96)).any()
    word = np.zeros(96, dtype=np.uint8)
    word[17] = 1
    assert np.array_equal(syndrome(small_graph, word), to_dense(small_graph)[:, 17])


def test_syndrome_is_linear_and_matches_dense_product(small_graph, rng):
    x = rng.integers(0, 2, size=(20, 96), dtype=np.uint8)
    z = rng.integers(0, 2, size=(20, 96), dtype=np.uint8)
    h = to_dense(small_graph).astype(int)
    assert np.array_equal(syndrome(small_graph, x), (x.astype(int) @ h.T) % 2)
    assert np.array_equal(syndrome(small_graph, x ^ z), syndrome(small_graph, x) ^ syndrome(small_graph, z))
    with pytest.raises(ValueError):
        syndrome(small_graph, np.zeros(95))


def test_select_checks(small_graph, rng):
    checks = [5, 0, 40]
    sub = select_checks(small_graph, checks)
    x = rng.integers(0, 2, size=96, dtype=np.uint8)
    assert sub.m == 3
    assert np.array_equal(syndrome(sub, x), syndrome(small_graph, x)[checks])


def test_gf2_solve(small_graph, rng):
    h = to_dense(small_graph)
    x = rng.integers(0, 2, size=96, dtype=np.uint8)
    solution = gf2_solve(h, (h.astype(int) @ x) % 2)
    assert solution is not None
    assert np.array_equal(syndrome(small_graph, solution), syndrome(small_graph, x))
    assert gf2_solve(np.array([[1, 0], [1, 0]]), np.array([0, 1])) is None


def test_graph_json_round_trip(small_graph, tmp_path):
    path = tmp_path / 'graph.json'
    small_graph.to_json(path)
    restored = SparseGraph.read(path)
    assert restored.m == small_graph.m
    assert np.array_equal(to_dense(restored), to_dense(small_graph))


def test_phi_is_an_involution():
    x = np.array([0.1, 1.0, 5.0])
    assert phi(phi(x)) == pytest.approx(x)
    assert phi(np.array([np.inf]))[0] == 0.0


def test_variables_cannot_be_fixed_twice(small_graph):
    state = BeliefPropagation(small_graph, np.zeros(96), np.zeros(48), 30.0)
    state.fix(0, np.array([1, 2]), np.array([0, 1]))
    with pytest.raises(ValueError):
        state.fix(0, np.array([2]), np.array([1]))


def test_decoding_and_syndrome_tasks_pass_the_same_messages():
    generator = np.random.default_rng(8)
    for instance in range(100):
        g = build_regular_graph(48, 3, 6, seed=instance)
        y = (generator.random(48) < 0.05).astype(np.uint8)
        channel_trace, syndrome_trace = task_messages(g, y, 0.05, iterations=5, saturation=30.0)
        assert len(channel_trace) == 5
        for channel_messages, syndrome_messages in zip(channel_trace, syndrome_trace):
            assert np.array_equal(channel_messages, syndrome_messages)


def test_decoding_and_syndrome_tasks_agree(small_graph, rng):
    for _ in range(20):
        e = (rng.random(96) < 0.03).astype(np.uint8)
        assert task_equivalence_check(small_graph, np.zeros(96, dtype=np.uint8), e, 0.03)
    with pytest.raises(ValueError):
        word = np.zeros(96, dtype=np.uint8)
        word[0] = 1
        task_equivalence_check(small_graph, word, np.zeros(96), 0.03)


def test_flipping_llr_signs_flips_messages_and_decisions(small_graph, rng):
    g = small_graph
    llrs = rng.normal(0.0, 2.0, size=(4, g.n))
    target = rng.integers(0, 2, size=(4, g.m), dtype=np.uint8)
    z = rng.integers(0, 2, size=(4, g.n), dtype=np.uint8)
    flip = 1.0 - 2.0 * z

    def record(trace):
        return lambda state: trace.append(state.c2v.copy())

    plain_trace, flipped_trace = [], []
    plain = belief_propagation(g, llrs, target, 15, 30.0, hook=record(plain_trace))
    flipped = belief_propagation(g, llrs * flip, target ^ syndrome(g, z), 15, 30.0, hook=record(flipped_trace))

    assert plain.iterations == flipped.iterations
    assert len(plain_trace) == len(flipped_trace) == plain.iterations
    for plain_messages, flipped_messages in zip(plain_trace, flipped_trace):
        assert np.array_equal(flipped_messages, plain_messages * flip[:, g.edge_var])
    assert np.array_equal(flipped.x, plain.x ^ z)
    assert np.array_equal(flipped.satisfied, plain.satisfied)


def test_biased_decoding_at_uniform_input(rng):
    g = build_regular_graph(1000, 3, 6, seed=2)
    ch = bsc(0.03)
    x = np.zeros((5, 1000), dtype=np.uint8)
    y = sample_many(ch, x, rng)
    result = bp_decode_biased(g, ch, 0.5, y, np.zeros(g.m, dtype=np.uint8))
    assert result.x.shape == (5, 1000)
    assert result.x.mean() < 1e-2


def test_biased_decoding_of_a_single_block(small_graph):
    result = bp_decode_biased(small_graph, identity(2), 0.5, np.zeros(96, dtype=int), np.zeros(48, dtype=np.uint8))
    assert result.x.shape == (96,)
    assert result.satisfied


@pytest.mark.integration
def test_ldpc_decoding_below_threshold(rng):
    g = build_regular_graph(10_000, 3, 6, seed=3)
    ch = bsc(0.07)
    x = np.zeros((20, 10_000), dtype=np.uint8)
    result = bp_decode_biased(g, ch, 0.5, sample_many(ch, x, rng), np.zeros(g.m, dtype=np.uint8))
    assert result.x.mean() < 1e-3


@pytest.mark.integration
def test_biased_decoding_over_asymmetric_channel(rng):
    ch = bac(0.02, 0.2)
    n = 10_000
    m = int(round(n * (conditional_entropy(ch, InputDist.bernoulli(0.11)) + 0.1)))
    g = build_graph(n, m, 3, seed=5)
    x = (rng.random((50, n)) < 0.11).astype(np.uint8)
    result = bp_decode_biased(g, ch, 0.11, sample_many(ch, x, rng), syndrome(g, x))
    assert np.all(result.x == x, axis=1).mean() >= 0.8


def test_decimation_fixes_every_variable(small_graph, rng):
    target = rng.integers(0, 2, size=(3, 48), dtype=np.uint8)
    result = bp_decimate_encode(small_graph, target, 0.3, generator_for(1))
    assert result.x.shape == (3, 96)
    assert result.rounds > 0
    assert np.array_equal(result.unfulfilled, (syndrome(small_graph, result.x) != target).sum(axis=1))
    assert np.all(result.unfulfilled_fraction <= 1.0)
    assert result.ones_fraction.shape == (3,)


def test_decimation_streams_are_per_block(small_graph, rng):
    target = rng.integers(0, 2, size=(3, 48), dtype=np.uint8)
    together = bp_decimate_encode(small_graph, target, 0.3, [generator_for(6, b) for b in range(3)])
    alone = bp_decimate_encode(small_graph, target[1], 0.3, [generator_for(6, 1)])
    assert np.array_equal(together.x[1], alone.x)
    with pytest.raises(ValueError):
        bp_decimate_encode(small_graph, target, 0.3, [generator_for(6, 0)])


def test_decimation_rejects_wrong_syndrome_length(small_graph):
    with pytest.raises(ValueError):
        bp_decimate_encode(small_graph, np.zeros(47), 0.3, generator_for(0))


@pytest.mark.integration
def test_decimation_shapes_words():
    n = 10_000
    g = build_graph(n, int(round(n * h2(0.11))), 3, seed=12)
    ones, unfulfilled = [], []
    for seed in range(20):
        target = generator_for(seed).integers(0, 2, size=g.m, dtype=np.uint8)
        result = bp_decimate_encode(g, target, 0.11, generator_for(seed, 1))
        ones.append(result.ones_fraction)
        unfulfilled.append(result.unfulfilled_fraction)
    assert np.median(ones) == pytest.approx(0.11, abs=0.015)
    assert np.median(unfulfilled) < 0.02


def test_integrated_code_sizes(asymmetric_channel):
    code = build_integrated_code(asymmetric_channel, 0.3, 256, 3, seed=1)
    assert code.graph.m == round(256 * h2(0.3))
    assert code.info_checks.m + code.shared_checks.m == code.graph.m
    assert code.rate == code.message_length / 256
    with pytest.raises(ConfigurationError):
        build_integrated_code(bsc(0.4), 0.5, 256, 3, seed=1)


def test_integrated_margins_cost_message_rate(asymmetric_channel):
    loose = build_integrated_code(asymmetric_channel, 0.3, 256, 3, seed=1, settings=SparseSettings(shared_margin=0.0))
    tight = build_integrated_code(asymmetric_channel, 0.3, 256, 3, seed=1, settings=SparseSettings(shared_margin=0.2))
    assert tight.message_length < loose.message_length


def test_integrated_noiseless_round_trip(rng):
    code = build_integrated_code(identity(2), 0.3, 256, 3, seed=2)
    message = rng.integers(0, 2, size=(4, code.message_length), dtype=np.uint8)
    outcome = run_integrated(code, message, 31, [generator_for(3, b) for b in range(4)])
    # without noise every failure traces back to checks the encoder could not fulfil
    assert not np.any(outcome.message_error & (outcome.unfulfilled == 0))
    assert not np.any(outcome.decoder_failure & (outcome.unfulfilled == 0))
    assert np.all(outcome.encoder_failure[outcome.unfulfilled > 0])


def test_integrated_decoder_reads_the_shared_checks(rng):
    code = build_integrated_code(identity(2), 0.3, 128, 3, seed=3)
    message = rng.integers(0, 2, size=(2, code.message_length), dtype=np.uint8)
    encoded = integrated_encode(code, message, 5, generator_for(4))
    estimate, x_hat, _ = integrated_decode(code, encoded.x, 5)
    assert np.array_equal(estimate, syndrome(code.info_checks, x_hat))
    with pytest.raises(ValueError):
        integrated_encode(code, message[:, 1:], 5, generator_for(4))


def test_run_integrated_is_reproducible(asymmetric_channel, rng):
    code = build_integrated_code(asymmetric_channel, 0.3, 128, 3, seed=4)
    message = rng.integers(0, 2, size=(2, code.message_length), dtype=np.uint8)
    first = run_integrated(code, message, 8, [generator_for(9, b) for b in range(2)])
    second = run_integrated(code, message, 8, [generator_for(9, b) for b in range(2)])
    assert np.array_equal(first.ones_fraction, second.ones_fraction)
    assert np.array_equal(first.message_error, second.message_error)
