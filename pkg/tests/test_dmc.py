import json

import numpy as np
import pytest

from asymcap.dmc import Dmc, InputDist, bsc, bec, bac, identity, zchannel, random_dmc, parse_channel, \
    read_channel, mutual_information, conditional_entropy, symmetric_capacity, capacity, z_channel_capacity, \
    bsc_capacity, sample, sample_many, sample_blocks, entropy
from asymcap.helpers import ConvergenceError, h2, generator_for


def test_unreachable_outputs_are_pruned():
    ch = Dmc([[0.5, 0.0, 0.5], [0.25, 0.0, 0.75]])
    assert ch.output_size == 2
    assert ch.output_labels.tolist() == [0, 2]
    assert ch.columns_of(np.array([0, 2])).tolist() == [0, 1]
    with pytest.raises(ValueError):
        ch.columns_of(1)


@pytest.mark.parametrize('w', [
    [[0.5, 0.6], [0.5, 0.5]],
    [[1.2, -0.2], [0.5, 0.5]],
    [0.5, 0.5],
    [],
], ids=['row-sum', 'range', 'vector', 'empty'])
def test_invalid_channel_matrices(w):
    with pytest.raises(ValueError):
        Dmc(w)


def test_input_dist_validation():
    with pytest.raises(ValueError):
        InputDist([0.5, 0.6])
    with pytest.raises(ValueError):
        InputDist([1.5, -0.5])
    assert InputDist.bernoulli(0.11).p.tolist() == pytest.approx([0.89, 0.11])
    assert InputDist.uniform(4).tv_distance(InputDist([0.5, 0.5, 0.0, 0.0])) == pytest.approx(0.5)


def test_mutual_information_of_bsc():
    assert mutual_information(bsc(0.11), InputDist.uniform(2)) == pytest.approx(1 - h2(0.11), abs=1e-12)
    assert mutual_information(bsc(0.11), InputDist.uniform(2)) == pytest.approx(0.50016, abs=1e-5)


def test_mutual_information_trivial_cases(binary_channel):
    assert mutual_information(binary_channel, InputDist([1.0, 0.0])) == pytest.approx(0.0, abs=1e-12)
    assert mutual_information(identity(2), InputDist.uniform(2)) == pytest.approx(1.0)


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        mutual_information(bsc(0.1), InputDist.uniform(3))


def test_conditional_entropy_identity(binary_channel):
    p = InputDist.bernoulli(0.3)
    assert conditional_entropy(binary_channel, p) == pytest.approx(
        p.entropy() - mutual_information(binary_channel, p), abs=1e-12)


def test_z_channel_capacity(z_channel):
    report = capacity(z_channel)
    assert report.capacity == pytest.approx(np.log2(1.25), abs=1e-8)
    assert report.capacity == pytest.approx(z_channel_capacity(0.5), abs=1e-8)
    # the optimal input of the Z-channel favours the noiseless symbol
    assert report.optimal_input.p[1] < 0.5


@pytest.mark.parametrize('p', [0.01, 0.11, 0.3])
def test_bsc_capacity_at_uniform_input(p):
    report = capacity(bsc(p))
    assert report.capacity == pytest.approx(bsc_capacity(p), abs=1e-8)
    assert report.optimal_input.p == pytest.approx([0.5, 0.5], abs=1e-4)
    assert report.symmetric_capacity == pytest.approx(report.capacity, abs=1e-8)


def test_identity_capacity():
    report = capacity(identity(2))
    assert report.capacity == pytest.approx(1.0, abs=1e-9)
    assert report.optimal_input.p == pytest.approx([0.5, 0.5])
    assert report.conditional_entropy_x_given_y == pytest.approx(0.0, abs=1e-12)


def test_capacity_report_ordering(binary_channel):
    report = capacity(binary_channel)
    assert 0.0 <= report.symmetric_capacity <= report.capacity + 1e-9
    assert report.capacity <= np.log2(binary_channel.input_size) + 1e-12
    assert report.conditional_entropy_x_given_y >= 0.0


def test_capacity_iteration_cap():
    with pytest.raises(ConvergenceError):
        capacity(bac(0.02, 0.2), tol=1e-15, max_iterations=3)
    with pytest.raises(ValueError):
        capacity(bac(0.02, 0.2), tol=0.0)


def test_capacity_of_nonbinary_channel(assets_path):
    ch = read_channel(assets_path / 'ternary_channel.json')
    report = capacity(ch)
    assert report.mutual_information == pytest.approx(report.capacity, abs=1e-8)
    assert report.symmetric_capacity <= report.capacity + 1e-9


def test_binary_input_footnote_bounds(random_binary_channels):
    """For binary inputs p*(1) lies in (1/e, 1 - 1/e) and I_s >= (e·ln2/2)·C."""
    for ch in random_binary_channels(1000, seed=3):
        report = capacity(ch)
        assert 1 / np.e < report.optimal_input.p[1] < 1 - 1 / np.e
        assert report.symmetric_capacity >= np.e * np.log(2) / 2 * report.capacity - 1e-6


def test_entropy_of_point_mass():
    assert entropy(np.array([1.0, 0.0])) == 0.0


def test_sampling_is_reproducible():
    ch = bac(0.02, 0.2)
    first = [sample(ch, x, generator_for(5)) for x in (0, 1, 1)]
    second = [sample(ch, x, generator_for(5)) for x in (0, 1, 1)]
    assert first == second
    with pytest.raises(ValueError):
        sample(ch, 2, generator_for(5))


def test_sample_many_frequencies(rng):
    ch = bac(0.1, 0.3)
    x = np.repeat([0, 1], 50_000)
    y = sample_many(ch, x, rng)
    assert y[:50_000].mean() == pytest.approx(0.1, abs=0.01)
    assert y[50_000:].mean() == pytest.approx(0.7, abs=0.01)


def test_sample_blocks_uses_one_stream_per_block():
    ch = bsc(0.2)
    x = np.zeros((3, 64), dtype=np.uint8)
    together = sample_blocks(ch, x, [generator_for(1, t) for t in range(3)])
    alone = sample_blocks(ch, x[2:], [generator_for(1, 2)])
    assert np.array_equal(together[2], alone[0])


@pytest.mark.parametrize('spec, expected', [
    ('bsc(0.11)', bsc(0.11)),
    ('bec(0.3)', bec(0.3)),
    ('zchannel(0.5)', zchannel(0.5)),
    ('bac(0.02, 0.2)', bac(0.02, 0.2)),
    ('identity(3)', identity(3)),
])
def test_parse_channel_presets(spec, expected):
    assert parse_channel(spec) == expected


def test_parse_channel_rejects_unknown():
    with pytest.raises(ValueError):
        parse_channel('awgn(0.5)')
    with pytest.raises(ValueError):
        parse_channel('no-such-file.json')


def test_channel_json_round_trip(tmp_path, assets_path):
    ch = parse_channel(str(assets_path / 'bac_channel.json'))
    assert ch == bac(0.02, 0.2)
    path = tmp_path / 'channel.json'
    ch.to_json(path)
    assert json.loads(path.read_text())['input_size'] == 2
    assert read_channel(path) == ch


def test_channel_json_shape_mismatch(tmp_path):
    path = tmp_path / 'bad.json'
    path.write_text(json.dumps({'input_size': 2, 'output_size': 3, 'w': [[1, 0], [0, 1]]}))
    with pytest.raises(ValueError):
        read_channel(path)


def test_permutation_invariance(rng):
    ch = random_dmc(rng, 3, 5)
    p = InputDist([0.2, 0.5, 0.3])
    permuted = ch.permute_outputs(rng.permutation(5))
    assert mutual_information(permuted, p) == pytest.approx(mutual_information(ch, p), abs=1e-12)
    assert symmetric_capacity(ch.permute_inputs([2, 0, 1])) == pytest.approx(symmetric_capacity(ch), abs=1e-12)


def test_symmetric_capacity_never_exceeds_capacity():
    generator = np.random.default_rng(29)
    for _ in range(1000):
        ch = random_dmc(generator, int(generator.integers(2, 9)), int(generator.integers(2, 9)))
        report = capacity(ch, tol=1e-6)
        assert report.symmetric_capacity <= report.capacity + 1e-9


@pytest.mark.parametrize('seed', [0, 1, 2])
def test_capacity_is_invariant_under_relabelling(seed):
    generator = np.random.default_rng(seed)
    ch = random_dmc(generator, 3, 5)
    report = capacity(ch)

    input_permutation = generator.permutation(3)
    relabelled = capacity(ch.permute_inputs(input_permutation))
    assert relabelled.capacity == pytest.approx(report.capacity, abs=1e-8)
    assert relabelled.optimal_input.p == pytest.approx(report.optimal_input.p[input_permutation], abs=1e-4)

    relabelled = capacity(ch.permute_outputs(generator.permutation(5)))
    assert relabelled.capacity == pytest.approx(report.capacity, abs=1e-8)
    assert relabelled.optimal_input.p == pytest.approx(report.optimal_input.p, abs=1e-4)


def test_capacity_matches_grid_search(random_binary_channels):
    grid = np.linspace(0.0, 1.0, 2001)
    for ch in random_binary_channels(20, seed=11):
        report = capacity(ch)
        best = max(mutual_information(ch, InputDist.bernoulli(float(alpha))) for alpha in grid)
        assert best <= report.capacity + 1e-12
        assert best == pytest.approx(report.capacity, abs=1e-5)
