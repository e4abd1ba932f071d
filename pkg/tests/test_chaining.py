from typing import Optional

import numpy as np
import pytest

from asymcap.chaining import ChainConfig, ChainSession, plug_combination, build_chain, chain_encode, chain_decode, \
    run_chain, predicted_rate, theoretical_rate, chain_rate, terminal_length, ERROR_TYPES, BLOCK_ERROR, \
    TERMINAL_ERROR, PAYLOAD_ERROR, LdpcSyndromeCode
from asymcap.dmc import InputDist, capacity, mutual_information, zchannel
from asymcap.helpers import ChainSettings, ConfigurationError, PolarSettings, generator_for, h2

SETTINGS = PolarSettings(samples=500)


def noiseless_session(noiseless_channel, k: int = 3, n: int = 64, channel_kind: str = 'polar',
                      settings: Optional[ChainSettings] = None) -> ChainSession:
    cfg = plug_combination('polar', channel_kind, noiseless_channel, k, n, alpha=0.3, settings=settings)
    return build_chain(cfg, generator_for(1), SETTINGS)


def random_messages(session: ChainSession, batch: int, seed: int = 0) -> np.ndarray:
    return generator_for(seed).integers(0, 2, size=(batch, session.message_length), dtype=np.uint8)


def test_predicted_rate_hand_value():
    assert predicted_rate(0.5, 0.3, 0.2, 0.28, 10) == pytest.approx(2.9 / (9 + 0.2 / 0.28), abs=1e-12)
    assert predicted_rate(0.5, 0.3, 0.2, 0.28, 10) == pytest.approx(0.29853, abs=1e-5)


def test_predicted_rate_tends_to_mutual_information():
    assert predicted_rate(0.5, 0.3, 0.2, 0.28, 10_000) == pytest.approx(0.3, abs=1e-3)


def test_predicted_rate_of_two_blocks():
    assert predicted_rate(0.5, 0.3, 0.2, 0.28, 2) == pytest.approx(0.5 / (1 + 0.2 / 0.28))


def test_predicted_rate_grows_with_k():
    rates = [predicted_rate(0.5, 0.3, 0.2, 0.28, k) for k in (2, 5, 10, 20)]
    assert rates == sorted(rates)
    assert rates[-1] < 0.3


@pytest.mark.parametrize('channel', [zchannel(0.5), zchannel(0.2)])
def test_theoretical_rate_approaches_capacity(channel):
    report = capacity(channel)
    alpha = float(report.optimal_input.p[1])
    rates = [theoretical_rate(channel, alpha, k) for k in (2, 5, 10, 20)]
    assert rates == sorted(rates)
    assert rates[0] > report.symmetric_capacity - 1e-9
    assert theoretical_rate(channel, alpha, 10_000) == pytest.approx(report.capacity, abs=1e-3)


@pytest.mark.parametrize('syndrome_size, i_s, expected', [(0, 0.5, 0), (14, 1.0, 32), (3, 1.0, 4), (10, 0.3, 64)])
def test_terminal_length(syndrome_size, i_s, expected):
    assert terminal_length(syndrome_size, i_s, 0.75) == expected


def test_terminal_length_needs_capacity():
    with pytest.raises(ConfigurationError):
        terminal_length(5, 0.0, 0.75)


@pytest.mark.parametrize('kinds', [('ldpc', 'polar', 'polar'), ('polar', 'turbo', 'polar'), ('polar', 'polar', 'ldpc')])
def test_unregistered_combination(asymmetric_channel, kinds):
    source_kind, channel_kind, terminal_kind = kinds
    with pytest.raises(ValueError):
        plug_combination(source_kind, channel_kind, asymmetric_channel, 3, 64, terminal_kind=terminal_kind)


def test_config_needs_two_blocks(asymmetric_channel):
    with pytest.raises(ValueError):
        ChainConfig(k=1, n=64, channel=asymmetric_channel)
    with pytest.raises(ValueError):
        ChainConfig(k=3, n=64, channel=asymmetric_channel, alpha=1.0)


def test_config_defaults_to_capacity_achieving_bias(asymmetric_channel):
    cfg = ChainConfig(k=3, n=64, channel=asymmetric_channel)
    assert cfg.alpha == pytest.approx(capacity(asymmetric_channel).optimal_input.p[1])


def test_block_sizes(noiseless_channel):
    session = noiseless_session(noiseless_channel, k=4)
    ctx = session.source_map.ctx
    assert session.payload_size == ctx.compressed_set.size
    assert session.syndrome_size == ctx.syndrome_set.size
    assert session.fresh_size == ctx.info_set.size
    assert session.message_length == session.payload_size + 2 * session.fresh_size
    assert session.channel_uses == 3 * 64 + session.terminal_length
    assert session.terminal.alpha == 0.5
    assert session.terminal.info_set.size == session.syndrome_size


@pytest.mark.parametrize('k', [2, 3, 5])
def test_measured_rate_is_the_realized_rate(noiseless_channel, k):
    session = noiseless_session(noiseless_channel, k=k)
    assert chain_rate(session) == pytest.approx(session.message_length / session.channel_uses, abs=1e-12)


def test_rate_formula_at_the_source_bias(noiseless_channel):
    session = noiseless_session(noiseless_channel, k=5)
    p = InputDist.bernoulli(0.3)
    assert mutual_information(noiseless_channel, p) == pytest.approx(h2(0.3))
    assert chain_rate(session) <= theoretical_rate(noiseless_channel, 0.3, 5) + 2 * 5 / 64


@pytest.mark.parametrize('k', [3, 5])
def test_rate_without_backoff_matches_the_formula(noiseless_channel, k):
    session = noiseless_session(noiseless_channel, k=k, settings=ChainSettings(backoff=1.0))
    # noiseless: only rounding keeps a nearly uniform source index out of the information set
    assert session.syndrome_size <= 2
    assert chain_rate(session) == pytest.approx(theoretical_rate(noiseless_channel, 0.3, k), abs=2 * k / 64)


@pytest.mark.integration
def test_every_block_follows_the_source_bias(noiseless_channel):
    alpha = 0.11
    cfg = plug_combination('polar', 'polar', noiseless_channel, 5, 4096, alpha=alpha)
    session = build_chain(cfg, generator_for(20220401), PolarSettings(samples=2000))
    sent = chain_encode(session, random_messages(session, 20, seed=3), 17)
    assert len(sent.codewords) == 5
    for x in sent.codewords[:-1]:
        assert x.shape == (20, 4096)
        assert abs(x.mean() - alpha) < 0.02


def test_noiseless_chain_recovers_every_message(noiseless_channel):
    session = noiseless_session(noiseless_channel, k=4)
    message = random_messages(session, 6)
    outcome, sent, decoded = run_chain(session, message, 42, [generator_for(2, t) for t in range(6)])
    assert not outcome.message_error.any()
    for name in (BLOCK_ERROR, TERMINAL_ERROR, PAYLOAD_ERROR):
        assert outcome.counts()[name] == 0
    assert set(outcome.counts()) == set(ERROR_TYPES)
    assert decoded.decode_order == [4, 3, 2, 1]
    assert len(sent.codewords) == 4
    assert sent.codewords[-1].shape == (6, session.terminal_length)


def test_syndromes_travel_in_the_next_payload(noiseless_channel):
    session = noiseless_session(noiseless_channel, k=4)
    sent = chain_encode(session, random_messages(session, 3), 7)
    for j in range(1, 3):
        assert np.array_equal(sent.payloads[j][:, :session.syndrome_size], sent.syndromes[j - 1])
    assert np.array_equal(sent.payloads[-1], sent.syndromes[-1])


def test_corrupted_terminal_block_breaks_every_trial(noiseless_channel):
    session = noiseless_session(noiseless_channel, k=3)
    message = random_messages(session, 10)
    outcome, _, _ = run_chain(session, message, 42, [generator_for(3, t) for t in range(10)], corrupt_terminal=True)
    assert outcome.message_error.all()
    assert outcome.errors[TERMINAL_ERROR].all()


def test_encoder_and_decoder_check_sizes(noiseless_channel):
    session = noiseless_session(noiseless_channel, k=3)
    with pytest.raises(ValueError):
        chain_encode(session, np.zeros((1, session.message_length + 1)), 1)
    with pytest.raises(ValueError):
        chain_decode(session, [np.zeros(64)], 1)


def test_ldpc_channel_code_combination(noiseless_channel):
    session = noiseless_session(noiseless_channel, k=3, n=128, channel_kind='ldpc')
    assert isinstance(session.channel_code, LdpcSyndromeCode)
    ctx = session.source_map.ctx
    assert session.syndrome_size == session.payload_size - ctx.info_set.size
    message = random_messages(session, 4)
    outcome, _, _ = run_chain(session, message, 5, [generator_for(4, t) for t in range(4)])
    assert not outcome.message_error.any()


def test_chain_runs_are_reproducible(asymmetric_channel):
    cfg = plug_combination('polar', 'polar', asymmetric_channel, 3, 64, settings=ChainSettings(backoff=0.5))
    first = build_chain(cfg, generator_for(9), SETTINGS)
    second = build_chain(cfg, generator_for(9), SETTINGS)
    assert np.array_equal(first.source_map.ctx.info_set, second.source_map.ctx.info_set)
    message = random_messages(first, 4)
    a, _, _ = run_chain(first, message, 3, [generator_for(5, t) for t in range(4)])
    b, _, _ = run_chain(second, message, 3, [generator_for(5, t) for t in range(4)])
    assert np.array_equal(a.message_error, b.message_error)
    assert a.counts() == b.counts()


@pytest.mark.integration
def test_polar_chain_over_asymmetric_channel(asymmetric_channel):
    cfg = plug_combination('polar', 'polar', asymmetric_channel, 5, 4096)
    session = build_chain(cfg, generator_for(20220401), PolarSettings(samples=10_000))
    assert 0.0 < chain_rate(session) < theoretical_rate(asymmetric_channel, cfg.alpha, 5)
    message = generator_for(1).integers(0, 2, size=(200, session.message_length), dtype=np.uint8)
    outcome, _, _ = run_chain(session, message, 11, [generator_for(2, t) for t in range(200)])
    assert outcome.message_error.mean() < 0.25
