"""
Chaining over k blocks. Every block but the last is a biased word produced by a source map from a uniform payload;
the syndrome the receiver needs to decode block j travels inside the payload of block j + 1, and the syndrome of
block k - 1 is sent in block k with a code for uniform inputs. Decoding runs from block k back to block 1.
"""
from dataclasses import dataclass, field
from typing import Optional, List, Dict, Tuple, Type

import numpy as np

from asymcap.dmc import Dmc, InputDist, capacity, conditional_entropy, mutual_information, sample_blocks, \
    symmetric_capacity
from asymcap.helpers import ChainSettings, PolarSettings, SparseSettings, Generators, chain_settings_non_nil, \
    sparse_settings_non_nil, block_generators, ConfigurationError, h2
from asymcap.polar.construction import PolarContext, build_context
from asymcap.polar.honda_yamamoto import hy_encode, hy_decode, syndrome_decode, source_compress, source_decompress
from asymcap.polar.transform import polar_transform
from asymcap.sparse.bp import bp_decode_biased
from asymcap.sparse.graph import build_graph, syndrome as ldpc_syndrome

# error types
SHAPING_ERROR = 'shaping'
BLOCK_ERROR = 'block'
TERMINAL_ERROR = 'terminal'
PAYLOAD_ERROR = 'payload'
ERROR_TYPES = (SHAPING_ERROR, BLOCK_ERROR, TERMINAL_ERROR, PAYLOAD_ERROR)


class PolarSourceMap:
    """g is polar decompression of uniform bits, f is polar compression."""

    name = 'polar'

    def __init__(self, ctx: PolarContext):
        self.ctx = ctx

    @property
    def payload_size(self) -> int:
        return int(self.ctx.compressed_set.size)

    def expand(self, payload: np.ndarray) -> np.ndarray:
        return source_decompress(self.ctx, payload)

    def compress(self, x: np.ndarray) -> np.ndarray:
        return source_compress(self.ctx, x)


class PolarSyndromeCode:
    """The syndrome of a block is u = x·G_n on the positions the polar decoder cannot infer."""

    name = 'polar'

    def __init__(self, ctx: PolarContext, **_):
        self.ctx = ctx

    @property
    def syndrome_size(self) -> int:
        return int(self.ctx.syndrome_set.size)

    def syndrome(self, x: np.ndarray) -> np.ndarray:
        return polar_transform(x)[..., self.ctx.syndrome_set]

    def decode(self, y: np.ndarray, syndrome: np.ndarray) -> np.ndarray:
        return polar_transform(syndrome_decode(self.ctx, y, syndrome))


class LdpcSyndromeCode:
    """The syndrome of a block is P·x for a random sparse P; BP with the posterior prior decodes it."""

    name = 'ldpc'

    def __init__(self, ctx: PolarContext, checks: int, variable_degree: int, seed: int,
                 sparse_settings: Optional[SparseSettings] = None, **_):
        self.ctx = ctx
        self.graph = build_graph(ctx.n, checks, variable_degree, seed)
        self.sparse_settings = sparse_settings_non_nil(sparse_settings)

    @property
    def syndrome_size(self) -> int:
        return self.graph.m

    def syndrome(self, x: np.ndarray) -> np.ndarray:
        return ldpc_syndrome(self.graph, x)

    def decode(self, y: np.ndarray, syndrome: np.ndarray) -> np.ndarray:
        result = bp_decode_biased(self.graph, self.ctx.channel, self.ctx.alpha, y, syndrome, self.sparse_settings)
        return result.x


SOURCE_MAPS: Dict[str, Type] = {'polar': PolarSourceMap}
CHANNEL_CODES: Dict[str, Type] = {'polar': PolarSyndromeCode, 'ldpc': LdpcSyndromeCode}
TERMINAL_CODES = ('polar',)


@dataclass
class ChainConfig:
    k: int
    n: int
    channel: Dmc
    alpha: Optional[float] = None
    source_kind: str = 'polar'
    channel_kind: str = 'polar'
    terminal_kind: str = 'polar'
    settings: ChainSettings = field(default_factory=ChainSettings)

    def __post_init__(self):
        if self.k < 2:
            raise ValueError(f'A chain needs at least 2 blocks, got k = {self.k}')
        if self.alpha is None:
            self.alpha = float(capacity(self.channel).optimal_input.p[1])
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f'Bias must lie strictly between 0 and 1, got {self.alpha}')


def plug_combination(source_kind: str, channel_kind: str, ch: Dmc, k: int, n: int, alpha: Optional[float] = None,
                     settings: Optional[ChainSettings] = None, terminal_kind: str = 'polar') -> ChainConfig:
    if source_kind not in SOURCE_MAPS:
        raise ValueError(f'Unregistered source map {source_kind}, expected one of {sorted(SOURCE_MAPS)}')
    if channel_kind not in CHANNEL_CODES:
        raise ValueError(f'Unregistered channel code {channel_kind}, expected one of {sorted(CHANNEL_CODES)}')
    if terminal_kind not in TERMINAL_CODES:
        raise ValueError(f'Unregistered terminal code {terminal_kind}, expected one of {list(TERMINAL_CODES)}')
    return ChainConfig(k=k, n=n, channel=ch, alpha=alpha, source_kind=source_kind, channel_kind=channel_kind,
                       terminal_kind=terminal_kind, settings=chain_settings_non_nil(settings))


@dataclass
class ChainSession:
    """Component codes of one chain configuration together with the block sizes they imply."""

    config: ChainConfig
    source_map: PolarSourceMap
    channel_code: object
    terminal: Optional[PolarContext]
    symmetric_capacity: float

    @property
    def payload_size(self) -> int:
        return self.source_map.payload_size

    @property
    def syndrome_size(self) -> int:
        return self.channel_code.syndrome_size

    @property
    def fresh_size(self) -> int:
        """Information bits per intermediate block."""
        return self.payload_size - self.syndrome_size

    @property
    def terminal_length(self) -> int:
        return 0 if self.terminal is None else self.terminal.n

    @property
    def message_length(self) -> int:
        return self.payload_size + (self.config.k - 2) * self.fresh_size

    @property
    def channel_uses(self) -> int:
        return self.config.n * (self.config.k - 1) + self.terminal_length


@dataclass
class ChainTranscript:
    payloads: List[np.ndarray]
    codewords: List[np.ndarray]
    syndromes: List[np.ndarray]
    outputs: List[np.ndarray] = field(default_factory=list)
    decode_order: List[int] = field(default_factory=list)


@dataclass
class ChainOutcome:
    """Per trial flags; a trial can show several error types."""

    message_error: np.ndarray
    errors: Dict[str, np.ndarray]
    ones_fraction: np.ndarray

    def counts(self) -> Dict[str, int]:
        return {name: int(flags.sum()) for name, flags in self.errors.items()}


def predicted_rate(h2_alpha: float, i_w: float, h_x_given_y: float, i_s: float, k: int) -> float:
    """(h2(α) + (k - 2)·I(W)) / ((k - 1) + H(X|Y)/I_s(W)), all quantities per channel use."""
    terminal = h_x_given_y / i_s if h_x_given_y > 0 else 0.0
    return (h2_alpha + (k - 2) * i_w) / ((k - 1) + terminal)


def theoretical_rate(ch: Dmc, alpha: float, k: int) -> float:
    p = InputDist.bernoulli(alpha)
    return predicted_rate(h2(alpha), mutual_information(ch, p), conditional_entropy(ch, p), symmetric_capacity(ch), k)


def chain_rate(session: ChainSession, k: Optional[int] = None) -> float:
    """
    Rate formula evaluated with the measured block quantities: payload, fresh information and syndrome sizes per
    block use, and the symmetric capacity realised by the terminal code. It equals the realised rate exactly.
    """
    k = session.config.k if k is None else k
    n = session.config.n
    i_s = session.syndrome_size / session.terminal_length if session.terminal_length else 1.0
    return predicted_rate(session.payload_size / n, session.fresh_size / n, session.syndrome_size / n, i_s, k)


def terminal_length(syndrome_size: int, i_s: float, backoff: float) -> int:
    """Smallest power of two whose rate-backed-off symmetric capacity carries the syndrome, 0 for none."""
    if syndrome_size == 0:
        return 0
    if i_s <= 0:
        raise ConfigurationError('The channel has zero symmetric capacity, the terminal block cannot be sent')
    length = 1
    while syndrome_size > backoff * i_s * length:
        length *= 2
    return length


def build_chain(cfg: ChainConfig, rng: np.random.Generator, polar_settings: Optional[PolarSettings] = None,
                sparse_settings: Optional[SparseSettings] = None) -> ChainSession:
    settings = cfg.settings
    ch = cfg.channel
    p = InputDist.bernoulli(cfg.alpha)
    i_w = mutual_information(ch, p)
    ctx = build_context(ch, cfg.alpha, cfg.n, rng, rate=settings.backoff * i_w, settings=polar_settings)
    source_map = SOURCE_MAPS[cfg.source_kind](ctx)

    if cfg.channel_kind == 'ldpc':
        checks = source_map.payload_size - ctx.info_set.size
        code = CHANNEL_CODES[cfg.channel_kind](ctx, checks=checks, variable_degree=settings.variable_degree,
                                               seed=int(rng.integers(2 ** 31)), sparse_settings=sparse_settings)
    else:
        code = CHANNEL_CODES[cfg.channel_kind](ctx)
    if code.syndrome_size > source_map.payload_size:
        raise ConfigurationError(f'Syndrome of {code.syndrome_size} bits does not fit a payload of '
                                 f'{source_map.payload_size} bits')

    i_s = symmetric_capacity(ch)
    length = terminal_length(code.syndrome_size, i_s, settings.backoff)
    terminal = None
    if length:
        rate = code.syndrome_size / length
        if rate > i_s:
            raise ConfigurationError(f'Terminal rate {rate:.4f} exceeds the symmetric capacity {i_s:.4f}')
        terminal = build_context(ch, 0.5, length, rng, rate=rate, settings=polar_settings)
    return ChainSession(config=cfg, source_map=source_map, channel_code=code, terminal=terminal,
                        symmetric_capacity=i_s)


def chain_encode(session: ChainSession, message: np.ndarray, shared_seed: int) -> ChainTranscript:
    """Message bits (a chain or a batch of chains along the first axis) to k channel input blocks."""
    k = session.config.k
    message = np.atleast_2d(np.asarray(message, dtype=np.uint8))
    if message.shape[1] != session.message_length:
        raise ValueError(f'Expected {session.message_length} message bits, got {message.shape[1]}')

    payloads, codewords, syndromes = [], [], []
    payload = message[:, :session.payload_size]
    cursor = session.payload_size
    for j in range(1, k):
        if j > 1:
            fresh = message[:, cursor:cursor + session.fresh_size]
            cursor += session.fresh_size
            payload = np.concatenate([syndromes[-1], fresh], axis=1)
        x = np.atleast_2d(session.source_map.expand(payload))
        payloads.append(payload)
        codewords.append(x)
        syndromes.append(np.atleast_2d(session.channel_code.syndrome(x)))

    batch = message.shape[0]
    if session.terminal is not None:
        codewords.append(np.atleast_2d(hy_encode(session.terminal, syndromes[-1], shared_seed, k)))
    else:
        codewords.append(np.zeros((batch, 0), dtype=np.uint8))
    payloads.append(syndromes[-1])
    return ChainTranscript(payloads=payloads, codewords=codewords, syndromes=syndromes)


def chain_decode(session: ChainSession, received: List[np.ndarray],
                 shared_seed: int) -> Tuple[np.ndarray, ChainTranscript]:
    """
    Backward decoding; every block relies on the syndrome recovered from the block after it, so a wrong syndrome
    propagates to all earlier blocks. Returns (message estimate, transcript).
    """
    k = session.config.k
    if len(received) != k:
        raise ValueError(f'Expected {k} received blocks, got {len(received)}')
    received = [np.atleast_2d(np.asarray(y, dtype=int)) for y in received]
    batch = received[0].shape[0]

    payloads: List[Optional[np.ndarray]] = [None] * k
    codewords: List[Optional[np.ndarray]] = [None] * k
    syndromes: List[Optional[np.ndarray]] = [None] * (k - 1)
    order = [k]

    if session.terminal is not None:
        estimate, u = hy_decode(session.terminal, received[-1], shared_seed, k)
        codewords[-1] = polar_transform(u)
    else:
        estimate = np.zeros((batch, 0), dtype=np.uint8)
        codewords[-1] = np.zeros((batch, 0), dtype=np.uint8)
    payloads[-1] = estimate
    syndromes[-1] = estimate

    for j in range(k - 1, 0, -1):
        order.append(j)
        x_hat = np.atleast_2d(session.channel_code.decode(received[j - 1], syndromes[j - 1]))
        payload = np.atleast_2d(session.source_map.compress(x_hat))
        codewords[j - 1] = x_hat
        payloads[j - 1] = payload
        if j > 1:
            syndromes[j - 2] = payload[:, :session.syndrome_size]

    transcript = ChainTranscript(payloads=payloads, codewords=codewords, syndromes=syndromes, outputs=received,
                                 decode_order=order)
    return decoded_message(session, transcript), transcript


def decoded_message(session: ChainSession, transcript: ChainTranscript) -> np.ndarray:
    k = session.config.k
    parts = [transcript.payloads[0]] + [transcript.payloads[j][:, session.syndrome_size:] for j in range(1, k - 1)]
    return np.concatenate(parts, axis=1)


def assess(session: ChainSession, sent: ChainTranscript, decoded: ChainTranscript, message: np.ndarray,
           estimate: np.ndarray) -> ChainOutcome:
    """Flags every trial against the four error types of the chain."""
    k = session.config.k
    alpha = session.config.alpha
    tolerance = session.config.settings.shaping_tolerance
    message = np.atleast_2d(message)
    batch = message.shape[0]

    ones = np.stack([x.mean(axis=1) for x in sent.codewords[:-1]], axis=1)
    shaping = np.any(np.abs(ones - alpha) > tolerance, axis=1)
    block = np.zeros(batch, dtype=bool)
    payload = np.zeros(batch, dtype=bool)
    for j in range(k - 1):
        wrong_word = np.any(decoded.codewords[j] != sent.codewords[j], axis=1)
        block |= wrong_word
        payload |= ~wrong_word & np.any(decoded.payloads[j] != sent.payloads[j], axis=1)
    terminal = np.any(decoded.codewords[-1] != sent.codewords[-1], axis=1)

    return ChainOutcome(
        message_error=np.any(estimate != message, axis=1),
        errors={SHAPING_ERROR: shaping, BLOCK_ERROR: block, TERMINAL_ERROR: terminal, PAYLOAD_ERROR: payload},
        ones_fraction=ones.mean(axis=1),
    )


def run_chain(session: ChainSession, message: np.ndarray, shared_seed: int, rng: Generators,
              corrupt_terminal: bool = False) -> Tuple[ChainOutcome, ChainTranscript, ChainTranscript]:
    """
    Encodes a batch of messages, sends every block through the channel and decodes backwards. With
    ``corrupt_terminal`` the last block is replaced by uniform noise before decoding.
    """
    message = np.atleast_2d(np.asarray(message, dtype=np.uint8))
    sent = chain_encode(session, message, shared_seed)
    ch = session.config.channel
    received = [sample_blocks(ch, x, rng) for x in sent.codewords]
    if corrupt_terminal and received[-1].size:
        rngs = block_generators(rng, message.shape[0])
        received[-1] = np.stack([r.integers(0, ch.output_size, size=session.terminal_length) for r in rngs])
    sent.outputs = received
    estimate, decoded = chain_decode(session, received, shared_seed)
    return assess(session, sent, decoded, message, estimate), sent, decoded
