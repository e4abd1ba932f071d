"""
Sparse-graph version of the integrated scheme. The parity checks split into P1, whose values carry the message, and
P2, whose values are shared randomness. The encoder turns the full syndrome into a biased word by decimation; the
receiver knows P2·x only and recovers P1·x from its estimate of x.
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from asymcap.dmc import Dmc, InputDist, conditional_entropy, mutual_information, sample_blocks
from asymcap.helpers import SparseSettings, Generators, sparse_settings_non_nil, shared_bits, h2, ConfigurationError, \
    SHAPING_TOLERANCE
from asymcap.sparse.bp import bp_decode_biased
from asymcap.sparse.decimation import bp_decimate_encode
from asymcap.sparse.graph import SparseGraph, build_graph, select_checks, syndrome


@dataclass
class IntegratedCode:
    channel: Dmc
    alpha: float
    graph: SparseGraph
    info_checks: SparseGraph
    shared_checks: SparseGraph

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def message_length(self) -> int:
        return self.info_checks.m

    @property
    def rate(self) -> float:
        return self.message_length / self.n


@dataclass
class IntegratedOutcome:
    """Per block: the encoder missed the target bias or left checks unfulfilled, the decoder got x wrong."""

    encoder_failure: np.ndarray
    decoder_failure: np.ndarray
    message_error: np.ndarray
    ones_fraction: np.ndarray
    unfulfilled: np.ndarray


def build_integrated_code(ch: Dmc, alpha: float, n: int, variable_degree: int, seed: int,
                          settings: Optional[SparseSettings] = None) -> IntegratedCode:
    """
    |P2| = round(n·(H(X|Y) + shared_margin)) and |P1| = round(n·(h2(alpha) - info_margin)) - |P2|, so the two margins
    are paid for in message rate.
    """
    settings = sparse_settings_non_nil(settings)
    p = InputDist.bernoulli(alpha)
    shared = int(round(n * (conditional_entropy(ch, p) + settings.shared_margin)))
    total = int(round(n * (h2(alpha) - settings.info_margin)))
    info = total - shared
    if info <= 0:
        raise ConfigurationError(f'No room for message checks: {total} checks in total, {shared} shared '
                                 f'(I(X;Y) = {mutual_information(ch, p):.4f})')
    g = build_graph(n, total, variable_degree, seed)
    return IntegratedCode(
        channel=ch,
        alpha=float(alpha),
        graph=g,
        info_checks=select_checks(g, np.arange(info)),
        shared_checks=select_checks(g, np.arange(info, total)),
    )


def integrated_encode(code: IntegratedCode, message: np.ndarray, shared_seed: int, rng: Generators,
                      settings: Optional[SparseSettings] = None):
    """Returns the decimation result for syndrome (message, shared bits); ``.x`` is the word to transmit."""
    message = np.atleast_2d(np.asarray(message, dtype=np.uint8))
    if message.shape[1] != code.message_length:
        raise ValueError(f'Expected {code.message_length} message bits, got {message.shape[1]}')
    shared = np.broadcast_to(shared_bits(shared_seed, code.shared_checks.m), (message.shape[0], code.shared_checks.m))
    target = np.concatenate([message, shared], axis=1)
    return bp_decimate_encode(code.graph, target, code.alpha, rng, settings)


def integrated_decode(code: IntegratedCode, y: np.ndarray, shared_seed: int,
                      settings: Optional[SparseSettings] = None):
    """Returns (message estimate, x estimate, shared checks satisfied)."""
    y = np.atleast_2d(np.asarray(y, dtype=int))
    shared = shared_bits(shared_seed, code.shared_checks.m)
    result = bp_decode_biased(code.shared_checks, code.channel, code.alpha, y, shared, settings)
    return syndrome(code.info_checks, result.x), result.x, result.satisfied


def run_integrated(code: IntegratedCode, message: np.ndarray, shared_seed: int, rng: Generators,
                   settings: Optional[SparseSettings] = None,
                   shaping_tolerance: float = SHAPING_TOLERANCE) -> IntegratedOutcome:
    """Encodes, transmits and decodes a batch of messages, classifying each block."""
    message = np.atleast_2d(np.asarray(message, dtype=np.uint8))
    encoded = integrated_encode(code, message, shared_seed, rng, settings)
    x = np.atleast_2d(encoded.x)
    y = sample_blocks(code.channel, x, rng)
    estimate, x_hat, _ = integrated_decode(code, y, shared_seed, settings)
    ones = x.mean(axis=1)
    unfulfilled = np.atleast_1d(encoded.unfulfilled)
    return IntegratedOutcome(
        encoder_failure=(unfulfilled > 0) | (np.abs(ones - code.alpha) > shaping_tolerance),
        decoder_failure=np.any(x_hat != x, axis=1),
        message_error=np.any(estimate != message, axis=1),
        ones_fraction=ones,
        unfulfilled=unfulfilled,
    )
