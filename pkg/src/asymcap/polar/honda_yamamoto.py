"""
Integrated polar scheme: the information set carries the message, F_r carries bits both ends draw from a shared seed,
F_d is computed by the encoder from the source-side distribution alone so the receiver can recompute it without
looking at the channel output. Every function accepts a single block or a batch with blocks along the first axis.
"""
from typing import Tuple, Optional

import numpy as np

from asymcap.helpers import shared_bits
from asymcap.polar.construction import PolarContext
from asymcap.polar.successive_cancellation import successive_cancellation, KNOWN, SOURCE_TRACK, CHANNEL_TRACK
from asymcap.polar.transform import polar_transform


def _as_batch(bits: np.ndarray, width: int, what: str, dtype=np.uint8) -> Tuple[np.ndarray, bool]:
    bits = np.asarray(bits, dtype=dtype)
    single = bits.ndim == 1
    bits = np.atleast_2d(bits)
    if bits.ndim != 2 or bits.shape[1] != width:
        raise ValueError(f'Expected {width} {what} per block, got shape {bits.shape}')
    return bits, single


def _unbatch(bits: np.ndarray, single: bool) -> np.ndarray:
    return bits[0] if single else bits


def frozen_bits(ctx: PolarContext, shared_seed: int, *key: int) -> np.ndarray:
    return shared_bits(shared_seed, ctx.f_r.size, *key)


def hy_encode(ctx: PolarContext, message: np.ndarray, shared_seed: int, *key: int) -> np.ndarray:
    """Builds the transmitted word x = u·G_n; ``key`` selects a shared-randomness stream (per block or level)."""
    message, single = _as_batch(message, ctx.info_set.size, 'message bits')
    batch = message.shape[0]

    known = np.zeros((batch, ctx.n), dtype=np.uint8)
    known[:, ctx.f_r] = frozen_bits(ctx, shared_seed, *key)
    known[:, ctx.info_set] = message
    rule = np.full(ctx.n, KNOWN)
    rule[ctx.f_d] = SOURCE_TRACK

    result = successive_cancellation(ctx.source_llrs(batch)[None], rule, known)
    return _unbatch(result.x, single)


def hy_decode(ctx: PolarContext, y: Optional[np.ndarray], shared_seed: int, *key: int,
              llrs: Optional[np.ndarray] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    Returns (message estimate, u estimate) from received output column indices, or from channel-side leaf LLRs
    passed as ``llrs`` when the received symbols are not outputs of ``ctx.channel`` itself.
    """
    if llrs is None:
        y, single = _as_batch(y, ctx.n, 'channel outputs', dtype=int)
        llrs = ctx.channel_llrs(y)
    else:
        llrs, single = _as_batch(llrs, ctx.n, 'channel LLRs', dtype=float)
    batch = llrs.shape[0]

    known = np.zeros((batch, ctx.n), dtype=np.uint8)
    known[:, ctx.f_r] = frozen_bits(ctx, shared_seed, *key)
    rule = np.full(ctx.n, KNOWN)
    rule[ctx.f_d] = SOURCE_TRACK
    rule[ctx.info_set] = CHANNEL_TRACK

    u = successive_cancellation(np.stack([ctx.source_llrs(batch), llrs]), rule, known).u
    return _unbatch(u[:, ctx.info_set], single), _unbatch(u, single)


def syndrome_decode(ctx: PolarContext, y: np.ndarray, syndrome: np.ndarray,
                    llrs: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Recovers u when the receiver is handed u on ``ctx.syndrome_set`` instead of drawing it from a shared seed.
    Positions of L_X follow the source side, the remaining ones the channel side. ``llrs`` replaces the channel-side
    leaf evidence computed from ``y``.
    """
    syndrome, single = _as_batch(syndrome, ctx.syndrome_set.size, 'syndrome bits')
    batch = syndrome.shape[0]

    known = np.zeros((batch, ctx.n), dtype=np.uint8)
    known[:, ctx.syndrome_set] = syndrome
    rule = np.full(ctx.n, KNOWN)
    rule[ctx.l_x] = SOURCE_TRACK
    rule[ctx.decoded_set] = CHANNEL_TRACK

    if llrs is None:
        y, _ = _as_batch(y, ctx.n, 'channel outputs', dtype=int)
        llrs = ctx.channel_llrs(y)
    llrs = np.broadcast_to(np.atleast_2d(np.asarray(llrs, dtype=float)), (batch, ctx.n))
    u = successive_cancellation(np.stack([ctx.source_llrs(batch), llrs]), rule, known).u
    return _unbatch(u, single)


def source_compress(ctx: PolarContext, x: np.ndarray) -> np.ndarray:
    """Keeps u = x·G_n on the complement of L_X."""
    x, single = _as_batch(x, ctx.n, 'source bits')
    return _unbatch(polar_transform(x)[:, ctx.compressed_set], single)


def source_decompress(ctx: PolarContext, bits: np.ndarray) -> np.ndarray:
    """
    Places the given bits on the complement of L_X and fills L_X by source-side hard decisions. Fed with uniform
    bits this produces words distributed close to i.i.d. Bernoulli(alpha).
    """
    bits, single = _as_batch(bits, ctx.compressed_set.size, 'compressed bits')
    batch = bits.shape[0]

    known = np.zeros((batch, ctx.n), dtype=np.uint8)
    known[:, ctx.compressed_set] = bits
    rule = np.full(ctx.n, KNOWN)
    rule[ctx.l_x] = SOURCE_TRACK
    result = successive_cancellation(ctx.source_llrs(batch)[None], rule, known)
    return _unbatch(result.x, single)
