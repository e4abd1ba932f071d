"""
Successive cancellation over the polar recursion tree in the LLR domain (L = ln P(0)/P(1)).

All recursions run on arrays shaped (tracks, batch, n): a track is one kind of evidence (the source prior alone, or
the prior together with the channel output) and the batch axis holds independent blocks. Every track shares the same
decisions, so the source-side and the channel-side distributions of the integrated scheme come out of one pass.
"""
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.special import expit

from asymcap.helpers import LLR_CLIP
from asymcap.polar.transform import polar_transform

KNOWN = -1
SOURCE_TRACK = 0
CHANNEL_TRACK = 1


@dataclass
class BitDistribution:
    prob_zero: float

    @property
    def llr(self) -> float:
        p0 = min(max(self.prob_zero, 0.0), 1.0)
        if p0 in (0.0, 1.0):
            return LLR_CLIP if p0 == 1.0 else -LLR_CLIP
        return float(np.log(p0) - np.log1p(-p0))


@dataclass
class SCResult:
    u: np.ndarray
    x: np.ndarray
    leaf_llrs: Optional[np.ndarray] = None


def check_node(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """LLR of the XOR of two independent bits, exact and stable for large magnitudes."""
    out = np.sign(a) * np.sign(b) * np.minimum(np.abs(a), np.abs(b)) \
        + np.log1p(np.exp(-np.abs(a + b))) - np.log1p(np.exp(-np.abs(a - b)))
    return np.clip(out, -LLR_CLIP, LLR_CLIP)


def bit_node(a: np.ndarray, b: np.ndarray, partial: np.ndarray) -> np.ndarray:
    """LLR of b given a ⊕ b = partial."""
    return np.clip(b + (1.0 - 2.0 * partial) * a, -LLR_CLIP, LLR_CLIP)


def clip_llrs(llrs: np.ndarray) -> np.ndarray:
    return np.clip(np.nan_to_num(llrs, nan=0.0, posinf=LLR_CLIP, neginf=-LLR_CLIP), -LLR_CLIP, LLR_CLIP)


def successive_cancellation(
        llrs: np.ndarray,
        rule: Sequence[int],
        known: Optional[np.ndarray] = None,
        record_leaves: bool = False) -> SCResult:
    """
    Runs the SC recursion in natural index order.

    :param llrs: leaf evidence of the transmitted bits, shape (tracks, batch, n).
    :param rule: per index, ``KNOWN`` to take the bit from ``known`` or the track whose hard decision is kept.
    :param known: bits of shape (batch, n); only the ``KNOWN`` positions are read.
    :param record_leaves: keep the LLR every track had at each index when it was decided.
    """
    llrs = clip_llrs(np.asarray(llrs, dtype=float))
    if llrs.ndim != 3:
        raise ValueError(f'Expected LLRs shaped (tracks, batch, n), got {llrs.shape}')
    tracks, batch, n = llrs.shape
    rule = np.asarray(rule, dtype=int)
    if rule.shape != (n,):
        raise ValueError(f'Decision rule must have length {n}, got {rule.shape}')
    if np.any(rule >= tracks) or np.any(rule < KNOWN):
        raise ValueError('Decision rule refers to a missing track')
    if known is None:
        if np.any(rule == KNOWN):
            raise ValueError('Known bits are required when the rule has known positions')
        known = np.zeros((batch, n), dtype=np.uint8)
    known = np.broadcast_to(np.asarray(known, dtype=np.uint8), (batch, n))

    u = np.zeros((batch, n), dtype=np.uint8)
    leaves = np.zeros((tracks, batch, n)) if record_leaves else None
    x = _descend(llrs, rule, known, 0, u, leaves)
    return SCResult(u=u, x=x, leaf_llrs=leaves)


def _descend(llrs, rule, known, offset, u, leaves) -> np.ndarray:
    n = llrs.shape[-1]
    block = slice(offset, offset + n)

    # a fully known subtree needs no evidence unless its leaves are recorded
    if leaves is None and np.all(rule[block] == KNOWN):
        u[:, block] = known[:, block]
        return polar_transform(known[:, block])

    if n == 1:
        track = rule[offset]
        if track == KNOWN:
            bit = known[:, offset]
        else:
            # ties go to 0
            bit = (llrs[track, :, 0] < 0).astype(np.uint8)
        u[:, offset] = bit
        if leaves is not None:
            leaves[:, :, offset] = llrs[:, :, 0]
        return bit[:, None].copy()

    half = n // 2
    first, second = llrs[..., :half], llrs[..., half:]
    v_first = _descend(check_node(first, second), rule, known, offset, u, leaves)
    v_second = _descend(bit_node(first, second, v_first), rule, known, offset + half, u, leaves)
    return np.concatenate([v_first ^ v_second, v_second], axis=-1)


def genie_leaf_llrs(llrs: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Leaf LLRs along the true trajectory u, the quantity Monte Carlo construction averages over."""
    n = np.asarray(llrs).shape[-1]
    return successive_cancellation(llrs, np.full(n, KNOWN), known=u, record_leaves=True).leaf_llrs


def prior_llr(alpha: float) -> float:
    """ln P(0)/P(1) for a Bernoulli(alpha) bit."""
    with np.errstate(divide='ignore'):
        return float(np.clip(np.log1p(-alpha) - np.log(alpha), -LLR_CLIP, LLR_CLIP))


def sc_bit_distribution(
        alpha: float,
        n: int,
        previous: Sequence[int],
        index: int,
        evidence: Optional[np.ndarray] = None) -> BitDistribution:
    """
    P(U_index = 0 | U_0..U_{index-1} = previous [, Y]) for X i.i.d. Bernoulli(alpha) and U = X·G_n (indices start at
    0). ``evidence`` holds the channel LLRs ln W(y_j|0)/W(y_j|1) of the received word; without it the result is the
    source-side distribution.
    """
    previous = np.asarray(previous, dtype=np.uint8)
    if not 0 <= index < n:
        raise ValueError(f'Index {index} out of range [0, {n})')
    if previous.size != index:
        raise ValueError(f'Expected {index} previous decisions, got {previous.size}')

    leaf = np.full(n, prior_llr(alpha))
    if evidence is not None:
        evidence = np.asarray(evidence, dtype=float)
        if evidence.shape != (n,):
            raise ValueError(f'Evidence must have length {n}, got {evidence.shape}')
        leaf = leaf + evidence

    u = np.zeros((1, n), dtype=np.uint8)
    u[0, :index] = previous
    leaves = genie_leaf_llrs(leaf[None, None, :], u)
    return BitDistribution(prob_zero=float(expit(leaves[0, 0, index])))


def bhattacharyya(leaf_llrs: np.ndarray) -> np.ndarray:
    """2·sqrt(p0·p1) of a bit with the given LLR."""
    return 1.0 / np.cosh(np.asarray(leaf_llrs) / 2.0)


def posterior_entropy(leaf_llrs: np.ndarray) -> np.ndarray:
    """Binary entropy in bits of a bit with the given LLR."""
    magnitude = np.abs(np.asarray(leaf_llrs, dtype=float))
    nats = np.logaddexp(0.0, -magnitude) + magnitude * expit(-magnitude)
    return nats / np.log(2)
