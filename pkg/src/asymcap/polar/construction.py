import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple

import click
import numpy as np
from tqdm import tqdm

from asymcap.dmc import Dmc, check_binary, sample_many, channel_from_dict
from asymcap.helpers import PolarSettings, polar_settings_non_nil, is_power_of_two, generator_for, complement, \
    ConfigurationError, MC_MIN_SAMPLES, RATE_POLICY, THRESHOLD_POLICY, CONTEXT_SCHEMA_VERSION, LLR_CLIP
from asymcap.polar.successive_cancellation import genie_leaf_llrs, bhattacharyya, posterior_entropy, prior_llr
from asymcap.polar.transform import polar_transform


@dataclass
class PolarContext:
    """
    Index sets of the integrated polar scheme together with the per-index estimates they were cut from.
    ``z_source[i]`` estimates Z(U_i | U_0..U_{i-1}) and ``z_channel[i]`` estimates Z(U_i | U_0..U_{i-1}, Y);
    ``h_source`` and ``h_channel`` are the matching conditional entropy estimates in bits.
    """

    n: int
    alpha: float
    channel: Dmc
    z_source: np.ndarray
    z_channel: np.ndarray
    h_source: np.ndarray
    h_channel: np.ndarray
    h_x: np.ndarray
    l_x: np.ndarray
    h_xy: np.ndarray
    l_xy: np.ndarray
    info_set: np.ndarray
    f_r: np.ndarray
    f_d: np.ndarray
    policy: str = RATE_POLICY
    threshold: Optional[float] = None
    samples: int = 0
    seed: int = 0

    @property
    def m(self) -> int:
        return int(np.log2(self.n))

    @property
    def rate(self) -> float:
        return self.info_set.size / self.n

    @property
    def compressed_set(self) -> np.ndarray:
        """Positions that carry the compressed source, the complement of L_X."""
        return complement(self.l_x, self.n)

    @property
    def syndrome_set(self) -> np.ndarray:
        """Positions the receiver has to be told to decode a block, equal to F_r under the rate policy."""
        return np.setdiff1d(self.compressed_set, self.l_xy)

    @property
    def decoded_set(self) -> np.ndarray:
        return np.intersect1d(self.compressed_set, self.l_xy)

    def error_bound(self) -> float:
        """Sum of the channel-side Bhattacharyya estimates over the information set."""
        return float(self.z_channel[self.info_set].sum())

    def source_llrs(self, batch: int = 1) -> np.ndarray:
        return np.full((batch, self.n), prior_llr(self.alpha))

    def channel_llrs(self, y: np.ndarray) -> np.ndarray:
        """Posterior leaf LLRs ln P(x=0|y)/P(x=1|y) for received column indices of shape (batch, n)."""
        table = self.channel.llr_table() + prior_llr(self.alpha)
        return np.clip(table[np.asarray(y, dtype=int)], -LLR_CLIP, LLR_CLIP)

    def to_dict(self) -> dict:
        return {
            'schema_version': CONTEXT_SCHEMA_VERSION,
            'n': self.n,
            'alpha': self.alpha,
            'channel': {**self.channel.to_dict(), 'name': self.channel.name},
            'policy': self.policy,
            'threshold': self.threshold,
            'samples': self.samples,
            'seed': self.seed,
            'z_source': self.z_source.tolist(),
            'z_channel': self.z_channel.tolist(),
            'h_source': self.h_source.tolist(),
            'h_channel': self.h_channel.tolist(),
            'sets': {
                name: getattr(self, name).tolist()
                for name in ('h_x', 'l_x', 'h_xy', 'l_xy', 'info_set', 'f_r', 'f_d')
            },
        }

    def to_json(self, filepath: Path):
        with filepath.open('w') as f:
            f.write(json.dumps(self.to_dict()))

    @staticmethod
    def from_dict(data: dict) -> 'PolarContext':
        version = data.get('schema_version')
        if version != CONTEXT_SCHEMA_VERSION:
            raise ValueError(f'Unsupported polar context schema version {version}')
        sets = {name: np.array(values, dtype=int) for name, values in data['sets'].items()}
        return PolarContext(
            n=int(data['n']),
            alpha=float(data['alpha']),
            channel=channel_from_dict(data['channel']),
            z_source=np.array(data['z_source'], dtype=float),
            z_channel=np.array(data['z_channel'], dtype=float),
            h_source=np.array(data['h_source'], dtype=float),
            h_channel=np.array(data['h_channel'], dtype=float),
            policy=data['policy'],
            threshold=data['threshold'],
            samples=int(data['samples']),
            seed=int(data['seed']),
            **sets,
        )

    @staticmethod
    def read(filepath: Path) -> 'PolarContext':
        with filepath.open() as f:
            return PolarContext.from_dict(json.load(f))


def build_context(
        ch: Dmc,
        alpha: float,
        n: int,
        rng: np.random.Generator,
        rate: Optional[float] = None,
        samples: Optional[int] = None,
        settings: Optional[PolarSettings] = None) -> PolarContext:
    """
    Estimates the source-side and channel-side Bhattacharyya parameters of every synthetic bit by Monte Carlo and
    cuts the index sets of the integrated scheme from them.

    :param rate: information rate of the rate-targeted policy; by default the estimated I(X;Y) is used.
    :param samples: number of (X, Y) draws, overriding ``settings.samples``.
    """
    settings = polar_settings_non_nil(settings)
    samples = settings.samples if samples is None else samples
    check_binary(ch)
    if not is_power_of_two(n):
        raise ValueError(f'Block length must be a power of two, got {n}')
    if samples < MC_MIN_SAMPLES:
        raise ValueError(f'At least {MC_MIN_SAMPLES} Monte Carlo samples are required, got {samples}')
    if not 0.0 < alpha < 1.0:
        raise ValueError(f'Source bias must lie strictly between 0 and 1, got {alpha}')

    seed = int(rng.integers(2 ** 63))
    z_source, z_channel, h_source, h_channel = estimate_reliabilities(ch, alpha, n, samples, seed, settings)

    if settings.policy == RATE_POLICY:
        sets = rate_targeted_sets(z_source, z_channel, h_source, h_channel, rate)
        threshold = None
    elif settings.policy == THRESHOLD_POLICY:
        if rate is not None:
            raise ConfigurationError('A target rate only applies to the rate-targeted policy')
        sets = threshold_sets(z_source, z_channel, settings.threshold)
        threshold = settings.threshold
    else:
        raise ConfigurationError(f'Unknown construction policy {settings.policy}')

    h_x, l_x, h_xy, l_xy, info_set = sets
    f_d = complement(h_x, n)
    f_r = np.setdiff1d(h_x, l_xy)
    return PolarContext(
        n=n, alpha=float(alpha), channel=ch,
        z_source=z_source, z_channel=z_channel, h_source=h_source, h_channel=h_channel,
        h_x=h_x, l_x=l_x, h_xy=h_xy, l_xy=l_xy, info_set=info_set, f_r=f_r, f_d=f_d,
        policy=settings.policy, threshold=threshold, samples=samples, seed=seed,
    )


def estimate_reliabilities(
        ch: Dmc,
        alpha: float,
        n: int,
        samples: int,
        seed: int,
        settings: PolarSettings) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Sample means of Z and of the posterior entropy along true trajectories, chunk by chunk in a fixed order."""
    z_sum = np.zeros((2, n))
    h_sum = np.zeros((2, n))
    llr_table = np.clip(ch.llr_table() + prior_llr(alpha), -LLR_CLIP, LLR_CLIP)
    source_leaf = prior_llr(alpha)

    chunks = range(0, samples, settings.batch_size)
    for chunk, start in enumerate(tqdm(chunks, desc='Estimating Bhattacharyya parameters',
                                       disable=not settings.progress)):
        batch = min(settings.batch_size, samples - start)
        chunk_rng = generator_for(seed, chunk)
        x = (chunk_rng.random((batch, n)) < alpha).astype(np.uint8)
        y = sample_many(ch, x, chunk_rng)
        u = polar_transform(x)

        llrs = np.stack([np.full((batch, n), source_leaf), llr_table[y]])
        leaves = genie_leaf_llrs(llrs, u)
        z_sum += bhattacharyya(leaves).sum(axis=1)
        h_sum += posterior_entropy(leaves).sum(axis=1)

    z = z_sum / samples
    h = h_sum / samples
    return z[0], z[1], h[0], h[1]


def rate_targeted_sets(
        z_source: np.ndarray,
        z_channel: np.ndarray,
        h_source: np.ndarray,
        h_channel: np.ndarray,
        rate: Optional[float] = None) -> Tuple[np.ndarray, ...]:
    """
    H_X holds the round(sum of source entropies) least reliable source-side indices, L_X the rest. The information
    set is the k most reliable channel-side indices inside H_X and L_{X|Y} is the shortest most-reliable-first
    prefix that contains them.
    """
    n = z_source.size
    size_hx = int(np.clip(round(float(h_source.sum())), 0, n))
    h_x = np.sort(np.argsort(-z_source, kind='stable')[:size_hx])
    l_x = complement(h_x, n)

    if rate is None:
        k = int(np.clip(round(float(h_source.sum() - h_channel.sum())), 0, size_hx))
    else:
        if rate < 0:
            raise ValueError(f'Rate must be nonnegative, got {rate}')
        k = int(round(rate * n))
        if k > size_hx:
            raise ConfigurationError(f'Rate {rate} asks for {k} information bits but only {size_hx} source '
                                     f'positions are nearly uniform')

    in_hx = np.zeros(n, dtype=bool)
    in_hx[h_x] = True
    order = np.argsort(z_channel, kind='stable')
    if k == 0:
        prefix = 0
    else:
        prefix = int(np.flatnonzero(in_hx[order])[k - 1]) + 1
    l_xy = np.sort(order[:prefix])
    info_set = np.intersect1d(h_x, l_xy)
    h_xy = np.setdiff1d(h_x, l_xy)
    return h_x, l_x, h_xy, l_xy, info_set


def threshold_sets(z_source: np.ndarray, z_channel: np.ndarray, delta: float) -> Tuple[np.ndarray, ...]:
    if not 0.0 < delta < 0.5:
        raise ValueError(f'Threshold must lie in (0, 0.5), got {delta}')
    h_x = np.flatnonzero(z_source >= 1.0 - delta)
    l_x = np.flatnonzero(z_source <= delta)
    h_xy = np.flatnonzero(z_channel >= 1.0 - delta)
    l_xy = np.flatnonzero(z_channel <= delta)
    outside = np.setdiff1d(h_xy, h_x)
    if outside.size > 0:
        click.echo(f'Warning: {outside.size} indices are in H_X|Y but not in H_X, Monte Carlo noise exceeds the '
                   f'threshold margin', err=True)
    info_set = np.intersect1d(h_x, l_xy)
    return h_x, l_x, h_xy, l_xy, info_set


def bec_bhattacharyya(erasure: float, n: int) -> np.ndarray:
    """Exact Bhattacharyya parameters of the synthetic channels of BEC(erasure) in natural index order."""
    if not is_power_of_two(n):
        raise ValueError(f'Block length must be a power of two, got {n}')
    z = np.array([erasure], dtype=float)
    while z.size < n:
        # the children of a parent occupy the two halves of its subtree, check child first
        z = np.stack([2.0 * z - z ** 2, z ** 2], axis=1).reshape(-1)
    return z
