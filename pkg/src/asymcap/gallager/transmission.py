"""
Transmission over a mapper: the t binary levels are coded separately with polar codes at uniform input over the
synthetic channels, combined symbol-wise into x = g(u_1, .., u_t), and decoded level after level where decoder j sees
the channel output together with the re-encoded hard estimates of levels 1..j-1.
"""
from dataclasses import dataclass, field
from typing import List, Optional

import click
import numpy as np

from asymcap.dmc import Dmc, capacity, mutual_information, symmetric_capacity
from asymcap.gallager.bounds import mi_perturbation_bounds, PerturbationBounds
from asymcap.gallager.mapping import Mapper, RationalApprox, approximate, build_mapper, as_binary, \
    synthetic_channels, synthetic_matrix
from asymcap.helpers import GallagerSettings, PolarSettings, gallager_settings_non_nil, ConfigurationError, \
    print_section_boundaries
from asymcap.polar.construction import PolarContext, build_context
from asymcap.polar.honda_yamamoto import hy_encode, hy_decode
from asymcap.polar.successive_cancellation import clip_llrs
from asymcap.polar.transform import polar_transform


@dataclass
class GallagerCode:
    channel: Dmc
    approximation: RationalApprox
    mapper: Mapper
    levels: List[PolarContext]
    level_capacities: List[float]
    bounds: PerturbationBounds
    capacity: float
    _matrices: List[np.ndarray] = field(default_factory=list, repr=False)

    @property
    def n(self) -> int:
        return self.levels[0].n

    @property
    def message_length(self) -> int:
        return sum(ctx.info_set.size for ctx in self.levels)

    @property
    def rate(self) -> float:
        """Bits per channel use."""
        return self.message_length / self.n

    @property
    def mutual_information(self) -> float:
        return mutual_information(self.channel, self.approximation.approx)

    def level_llrs(self, level: int, y: np.ndarray, prefix: np.ndarray) -> np.ndarray:
        """Leaf LLRs of level ``level`` (from 1) given output columns y and the integer of the decoded prefix."""
        w = self._matrices[level - 1]
        labels = np.asarray(y, dtype=int) * 2 ** (level - 1) + prefix
        with np.errstate(divide='ignore', invalid='ignore'):
            llrs = np.log(w[0, labels]) - np.log(w[1, labels])
        # a wrong prefix can point at an output no input produces; it carries no evidence
        return clip_llrs(llrs)


@print_section_boundaries('Gallager mapping construction')
def build_gallager_code(
        ch: Dmc,
        n: int,
        rng: np.random.Generator,
        rates: Optional[List[float]] = None,
        settings: Optional[GallagerSettings] = None,
        polar_settings: Optional[PolarSettings] = None) -> GallagerCode:
    """
    Approximates the capacity-achieving input, builds the mapper and one polar code per level. Level j runs at
    ``rates[j]`` if given, otherwise at ``settings.backoff`` times the symmetric capacity of W''_j.
    """
    settings = gallager_settings_non_nil(settings)
    report = capacity(ch)
    ra = approximate(report.optimal_input, settings.delta, binary=settings.binary)
    if np.count_nonzero(ra.numerators) < 2:
        raise ConfigurationError(f'The input approximation {ra.approx.to_list()} is a point mass, there is no '
                                 f'binary level to code')
    mapper = as_binary(build_mapper(ra, binary=settings.binary))
    bounds = mi_perturbation_bounds(ch, report.optimal_input, ra.approx)
    click.echo(f'Input approximation: {ra.approx.to_list()} with |V| = {mapper.extended_size}, '
               f'TV distance {ra.tv_distance:.3g}', err=True)

    channels = synthetic_channels(ch, mapper)
    level_capacities = [symmetric_capacity(w) for w in channels]
    if rates is None:
        rates = [settings.backoff * c for c in level_capacities]
    if len(rates) != len(channels):
        raise ConfigurationError(f'Expected {len(channels)} level rates, got {len(rates)}')
    for level, (rate, cap) in enumerate(zip(rates, level_capacities), start=1):
        if rate > cap:
            raise ConfigurationError(f'Level {level} rate {rate:.4f} exceeds its symmetric capacity {cap:.4f}')

    levels = []
    for level, (w, rate) in enumerate(zip(channels, rates), start=1):
        click.echo(f'Level {level}: I_s = {level_capacities[level - 1]:.4f}, rate = {rate:.4f}', err=True)
        levels.append(build_context(w, 0.5, n, rng, rate=rate, settings=polar_settings))

    return GallagerCode(
        channel=ch,
        approximation=ra,
        mapper=mapper,
        levels=levels,
        level_capacities=level_capacities,
        bounds=bounds,
        capacity=report.capacity,
        _matrices=[synthetic_matrix(ch, mapper, level) for level in range(1, mapper.t + 1)],
    )


def gallager_encode(code: GallagerCode, message: np.ndarray, shared_seed: int) -> np.ndarray:
    """Maps message bits (a block or a batch of blocks) to channel input symbols."""
    message = np.asarray(message, dtype=np.uint8)
    single = message.ndim == 1
    message = np.atleast_2d(message)
    if message.shape[1] != code.message_length:
        raise ValueError(f'Expected {code.message_length} message bits, got {message.shape[1]}')

    extended = np.zeros((message.shape[0], code.n), dtype=int)
    start = 0
    for level, ctx in enumerate(code.levels, start=1):
        k = ctx.info_set.size
        codeword = hy_encode(ctx, message[:, start:start + k], shared_seed, level)
        extended = 2 * extended + codeword
        start += k
    x = code.mapper(extended)
    return x[0] if single else x


def gallager_decode(code: GallagerCode, y: np.ndarray, shared_seed: int) -> np.ndarray:
    y = np.asarray(y, dtype=int)
    single = y.ndim == 1
    y = np.atleast_2d(y)

    prefix = np.zeros(y.shape, dtype=int)
    estimates = []
    for level, ctx in enumerate(code.levels, start=1):
        llrs = code.level_llrs(level, y, prefix)
        message, u = hy_decode(ctx, None, shared_seed, level, llrs=llrs)
        estimates.append(message)
        # hard re-encoded estimate of this level joins the conditioning of the next one
        prefix = 2 * prefix + polar_transform(u)
    message = np.concatenate(estimates, axis=1)
    return message[0] if single else message
