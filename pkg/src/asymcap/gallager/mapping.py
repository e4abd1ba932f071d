from dataclasses import dataclass
from fractions import Fraction
from math import lcm
from typing import List, Optional

import numpy as np

from asymcap.dmc import Dmc, InputDist, symmetric_capacity
from asymcap.helpers import ConvergenceError, ConfigurationError, is_power_of_two

QARY = 'qary'
BINARY = 'binary'

MAX_DENOMINATOR = 1 << 20
MAX_BITS = 20

# guards floor() against p·d landing a hair below an integer
ROUNDING_SLACK = 1e-9


@dataclass(frozen=True)
class RationalApprox:
    target: InputDist
    approx: InputDist
    numerators: tuple
    denominator: int
    d_lcd: int
    tv_distance: float
    t: Optional[int] = None

    @property
    def fractions(self) -> List[Fraction]:
        return [Fraction(n, self.denominator) for n in self.numerators]


@dataclass(frozen=True)
class Mapper:
    """
    Many-to-one map from a uniform extended alphabet onto X. For the binary kind the extended symbol is the integer
    with bits u_1 (most significant) .. u_t.
    """

    extended_size: int
    table: np.ndarray
    kind: str
    t: Optional[int] = None

    def preimage_sizes(self, input_size: int) -> np.ndarray:
        return np.bincount(self.table, minlength=input_size)

    def __call__(self, v: np.ndarray) -> np.ndarray:
        return self.table[np.asarray(v, dtype=int)]


def _round_to(p: np.ndarray, d: int) -> np.ndarray:
    counts = np.floor(p * d + ROUNDING_SLACK).astype(int)
    counts = np.minimum(counts, d)
    counts[int(np.argmax(p))] += d - counts.sum()
    return counts


def approximate(p_star: InputDist, delta: float, binary: bool = False) -> RationalApprox:
    """
    Smallest denominator (any d in q-ary mode, d = 2^t in binary mode) whose floor-rounded approximation, residue
    given to the largest-mass symbol, is strictly closer than ``delta`` in total variation.
    """
    if not 0.0 < delta < 0.125:
        raise ValueError(f'delta must lie in (0, 1/8), got {delta}')

    p = p_star.p
    if binary:
        candidates = (1 << t for t in range(0, MAX_BITS + 1))
    else:
        candidates = range(1, MAX_DENOMINATOR + 1)

    for d in candidates:
        counts = _round_to(p, d)
        if np.any(counts < 0):
            continue
        tv = 0.5 * float(np.abs(p - counts / d).sum())
        if tv < delta:
            break
    else:
        raise ConvergenceError(f'No denominator up to the search limit approximates {p_star.to_list()} '
                               f'within {delta}')

    d_lcd = 1
    for count in counts:
        d_lcd = lcm(d_lcd, Fraction(int(count), d).denominator)
    t = int(np.log2(d)) if binary else (int(np.log2(d_lcd)) if is_power_of_two(d_lcd) else None)
    return RationalApprox(
        target=p_star,
        approx=InputDist(counts / d),
        numerators=tuple(int(c) for c in counts),
        denominator=d,
        d_lcd=d_lcd,
        tv_distance=tv,
        t=t,
    )


def build_mapper(ra: RationalApprox, binary: bool = False) -> Mapper:
    """
    Canonical block assignment: the first p̃(0)·|V| extended symbols map to 0, the next p̃(1)·|V| to 1, and so on.
    The binary kind uses |V| = 2^t and needs ``ra`` to come from a binary sweep (or to have a power-of-two d_lcd).
    """
    if binary:
        if ra.t is None:
            raise ConfigurationError(f'A binary mapper needs a power-of-two denominator, got d_lcd = {ra.d_lcd}')
        size = 1 << ra.t
    else:
        size = ra.d_lcd
    counts = [int(f * size) for f in ra.fractions]
    table = np.repeat(np.arange(len(counts)), counts)
    table.setflags(write=False)
    return Mapper(extended_size=size, table=table, kind=BINARY if binary else QARY, t=ra.t if binary else None)


def as_binary(m: Mapper) -> Mapper:
    """A q-ary mapper over 2^r symbols read as r binary levels."""
    if m.kind == BINARY:
        return m
    if not is_power_of_two(m.extended_size):
        raise ConfigurationError(f'Only extended alphabets of size 2^r are coded, got |V| = {m.extended_size}')
    return Mapper(extended_size=m.extended_size, table=m.table, kind=BINARY, t=int(np.log2(m.extended_size)))


def induced_channel(ch: Dmc, m: Mapper) -> Dmc:
    """W'(y|v) = W(y|f(v))."""
    if m.kind != QARY:
        raise ValueError('The induced channel is defined for q-ary mappers')
    _check_alphabet(ch, m)
    return Dmc(ch.w[m.table], name=f'{ch.name}∘f' if ch.name else '')


def _check_alphabet(ch: Dmc, m: Mapper):
    if m.table.max() >= ch.input_size:
        raise ValueError(f'Mapper produces symbol {m.table.max()} but the channel has {ch.input_size} inputs')


def synthetic_matrix(ch: Dmc, m: Mapper, level: int) -> np.ndarray:
    """
    Unpruned transition matrix of W''_level (levels start at 1), shape (2, |Y|·2^(level-1)); the output index of
    (y, u_1..u_{level-1}) is y·2^(level-1) + the integer with bits u_1 (most significant) .. u_{level-1}.
    """
    if m.kind != BINARY:
        raise ValueError('Synthetic channels are defined for binary mappers')
    _check_alphabet(ch, m)
    t = m.t
    if not 1 <= level <= t:
        raise ValueError(f'Level must lie in [1, {t}], got {level}')

    w = ch.w[m.table].reshape((2,) * t + (ch.output_size,))
    w = w.sum(axis=tuple(range(level, t)))
    # axes are now u_1..u_level, y; reorder to u_level, y, u_1..u_{level-1}
    w = np.transpose(w, (level - 1, level) + tuple(range(level - 1)))
    return w.reshape(2, -1) / 2 ** (t - 1)


def synthetic_channels(ch: Dmc, m: Mapper) -> List[Dmc]:
    return [Dmc(synthetic_matrix(ch, m, level), name=f'W\'\'_{level}') for level in range(1, m.t + 1)]


def chain_rule_terms(ch: Dmc, m: Mapper) -> List[float]:
    """Symmetric capacity of each synthetic channel; they add up to I(X;Y) at the approximated input."""
    return [symmetric_capacity(w) for w in synthetic_channels(ch, m)]


def mapper_size_growth(p_star: InputDist, deltas: List[float], binary: bool = True) -> List[int]:
    """Extended alphabet size needed for each delta; grows as the approximation tightens."""
    return [build_mapper(approximate(p_star, delta, binary), binary).extended_size for delta in deltas]
