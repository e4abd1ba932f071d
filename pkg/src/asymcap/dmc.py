import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
from scipy.special import xlogy

from asymcap.helpers import PROBABILITY_TOLERANCE, BA_TOLERANCE, BA_MAX_ITERATIONS, ConvergenceError, Generators, h2, \
    block_generators


@dataclass(frozen=True)
class InputDist:
    """Probability vector over the input alphabet."""

    p: np.ndarray

    def __init__(self, p: Sequence[float]):
        p = np.array(p, dtype=float)
        if p.ndim != 1 or p.size == 0:
            raise ValueError(f'Input distribution must be a non-empty vector, got shape {p.shape}')
        if np.any(p < -PROBABILITY_TOLERANCE) or np.any(p > 1 + PROBABILITY_TOLERANCE):
            raise ValueError(f'Input distribution entries must lie in [0, 1], got {p}')
        if abs(p.sum() - 1.0) > PROBABILITY_TOLERANCE:
            raise ValueError(f'Input distribution must sum to 1, got {p.sum()}')
        p = np.clip(p, 0.0, 1.0)
        p.setflags(write=False)
        object.__setattr__(self, 'p', p)

    @classmethod
    def uniform(cls, size: int) -> 'InputDist':
        return cls(np.full(size, 1.0 / size))

    @classmethod
    def bernoulli(cls, alpha: float) -> 'InputDist':
        """Binary input with P(1) = alpha."""
        return cls([1.0 - alpha, alpha])

    @property
    def size(self) -> int:
        return self.p.size

    def tv_distance(self, other: 'InputDist') -> float:
        if self.size != other.size:
            raise ValueError(f'Alphabet sizes differ: {self.size} vs {other.size}')
        return 0.5 * float(np.abs(self.p - other.p).sum())

    def entropy(self) -> float:
        return entropy(self.p)

    def to_list(self) -> list:
        return [float(v) for v in self.p]

    def __eq__(self, other):
        return isinstance(other, InputDist) and np.array_equal(self.p, other.p)

    def __hash__(self):
        return hash(self.p.tobytes())


@dataclass(frozen=True)
class Dmc:
    """
    Discrete memoryless channel W(y|x) stored as a row-stochastic matrix. Output symbols that no input can produce
    are pruned at construction; ``output_labels[j]`` is the original index of column ``j``.
    """

    w: np.ndarray
    output_labels: np.ndarray
    name: str = ''
    _label_lookup: np.ndarray = field(default=None, repr=False, compare=False)

    def __init__(self, w, name: str = '', output_labels: Optional[Sequence[int]] = None):
        w = np.array(w, dtype=float)
        if w.ndim != 2 or w.shape[0] == 0 or w.shape[1] == 0:
            raise ValueError(f'Channel matrix must be a non-empty 2-D array, got shape {w.shape}')
        if np.any(w < 0.0) or np.any(w > 1.0):
            raise ValueError('Channel entries must lie in [0, 1]')
        row_sums = w.sum(axis=1)
        if np.any(np.abs(row_sums - 1.0) > PROBABILITY_TOLERANCE):
            raise ValueError(f'Channel rows must sum to 1, got {row_sums}')

        labels = np.arange(w.shape[1]) if output_labels is None else np.array(output_labels, dtype=int)
        if labels.size != w.shape[1]:
            raise ValueError(f'Expected {w.shape[1]} output labels, got {labels.size}')
        reachable = w.sum(axis=0) > 0
        w = w[:, reachable]
        labels = labels[reachable]
        w.setflags(write=False)
        labels.setflags(write=False)

        lookup = np.full(int(labels.max()) + 1, -1, dtype=int)
        lookup[labels] = np.arange(labels.size)
        lookup.setflags(write=False)

        object.__setattr__(self, 'w', w)
        object.__setattr__(self, 'output_labels', labels)
        object.__setattr__(self, 'name', name)
        object.__setattr__(self, '_label_lookup', lookup)

    @property
    def input_size(self) -> int:
        return self.w.shape[0]

    @property
    def output_size(self) -> int:
        return self.w.shape[1]

    @property
    def is_binary(self) -> bool:
        return self.input_size == 2

    def columns_of(self, labels: Union[int, np.ndarray]) -> np.ndarray:
        """Maps original output labels to column indices of the pruned matrix."""
        labels = np.asarray(labels, dtype=int)
        if np.any(labels < 0) or np.any(labels >= self._label_lookup.size):
            raise ValueError('Output label out of range')
        columns = self._label_lookup[labels]
        if np.any(columns < 0):
            raise ValueError('Output label refers to an unreachable output')
        return columns

    def llr_table(self) -> np.ndarray:
        """ln W(y|0)/W(y|1) per output column of a binary-input channel, ±inf where one side is zero."""
        check_binary(self)
        with np.errstate(divide='ignore'):
            return np.log(self.w[0]) - np.log(self.w[1])

    def permute_inputs(self, permutation: Sequence[int]) -> 'Dmc':
        return Dmc(self.w[np.asarray(permutation)], name=self.name)

    def permute_outputs(self, permutation: Sequence[int]) -> 'Dmc':
        return Dmc(self.w[:, np.asarray(permutation)], name=self.name)

    def to_dict(self) -> dict:
        return {'input_size': self.input_size, 'output_size': self.output_size, 'w': self.w.tolist()}

    def to_json(self, filepath: Path):
        with filepath.open('w') as f:
            f.write(json.dumps(self.to_dict()))

    def __eq__(self, other):
        return isinstance(other, Dmc) and np.array_equal(self.w, other.w)

    def __hash__(self):
        return hash(self.w.tobytes())


@dataclass
class InfoReport:
    mutual_information: float
    capacity: float
    symmetric_capacity: float
    optimal_input: InputDist
    conditional_entropy_x_given_y: float
    iterations: int = 0

    def to_dict(self) -> dict:
        return {
            'mutual_information': self.mutual_information,
            'capacity': self.capacity,
            'symmetric_capacity': self.symmetric_capacity,
            'optimal_input': self.optimal_input.to_list(),
            'conditional_entropy_x_given_y': self.conditional_entropy_x_given_y,
            'iterations': self.iterations,
        }


# Channel presets

def bsc(p: float) -> Dmc:
    return Dmc([[1 - p, p], [p, 1 - p]], name=f'bsc({p})')


def bec(e: float) -> Dmc:
    # outputs: 0, 1, erasure
    return Dmc([[1 - e, 0.0, e], [0.0, 1 - e, e]], name=f'bec({e})')


def zchannel(q: float) -> Dmc:
    """Z-channel: 0 is received noiselessly, 1 flips to 0 with probability q."""
    return Dmc([[1.0, 0.0], [q, 1 - q]], name=f'zchannel({q})')


def bac(p0: float, p1: float) -> Dmc:
    """Binary asymmetric channel with crossover p0 from input 0 and p1 from input 1."""
    return Dmc([[1 - p0, p0], [p1, 1 - p1]], name=f'bac({p0},{p1})')


def identity(q: int = 2) -> Dmc:
    return Dmc(np.eye(q), name=f'identity({q})')


def random_dmc(rng: np.random.Generator, input_size: int, output_size: int, sparsity: float = 0.0) -> Dmc:
    """Random channel with Dirichlet rows; ``sparsity`` zeroes entries at random to create infinite LLRs."""
    w = rng.dirichlet(np.ones(output_size), size=input_size)
    if sparsity > 0:
        mask = rng.random(w.shape) < sparsity
        keep = rng.integers(0, output_size, size=input_size)
        mask[np.arange(input_size), keep] = False
        w = np.where(mask, 0.0, w)
        w = w / w.sum(axis=1, keepdims=True)
    return Dmc(w, name=f'random({input_size}x{output_size})')


PRESETS = {
    'bsc': bsc,
    'bec': bec,
    'zchannel': zchannel,
    'bac': bac,
    'identity': identity,
}

_PRESET_PATTERN = re.compile(r'^\s*([a-z_]+)\s*\(([^)]*)\)\s*$')


def parse_channel(spec: str) -> Dmc:
    """Builds a channel from a preset string such as ``bac(0.02,0.2)`` or from a path to a channel JSON file."""
    match = _PRESET_PATTERN.match(spec)
    if match is None:
        path = Path(spec)
        if path.exists():
            return read_channel(path)
        raise ValueError(f'Unknown channel spec: {spec}')

    name, arguments = match.group(1), match.group(2)
    if name not in PRESETS:
        raise ValueError(f'Unknown channel preset {name}, expected one of {sorted(PRESETS)}')
    values = [float(a) for a in arguments.split(',') if a.strip()]
    if name == 'identity':
        values = [int(v) for v in values]
    ch = PRESETS[name](*values)
    return Dmc(ch.w, name=spec.strip())


def channel_from_dict(data: dict) -> Dmc:
    w = np.array(data['w'], dtype=float)
    if w.shape != (data['input_size'], data['output_size']):
        raise ValueError(f'Channel JSON declares {data["input_size"]}x{data["output_size"]} '
                         f'but the matrix has shape {w.shape}')
    return Dmc(w, name=data.get('name', ''))


def read_channel(filepath: Path) -> Dmc:
    with filepath.open() as f:
        return channel_from_dict(json.load(f))


# Information measures

def entropy(p: np.ndarray) -> float:
    p = np.asarray(p, dtype=float)
    return float(-xlogy(p, p).sum() / np.log(2))


def check_dimensions(ch: Dmc, p: InputDist):
    if p.size != ch.input_size:
        raise ValueError(f'Input distribution has {p.size} symbols, channel expects {ch.input_size}')


def check_binary(ch: Dmc):
    if not ch.is_binary:
        raise ValueError(f'Binary-input channel required, got |X| = {ch.input_size}')


def output_distribution(ch: Dmc, p: InputDist) -> np.ndarray:
    check_dimensions(ch, p)
    return p.p @ ch.w


def mutual_information(ch: Dmc, p: InputDist) -> float:
    """I(X;Y) = H(Y) - H(Y|X) in bits."""
    q = output_distribution(ch, p)
    h_y = entropy(q)
    h_y_given_x = float(-(p.p[:, None] * xlogy(ch.w, ch.w)).sum() / np.log(2))
    return max(h_y - h_y_given_x, 0.0)


def conditional_entropy(ch: Dmc, p: InputDist) -> float:
    """H(X|Y) computed directly from the joint distribution."""
    joint = p.p[:, None] * ch.w
    q = joint.sum(axis=0)
    with np.errstate(divide='ignore', invalid='ignore'):
        posterior = np.where(q > 0, joint / np.where(q > 0, q, 1.0), 0.0)
    return float(-xlogy(joint, posterior).sum() / np.log(2))


def symmetric_capacity(ch: Dmc) -> float:
    return mutual_information(ch, InputDist.uniform(ch.input_size))


def _divergences(ch: Dmc, q: np.ndarray) -> np.ndarray:
    """D(W(.|x) || q) in nats for every input x."""
    with np.errstate(divide='ignore', invalid='ignore'):
        ratio = np.where(ch.w > 0, ch.w / np.where(q > 0, q, 1.0), 1.0)
    return xlogy(ch.w, ratio).sum(axis=1)


def capacity(ch: Dmc, tol: float = BA_TOLERANCE, max_iterations: int = BA_MAX_ITERATIONS) -> InfoReport:
    """
    Blahut–Arimoto alternating maximisation. Iterates until the certified bracket
    I(p) <= C <= max_x D(W(.|x) || pW) is narrower than ``tol`` bits.
    """
    if tol <= 0:
        raise ValueError(f'Tolerance must be positive, got {tol}')

    r = np.full(ch.input_size, 1.0 / ch.input_size)
    ln2 = np.log(2)
    lower = upper = 0.0
    for iteration in range(1, max_iterations + 1):
        q = r @ ch.w
        d = _divergences(ch, q)
        lower = float(r @ d) / ln2
        upper = float(d.max()) / ln2
        if upper - lower < tol:
            break
        r = r * np.exp(d - d.max())
        r = r / r.sum()
    else:
        raise ConvergenceError(f'Blahut-Arimoto did not reach a bracket of {tol} within {max_iterations} '
                               f'iterations (gap {upper - lower})')

    optimal = InputDist(r / r.sum())
    return InfoReport(
        mutual_information=mutual_information(ch, optimal),
        capacity=max(upper, 0.0),
        symmetric_capacity=symmetric_capacity(ch),
        optimal_input=optimal,
        conditional_entropy_x_given_y=conditional_entropy(ch, optimal),
        iterations=iteration,
    )


def z_channel_capacity(q: float) -> float:
    """Closed-form capacity of the Z-channel with flip probability q from input 1."""
    if q >= 1.0:
        return 0.0
    return float(np.log2(1.0 + (1.0 - q) * q ** (q / (1.0 - q))))


def bsc_capacity(p: float) -> float:
    return 1.0 - h2(p)


# Sampling

def sample(ch: Dmc, x: int, rng: np.random.Generator) -> int:
    """Draws one output column index with probability W(y|x)."""
    if not 0 <= int(x) < ch.input_size:
        raise ValueError(f'Input symbol {x} out of range [0, {ch.input_size})')
    return int(rng.choice(ch.output_size, p=ch.w[int(x)]))


def sample_many(ch: Dmc, x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Vectorised channel use over an array of input symbols of any shape."""
    x = np.asarray(x, dtype=int)
    if np.any(x < 0) or np.any(x >= ch.input_size):
        raise ValueError(f'Input symbols must lie in [0, {ch.input_size})')
    cdf = np.cumsum(ch.w, axis=1)
    cdf[:, -1] = 1.0
    draws = rng.random(x.shape)
    y = (draws[..., None] >= cdf[x]).sum(axis=-1)
    return np.minimum(y, ch.output_size - 1)


def sample_blocks(ch: Dmc, x: np.ndarray, rng: Generators) -> np.ndarray:
    """Channel use over a batch of blocks, block b drawing its noise from its own generator when a sequence is given."""
    x = np.atleast_2d(np.asarray(x, dtype=int))
    if isinstance(rng, np.random.Generator):
        return sample_many(ch, x, rng)
    rngs = block_generators(rng, x.shape[0])
    if x.shape[1] == 0:
        return np.zeros(x.shape, dtype=int)
    return np.stack([sample_many(ch, row, r) for row, r in zip(x, rngs)])
