import os
from dataclasses import dataclass
from typing import Optional, Sequence, Union, List

import click
import numpy as np
from scipy.special import entr

LOG_BASE = 2

PROBABILITY_TOLERANCE = 1e-12
ATOM_TOLERANCE = 1e-12
SYMMETRY_TOLERANCE = 1e-9

BA_TOLERANCE = 1e-9
BA_MAX_ITERATIONS = 100_000

# ln(1e-300): LLRs beyond this carry no more information than the underflow floor
LLR_CLIP = 690.0

MC_SAMPLES = 10_000
MC_MIN_SAMPLES = 100
MC_BATCH_SIZE = 256

RATE_POLICY = 'rate'
THRESHOLD_POLICY = 'threshold'
DEFAULT_THRESHOLD = 0.1

BP_ITERATIONS = 100
BP_LLR_SATURATION = 30.0
DECIMATION_ITERATIONS = 10
DECIMATION_FRACTION = 0.01

DEFAULT_BACKOFF = 0.75
# largest deviation of a codeword ones-fraction from alpha that still counts as correctly shaped
SHAPING_TOLERANCE = 0.05
DEFAULT_DELTA = 0.01

WORKERS_ENV = 'ASYMCAP_WORKERS'
# trials handed to a worker at once
TRIAL_CHUNK_SIZE = 25
REPORT_SCHEMA_VERSION = 1
CONTEXT_SCHEMA_VERSION = 1
GRAPH_SCHEMA_VERSION = 1

Generators = Union[np.random.Generator, Sequence[np.random.Generator]]


class ConvergenceError(RuntimeError):
    """Raised when an iterative optimisation hits its iteration cap."""


class AsymmetricDensityError(ValueError):
    """Raised when a functional that needs a symmetric L-density receives an asymmetric one."""


class ConfigurationError(ValueError):
    """Raised when a code is configured beyond what the channel supports."""


class ExperimentSpecError(ConfigurationError):
    def __init__(self, problems: Sequence[str]):
        self.problems = list(problems)
        super().__init__('invalid experiment spec: ' + '; '.join(self.problems))


@dataclass
class PolarSettings:
    """Monte Carlo construction knobs of polar contexts."""

    samples: int = MC_SAMPLES
    batch_size: int = MC_BATCH_SIZE
    policy: str = RATE_POLICY
    threshold: float = DEFAULT_THRESHOLD
    progress: bool = False


@dataclass
class SparseSettings:
    """Belief propagation and decimation knobs."""

    iterations: int = BP_ITERATIONS
    saturation: float = BP_LLR_SATURATION
    decimation_iterations: int = DECIMATION_ITERATIONS
    decimation_fraction: float = DECIMATION_FRACTION
    # slack on the message and shared check rates of the integrated scheme, both paid in message rate
    info_margin: float = 0.0
    shared_margin: float = 0.1


@dataclass
class GallagerSettings:
    delta: float = DEFAULT_DELTA
    backoff: float = DEFAULT_BACKOFF
    binary: bool = True


@dataclass
class ChainSettings:
    backoff: float = DEFAULT_BACKOFF
    shaping_tolerance: float = SHAPING_TOLERANCE
    # LDPC channel code only
    variable_degree: int = 3


default_polar_settings = PolarSettings()
default_sparse_settings = SparseSettings()
default_gallager_settings = GallagerSettings()
default_chain_settings = ChainSettings()


def polar_settings_non_nil(settings: Optional[PolarSettings]) -> PolarSettings:
    if not settings:
        return default_polar_settings
    return settings


def sparse_settings_non_nil(settings: Optional[SparseSettings]) -> SparseSettings:
    if not settings:
        return default_sparse_settings
    return settings


def print_section_boundaries(title: Optional[str] = None):
    """Decorator that frames the console output of a long computation."""

    def decorator(func):
        def wrapper(*args, **kwargs):
            click.echo('\n' + '-' * 80, err=True)
            if title:
                click.echo(title, err=True)
            else:
                click.echo(func.__name__, err=True)
            click.echo('-' * 80, err=True)
            result = func(*args, **kwargs)
            click.echo('-' * 80, err=True)
            return result

        wrapper.__name__ = func.__name__
        wrapper.__doc__ = func.__doc__
        return wrapper

    return decorator


def h2(p: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """Binary entropy in bits, with 0·log 0 = 0."""
    p = np.clip(np.asarray(p, dtype=float), 0.0, 1.0)
    result = (entr(p) + entr(1.0 - p)) / np.log(LOG_BASE)
    if result.ndim == 0:
        return float(result)
    return result


def is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


def generator_for(seed: int, *key: int) -> np.random.Generator:
    """
    Counter-based generator splitting: the stream for (seed, key) never depends on how many other keys were
    drawn before, so appending trials leaves earlier trials untouched.
    """
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key)))


def shared_bits(seed: int, size: int, *key: int) -> np.ndarray:
    """Uniform bits both ends derive from a shared seed (and an optional block or level key)."""
    return generator_for(seed, *key).integers(0, 2, size=size, dtype=np.uint8)


def workers_from_env(default: int = 1) -> int:
    value = os.environ.get(WORKERS_ENV)
    if value is None or value.strip() == '':
        return default
    workers = int(value)
    if workers < 1:
        raise ValueError(f'{WORKERS_ENV} must be positive, got {value}')
    return workers


def gallager_settings_non_nil(settings: Optional[GallagerSettings]) -> GallagerSettings:
    if not settings:
        return default_gallager_settings
    return settings


def chain_settings_non_nil(settings: Optional[ChainSettings]) -> ChainSettings:
    if not settings:
        return default_chain_settings
    return settings


def complement(indices: np.ndarray, n: int) -> np.ndarray:
    mask = np.ones(n, dtype=bool)
    mask[np.asarray(indices, dtype=int)] = False
    return np.flatnonzero(mask)


def block_generators(rng: Generators, batch: int) -> List[np.random.Generator]:
    """One generator per block of a batch: a single generator is shared, a sequence is taken as given."""
    if isinstance(rng, np.random.Generator):
        return [rng] * batch
    rngs = list(rng)
    if len(rngs) != batch:
        raise ValueError(f'Expected {batch} generators, got {len(rngs)}')
    return rngs
