import concurrent.futures
import json
import time
from dataclasses import dataclass, field, asdict, fields, replace
from pathlib import Path
from typing import Optional, List, Dict, Any

import click
import numpy as np
import pandas as pd
from tqdm import tqdm

from asymcap.chaining import CHANNEL_CODES, plug_combination, build_chain, chain_rate, theoretical_rate, run_chain
from asymcap.dmc import Dmc, InputDist, parse_channel, capacity, mutual_information, sample_blocks
from asymcap.gallager.transmission import build_gallager_code, gallager_encode, gallager_decode
from asymcap.helpers import PolarSettings, SparseSettings, GallagerSettings, ChainSettings, ConfigurationError, \
    ExperimentSpecError, generator_for, workers_from_env, is_power_of_two, default_sparse_settings, \
    DEFAULT_BACKOFF, DEFAULT_DELTA, MC_SAMPLES, MC_MIN_SAMPLES, SHAPING_TOLERANCE, TRIAL_CHUNK_SIZE
from asymcap.polar.construction import build_context
from asymcap.polar.honda_yamamoto import hy_encode, hy_decode
from asymcap.report import ExperimentReport, bler_interval
from asymcap.sparse.integrated import build_integrated_code, run_integrated

GALLAGER = 'gallager'
INTEGRATED_POLAR = 'integrated-polar'
INTEGRATED_LDPC = 'integrated-ldpc'
CHAINING = 'chaining'
APPROACHES = (GALLAGER, INTEGRATED_POLAR, INTEGRATED_LDPC, CHAINING)
POLAR_APPROACHES = (GALLAGER, INTEGRATED_POLAR, CHAINING)
BINARY_APPROACHES = (INTEGRATED_POLAR, INTEGRATED_LDPC, CHAINING)

# generator_for keys below the experiment seed
TRIAL_STREAM = 1
SHARED_STREAM = 2


@dataclass
class ExperimentSpec:
    """Everything a run depends on; echoed into the report so that the run can be replayed."""

    approach: str
    channel: str
    blocklen: int
    trials: int
    seed: Optional[int]
    alpha: Optional[float] = None
    backoff: float = DEFAULT_BACKOFF
    k: int = 5
    code: str = 'polar'
    delta: float = DEFAULT_DELTA
    samples: int = MC_SAMPLES
    degree: int = 3
    shared_margin: float = default_sparse_settings.shared_margin
    info_margin: float = default_sparse_settings.info_margin
    shaping_tolerance: float = SHAPING_TOLERANCE
    sweep: List[int] = field(default_factory=list)

    def validate(self) -> Dmc:
        """Checks every field, raising one ExperimentSpecError that lists all problems; returns the channel."""
        problems = []
        if self.approach not in APPROACHES:
            problems.append(f'approach must be one of {list(APPROACHES)}, got {self.approach!r}')
        if self.seed is None:
            problems.append('seed is mandatory')
        elif not isinstance(self.seed, int) or self.seed < 0:
            problems.append(f'seed must be a nonnegative integer, got {self.seed!r}')
        if self.trials <= 0:
            problems.append(f'trials must be positive, got {self.trials}')
        if self.blocklen <= 0:
            problems.append(f'blocklen must be positive, got {self.blocklen}')
        elif self.approach in POLAR_APPROACHES and not is_power_of_two(self.blocklen):
            problems.append(f'blocklen must be a power of two for {self.approach}, got {self.blocklen}')
        if self.alpha is not None and not 0.0 < self.alpha < 1.0:
            problems.append(f'alpha must lie strictly between 0 and 1, got {self.alpha}')
        if not 0.0 < self.backoff <= 1.0:
            problems.append(f'backoff must lie in (0, 1], got {self.backoff}')
        if not 0.0 < self.delta < 0.125:
            problems.append(f'delta must lie in (0, 1/8), got {self.delta}')
        if self.samples < MC_MIN_SAMPLES:
            problems.append(f'samples must be at least {MC_MIN_SAMPLES}, got {self.samples}')
        if self.degree < 1:
            problems.append(f'degree must be positive, got {self.degree}')
        if not 0.0 <= self.shaping_tolerance <= 1.0:
            problems.append(f'shaping_tolerance must lie in [0, 1], got {self.shaping_tolerance}')
        if self.approach == CHAINING:
            if self.k < 2:
                problems.append(f'k must be at least 2, got {self.k}')
            if self.code not in CHANNEL_CODES:
                problems.append(f'code must be one of {sorted(CHANNEL_CODES)}, got {self.code!r}')
            if any(value < 2 for value in self.sweep):
                problems.append(f'sweep values of k must be at least 2, got {self.sweep}')
        elif self.approach in POLAR_APPROACHES and not all(is_power_of_two(value) for value in self.sweep):
            problems.append(f'sweep block lengths must be powers of two, got {self.sweep}')

        ch = None
        try:
            ch = parse_channel(self.channel)
        except (ValueError, OSError) as e:
            problems.append(f'channel: {e}')
        if ch is not None and self.approach in BINARY_APPROACHES and ch.input_size != 2:
            problems.append(f'{self.approach} needs a binary-input channel, got {ch.input_size} inputs')

        if problems:
            raise ExperimentSpecError(problems)
        return ch

    @property
    def sweep_parameter(self) -> str:
        return 'k' if self.approach == CHAINING else 'blocklen'

    def to_dict(self) -> dict:
        return asdict(self)

    @staticmethod
    def from_dict(data: dict) -> 'ExperimentSpec':
        known = {f.name for f in fields(ExperimentSpec)}
        required = ('approach', 'channel', 'blocklen', 'trials', 'seed')
        problems = [f'unknown field {name!r}' for name in sorted(set(data) - known)]
        problems += [f'missing field {name!r}' for name in required if name not in data]
        if problems:
            raise ExperimentSpecError(problems)
        return ExperimentSpec(**data)

    @staticmethod
    def read(filepath: Path) -> 'ExperimentSpec':
        with filepath.open() as f:
            return ExperimentSpec.from_dict(json.load(f))


@dataclass
class Scheme:
    """A constructed code together with its block accounting."""

    code: Any
    message_length: int
    channel_uses: int
    alpha: Optional[float] = None
    extra: Dict[str, Any] = field(default_factory=dict)


def polar_settings_for(spec: ExperimentSpec, progress: bool = False) -> PolarSettings:
    return PolarSettings(samples=spec.samples, progress=progress)


def sparse_settings_for(spec: ExperimentSpec) -> SparseSettings:
    return SparseSettings(shared_margin=spec.shared_margin, info_margin=spec.info_margin)


def build_scheme(spec: ExperimentSpec, ch: Dmc, progress: bool = False) -> Scheme:
    """Constructs the code of the spec's approach from the construction stream of the spec's seed."""
    rng = generator_for(spec.seed)
    n = spec.blocklen

    if spec.approach == GALLAGER:
        code = build_gallager_code(ch, n, rng, settings=GallagerSettings(delta=spec.delta, backoff=spec.backoff),
                                   polar_settings=polar_settings_for(spec, progress))
        extra = {
            'mutual_information': code.mutual_information,
            'bound_y': code.bounds.bound_y,
            'bound_x': code.bounds.bound_x,
            'level_capacities': code.level_capacities,
            'level_sizes': [int(ctx.info_set.size) for ctx in code.levels],
            'extended_size': int(code.mapper.extended_size),
            'identity_mapper': bool(code.mapper.extended_size == ch.input_size),
            'complexity_proxy': float(len(code.levels) * np.log2(n)),
        }
        return Scheme(code=code, message_length=int(code.message_length), channel_uses=int(code.n), extra=extra)

    alpha = spec.alpha if spec.alpha is not None else float(capacity(ch).optimal_input.p[1])
    i_w = mutual_information(ch, InputDist.bernoulli(alpha))

    if spec.approach == INTEGRATED_POLAR:
        ctx = build_context(ch, alpha, n, rng, rate=spec.backoff * i_w, settings=polar_settings_for(spec, progress))
        extra = {
            'alpha': alpha,
            'mutual_information': i_w,
            'error_bound': ctx.error_bound(),
            'complexity_proxy': float(np.log2(n)),
        }
        return Scheme(code=ctx, message_length=int(ctx.info_set.size), channel_uses=n, alpha=alpha, extra=extra)

    if spec.approach == INTEGRATED_LDPC:
        settings = sparse_settings_for(spec)
        code = build_integrated_code(ch, alpha, n, spec.degree, int(rng.integers(2 ** 31)), settings)
        extra = {
            'alpha': alpha,
            'mutual_information': i_w,
            'info_checks': int(code.info_checks.m),
            'shared_checks': int(code.shared_checks.m),
            'complexity_proxy': float(2 * spec.degree * settings.iterations),
        }
        return Scheme(code=code, message_length=code.message_length, channel_uses=n, alpha=alpha, extra=extra)

    settings = ChainSettings(backoff=spec.backoff, shaping_tolerance=spec.shaping_tolerance,
                             variable_degree=spec.degree)
    cfg = plug_combination('polar', spec.code, ch, spec.k, n, alpha=alpha, settings=settings)
    session = build_chain(cfg, rng, polar_settings_for(spec, progress), sparse_settings_for(spec))
    extra = {
        'alpha': alpha,
        'mutual_information': i_w,
        'k': spec.k,
        'predicted_rate': chain_rate(session),
        'theoretical_rate': theoretical_rate(ch, alpha, spec.k),
        'payload_size': session.payload_size,
        'syndrome_size': session.syndrome_size,
        'fresh_size': session.fresh_size,
        'terminal_length': session.terminal_length,
        'complexity_proxy': float(np.log2(n)),
    }
    return Scheme(code=session, message_length=session.message_length, channel_uses=session.channel_uses,
                  alpha=alpha, extra=extra)


def run(spec: ExperimentSpec, progress: bool = False) -> ExperimentReport:
    """
    Entry point of an experiment: builds the code, simulates the trials in chunks (in a process pool when
    ASYMCAP_WORKERS asks for more than one worker) and reduces the chunk counts into a report. Trial t draws its
    message and noise from its own stream, so the report does not depend on chunking or on the worker count.
    """
    ch = spec.validate()
    start = time.perf_counter()
    click.echo(f'Running {spec.approach} over {ch.name or "channel"} with n = {spec.blocklen}, '
               f'{spec.trials} trials', err=True)

    scheme = build_scheme(spec, ch, progress)
    shared_seed = int(generator_for(spec.seed, SHARED_STREAM).integers(2 ** 63))
    chunks = [list(range(first, min(first + TRIAL_CHUNK_SIZE, spec.trials)))
              for first in range(0, spec.trials, TRIAL_CHUNK_SIZE)]

    workers = workers_from_env()
    results = []
    if workers > 1 and len(chunks) > 1:
        handles = []
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as executor:
            for chunk in chunks:
                handles.append(executor.submit(__simulate_trials, spec, ch, scheme, shared_seed, chunk))

            for h in tqdm(handles, desc='Waiting for trial chunks', disable=not progress):
                results.append(h.result())
    else:
        for chunk in tqdm(chunks, desc='Simulating trials', disable=not progress):
            results.append(__simulate_trials(spec, ch, scheme, shared_seed, chunk))

    totals = __reduce(results)
    ones_fraction = totals['ones_sum'] / totals['ones_count'] if totals['ones_count'] else None
    return ExperimentReport(
        approach=spec.approach,
        channel=ch.name,
        blocklen=spec.blocklen,
        trials=totals['trials'],
        block_errors=totals['block_errors'],
        message_length=scheme.message_length,
        channel_uses=scheme.channel_uses,
        capacity=capacity(ch).capacity,
        error_counts=totals['errors'],
        ones_fraction=ones_fraction,
        config=spec.to_dict(),
        extra=scheme.extra,
        runtime=time.perf_counter() - start,
    )


def __simulate_trials(spec: ExperimentSpec, ch: Dmc, scheme: Scheme, shared_seed: int, trials: List[int]) -> dict:
    rngs = [generator_for(spec.seed, TRIAL_STREAM, t) for t in trials]
    messages = np.stack([r.integers(0, 2, size=scheme.message_length, dtype=np.uint8) for r in rngs])
    code = scheme.code
    ones = None

    if spec.approach == GALLAGER:
        x = gallager_encode(code, messages, shared_seed)
        estimate = gallager_decode(code, sample_blocks(ch, x, rngs), shared_seed)
        wrong = estimate != messages
        errors, first = {}, 0
        for level, ctx in enumerate(code.levels, start=1):
            size = int(ctx.info_set.size)
            errors[f'level_{level}'] = int(np.any(wrong[:, first:first + size], axis=1).sum())
            first += size
        block_errors = np.any(wrong, axis=1)
    elif spec.approach == INTEGRATED_POLAR:
        x = np.atleast_2d(hy_encode(code, messages, shared_seed))
        estimate, _ = hy_decode(code, sample_blocks(ch, x, rngs), shared_seed)
        ones = x.mean(axis=1)
        block_errors = np.any(np.atleast_2d(estimate) != messages, axis=1)
        errors = {
            'decoder': int(block_errors.sum()),
            'shaping': int((np.abs(ones - scheme.alpha) > spec.shaping_tolerance).sum()),
        }
    elif spec.approach == INTEGRATED_LDPC:
        outcome = run_integrated(code, messages, shared_seed, rngs, sparse_settings_for(spec),
                                 spec.shaping_tolerance)
        ones = outcome.ones_fraction
        block_errors = outcome.message_error
        errors = {'encoder': int(outcome.encoder_failure.sum()), 'decoder': int(outcome.decoder_failure.sum())}
    else:
        outcome, _, _ = run_chain(code, messages, shared_seed, rngs)
        ones = outcome.ones_fraction
        block_errors = outcome.message_error
        errors = outcome.counts()

    return {
        'trials': len(trials),
        'block_errors': int(np.sum(block_errors)),
        'errors': errors,
        'ones_sum': 0.0 if ones is None else float(np.sum(ones)),
        'ones_count': 0 if ones is None else int(np.size(ones)),
    }


def __reduce(results: List[dict]) -> dict:
    totals = {'trials': 0, 'block_errors': 0, 'errors': {}, 'ones_sum': 0.0, 'ones_count': 0}
    for result in results:
        for key in ('trials', 'block_errors', 'ones_sum', 'ones_count'):
            totals[key] += result[key]
        for name, count in result['errors'].items():
            totals['errors'][name] = totals['errors'].get(name, 0) + count
    return totals


def sweep(spec: ExperimentSpec, progress: bool = False) -> pd.DataFrame:
    """One run per value of ``spec.sweep``: k for chaining, the block length otherwise."""
    parameter = spec.sweep_parameter
    rows = []
    for value in spec.sweep:
        report = run(replace(spec, sweep=[], **{parameter: value}), progress)
        low, high = bler_interval(report.block_errors, report.trials)
        rows.append({
            parameter: value,
            'realized_rate': report.realized_rate,
            'predicted_rate': report.extra.get('predicted_rate', np.nan),
            'capacity': report.capacity,
            'gap': report.gap,
            'bler': report.bler,
            'bler_low': low,
            'bler_high': high,
        })
    return pd.DataFrame(rows)


def compare_approaches(channel: str, budget: int, trials: int, seed: int, k: int = 5,
                       samples: int = MC_SAMPLES, progress: bool = False) -> pd.DataFrame:
    """
    Runs every approach with at most ``budget`` channel uses per transmission: the polar approaches at the largest
    power-of-two block length that fits, chaining with k blocks of the largest power of two below budget / k, the
    sparse scheme at the full budget. Approaches the channel does not admit get a row with a note.
    """
    if budget < 2:
        raise ValueError(f'Budget must allow at least two channel uses, got {budget}')
    largest = 1 << (int(budget).bit_length() - 1)
    chain_length = 1 << max(int(budget // k).bit_length() - 1, 0)
    lengths = {GALLAGER: largest, INTEGRATED_POLAR: largest, INTEGRATED_LDPC: int(budget), CHAINING: chain_length}

    rows = []
    for approach in APPROACHES:
        spec = ExperimentSpec(approach=approach, channel=channel, blocklen=lengths[approach], trials=trials,
                              seed=seed, k=k, samples=samples)
        row = {'approach': approach, 'blocklen': spec.blocklen}
        try:
            report = run(spec, progress)
        except ConfigurationError as e:
            click.echo(f'{approach} skipped: {e}', err=True)
            row['note'] = str(e)
            rows.append(row)
            continue

        notes = []
        if report.extra.get('identity_mapper'):
            notes.append('mapper is the identity, the input is uniform')
        if report.channel_uses > budget:
            notes.append(f'uses {report.channel_uses} channel uses, over budget')
        row.update({
            'channel_uses': report.channel_uses,
            'realized_rate': report.realized_rate,
            'capacity': report.capacity,
            'gap': report.gap,
            'bler': report.bler,
            'complexity_proxy': report.extra.get('complexity_proxy'),
            'note': '; '.join(notes),
        })
        rows.append(row)
    return pd.DataFrame(rows)
