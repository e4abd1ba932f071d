import json
from pathlib import Path
from typing import Optional

import click
import numpy as np

from asymcap.dmc import InputDist, parse_channel, capacity as channel_capacity
from asymcap.helpers import PolarSettings, generator_for, BA_TOLERANCE, DEFAULT_BACKOFF, DEFAULT_DELTA, \
    DEFAULT_THRESHOLD, MC_SAMPLES, RATE_POLICY, THRESHOLD_POLICY
from asymcap.ldensity import prior_ldensities, symmetrize_prior, posterior_ldensities, symmetrize_posterior, \
    capacity_functional, conditional_entropy_functional
from asymcap.main import ExperimentSpec, run, sweep, compare_approaches, GALLAGER, INTEGRATED_POLAR, \
    INTEGRATED_LDPC, CHAINING
from asymcap.polar.construction import PolarContext, build_context
from asymcap.polar.honda_yamamoto import hy_encode, hy_decode
from asymcap.report import ExperimentReport


def _parse_symbols(text: str) -> np.ndarray:
    """'0110' or '0,3,2,1' to an integer array."""
    text = text.strip()
    parts = text.split(',') if ',' in text else list(text)
    try:
        return np.array([int(p) for p in parts if p.strip()], dtype=int)
    except ValueError:
        raise click.BadParameter(f'expected digits or comma-separated integers, got {text!r}')


def _format_bits(bits: np.ndarray) -> str:
    return ''.join(str(int(b)) for b in bits)


def _emit(report: ExperimentReport, output: Optional[Path]):
    if output is None:
        click.echo(report.to_json_string())
        return
    output.parent.mkdir(parents=True, exist_ok=True)
    click.echo(f'Saving report to {output}', err=True)
    report.to_json(output)


def _run(spec: ExperimentSpec, output: Optional[Path], progress: bool):
    try:
        report = run(spec, progress=progress)
    except ValueError as e:
        click.echo(f'Experiment failed: {e}', err=True)
        raise
    _emit(report, output)


channel_option = click.option('-c', '--channel', required=True, type=str,
                              help='Channel preset such as bac(0.02,0.2) or a path to a channel JSON file.')
trials_option = click.option('-t', '--trials', default=100, show_default=True, type=int,
                             help='Number of Monte Carlo trials.')
seed_option = click.option('-s', '--seed', required=True, type=int, help='Experiment seed.')
samples_option = click.option('--samples', default=MC_SAMPLES, show_default=True, type=int,
                              help='Monte Carlo samples of the polar construction.')
output_option = click.option('-o', '--output', default=None, type=Path,
                             help='Path of the JSON report; printed to stdout when omitted.')
progress_option = click.option('--progress', is_flag=True, default=False, help='Show progress bars.')


@click.group()
def main():
    """Capacity-achieving coding for asymmetric discrete memoryless channels."""


@main.command()
@channel_option
@click.option('--tol', default=BA_TOLERANCE, show_default=True, type=float,
              help='Width of the certified capacity bracket in bits.')
def capacity(channel: str, tol: float):
    """Capacity, symmetric capacity and capacity-achieving input of a channel."""
    click.echo(json.dumps(channel_capacity(parse_channel(channel), tol=tol).to_dict(), indent=4))


@main.command()
@channel_option
@click.option('-a', '--alpha', default=None, type=float,
              help='Bias of the input; the capacity-achieving one when omitted.')
def inspect(channel: str, alpha: Optional[float]):
    """Information measures and symmetrized L-densities of a binary-input channel."""
    ch = parse_channel(channel)
    info = channel_capacity(ch)
    p = info.optimal_input if alpha is None else InputDist.bernoulli(alpha)

    prior = symmetrize_prior(*prior_ldensities(ch))
    posterior = symmetrize_posterior(*posterior_ldensities(ch, p), p)
    click.echo(json.dumps({
        'channel': ch.to_dict(),
        'info': info.to_dict(),
        'input': p.to_list(),
        'symmetrized_prior': prior.to_dict(),
        'symmetric_capacity_functional': capacity_functional(prior),
        'symmetrized_posterior': posterior.to_dict(),
        'conditional_entropy_functional': conditional_entropy_functional(posterior),
    }, indent=4))


@main.command()
@channel_option
@click.option('-d', '--delta', default=DEFAULT_DELTA, show_default=True, type=float,
              help='Total variation budget of the input approximation.')
@click.option('-n', '--blocklen', default=1024, show_default=True, type=int, help='Polar block length per level.')
@click.option('--backoff', default=DEFAULT_BACKOFF, show_default=True, type=float,
              help='Level rates as a fraction of the symmetric capacities.')
@trials_option
@seed_option
@samples_option
@output_option
@progress_option
def gallager(channel: str, delta: float, blocklen: int, backoff: float, trials: int, seed: int, samples: int,
             output: Optional[Path], progress: bool):
    """Transmission with Gallager's mapping and one polar code per binary level."""
    spec = ExperimentSpec(approach=GALLAGER, channel=channel, blocklen=blocklen, trials=trials, seed=seed,
                          delta=delta, backoff=backoff, samples=samples)
    _run(spec, output, progress)


@main.group()
def polar():
    """Integrated polar scheme."""


@polar.command()
@channel_option
@click.option('-a', '--alpha', required=True, type=float, help='Bias of the transmitted bits.')
@click.option('-n', '--blocklen', required=True, type=int, help='Block length, a power of two.')
@click.option('-r', '--rate', default=None, type=float,
              help='Information rate of the rate-targeted policy; estimated I(X;Y) when omitted.')
@click.option('--policy', default=RATE_POLICY, show_default=True, type=click.Choice([RATE_POLICY, THRESHOLD_POLICY]))
@click.option('--threshold', default=DEFAULT_THRESHOLD, show_default=True, type=float,
              help='Bhattacharyya threshold of the threshold policy.')
@seed_option
@samples_option
@click.option('-o', '--output', required=True, type=Path, help='Path of the context JSON file.')
@progress_option
def construct(channel: str, alpha: float, blocklen: int, rate: Optional[float], policy: str, threshold: float,
              seed: int, samples: int, output: Path, progress: bool):
    """Estimates reliabilities and saves the index sets."""
    settings = PolarSettings(samples=samples, policy=policy, threshold=threshold, progress=progress)
    ctx = build_context(parse_channel(channel), alpha, blocklen, generator_for(seed), rate=rate, settings=settings)
    output.parent.mkdir(parents=True, exist_ok=True)
    click.echo(f'Saving polar context with {ctx.info_set.size} information bits to {output}', err=True)
    ctx.to_json(output)


@polar.command()
@click.option('--context', 'context_path', required=True, type=Path, help='Path of a context JSON file.')
@click.option('-m', '--message', required=True, type=str, help='Message bits, e.g. 0110.')
@click.option('--shared-seed', default=0, show_default=True, type=int, help='Seed of the shared frozen bits.')
def encode(context_path: Path, message: str, shared_seed: int):
    """Prints the codeword of a message."""
    ctx = PolarContext.read(context_path)
    click.echo(_format_bits(hy_encode(ctx, _parse_symbols(message), shared_seed)))


@polar.command()
@click.option('--context', 'context_path', required=True, type=Path, help='Path of a context JSON file.')
@click.option('-y', '--received', required=True, type=str,
              help='Received output indices, digits or comma-separated.')
@click.option('--shared-seed', default=0, show_default=True, type=int, help='Seed of the shared frozen bits.')
def decode(context_path: Path, received: str, shared_seed: int):
    """Prints the message estimate of a received word."""
    ctx = PolarContext.read(context_path)
    message, _ = hy_decode(ctx, _parse_symbols(received), shared_seed)
    click.echo(_format_bits(message))


@polar.command(name='simulate')
@channel_option
@click.option('-a', '--alpha', default=None, type=float, help='Bias; the capacity-achieving one when omitted.')
@click.option('-n', '--blocklen', default=1024, show_default=True, type=int, help='Block length, a power of two.')
@click.option('--backoff', default=DEFAULT_BACKOFF, show_default=True, type=float,
              help='Information rate as a fraction of I(X;Y).')
@trials_option
@seed_option
@samples_option
@output_option
@progress_option
def polar_simulate(channel: str, alpha: Optional[float], blocklen: int, backoff: float, trials: int, seed: int,
                   samples: int, output: Optional[Path], progress: bool):
    """Monte Carlo block error rate of the integrated polar scheme."""
    spec = ExperimentSpec(approach=INTEGRATED_POLAR, channel=channel, blocklen=blocklen, trials=trials, seed=seed,
                          alpha=alpha, backoff=backoff, samples=samples)
    _run(spec, output, progress)


@main.group()
def sparse():
    """Integrated sparse-graph scheme."""


@sparse.command(name='simulate')
@channel_option
@click.option('-l', '--variable-degree', 'variable_degree', default=3, show_default=True, type=int,
              help='Degree of every variable node.')
@click.option('-n', '--blocklen', default=1000, show_default=True, type=int, help='Block length.')
@click.option('-a', '--alpha', default=None, type=float, help='Bias; the capacity-achieving one when omitted.')
@click.option('--shared-margin', default=0.1, show_default=True, type=float,
              help='Extra shared checks per channel use above H(X|Y).')
@trials_option
@seed_option
@output_option
@progress_option
def sparse_simulate(channel: str, variable_degree: int, blocklen: int, alpha: Optional[float], shared_margin: float,
                    trials: int, seed: int, output: Optional[Path], progress: bool):
    """Monte Carlo block error rate of BP decimation encoding with syndrome-aided BP decoding."""
    spec = ExperimentSpec(approach=INTEGRATED_LDPC, channel=channel, blocklen=blocklen, trials=trials, seed=seed,
                          alpha=alpha, degree=variable_degree, shared_margin=shared_margin)
    _run(spec, output, progress)


@main.group()
def chain():
    """Chaining construction."""


@chain.command(name='simulate')
@channel_option
@click.option('-k', '--blocks', 'k', default=5, show_default=True, type=int, help='Number of chained blocks.')
@click.option('-n', '--blocklen', default=1024, show_default=True, type=int, help='Block length, a power of two.')
@click.option('-a', '--alpha', default=None, type=float, help='Bias; the capacity-achieving one when omitted.')
@click.option('--source', default='polar', show_default=True, type=click.Choice(['polar']), help='Source map.')
@click.option('--code', default='polar', show_default=True, type=click.Choice(['polar', 'ldpc']),
              help='Syndrome-based channel code of the intermediate blocks.')
@click.option('--backoff', default=DEFAULT_BACKOFF, show_default=True, type=float,
              help='Component rates as a fraction of their targets.')
@trials_option
@seed_option
@samples_option
@output_option
@progress_option
def chain_simulate(channel: str, k: int, blocklen: int, alpha: Optional[float], source: str, code: str,
                   backoff: float, trials: int, seed: int, samples: int, output: Optional[Path], progress: bool):
    """Monte Carlo block error rate and rate accounting of a chain."""
    spec = ExperimentSpec(approach=CHAINING, channel=channel, blocklen=blocklen, trials=trials, seed=seed,
                          alpha=alpha, k=k, code=code, backoff=backoff, samples=samples)
    _run(spec, output, progress)


@main.command(name='run')
@click.option('--spec', 'spec_path', required=True, type=Path, help='Path of an experiment spec JSON file.')
@click.option('-o', '--output_dir', default='./', show_default=True, type=Path,
              help='Directory where the report and the optional sweep are saved.')
@progress_option
def run_spec(spec_path: Path, output_dir: Path, progress: bool):
    """Runs an experiment spec, and its sweep if it names one."""
    spec = ExperimentSpec.read(spec_path)
    output_dir.mkdir(parents=True, exist_ok=True)
    output_path = output_dir / (spec_path.stem + '_report')

    _run(spec, output_path.with_suffix('.json'), progress)

    if spec.sweep:
        csv_path = output_dir / (spec_path.stem + '_sweep.csv')
        click.echo(f'Saving {spec.sweep_parameter} sweep to {csv_path}', err=True)
        sweep(spec, progress=progress).to_csv(csv_path, index=False)


@main.command()
@channel_option
@click.option('-b', '--budget', required=True, type=int, help='Largest number of channel uses per transmission.')
@click.option('-k', '--blocks', 'k', default=5, show_default=True, type=int, help='Chain length.')
@trials_option
@seed_option
@samples_option
@click.option('-o', '--output', default=None, type=Path, help='Path of the CSV table; printed when omitted.')
@progress_option
def compare(channel: str, budget: int, k: int, trials: int, seed: int, samples: int, output: Optional[Path],
            progress: bool):
    """Runs every approach at a matched channel-use budget."""
    table = compare_approaches(channel, budget, trials, seed, k=k, samples=samples, progress=progress)
    if output is None:
        click.echo(table.to_string(index=False))
    else:
        output.parent.mkdir(parents=True, exist_ok=True)
        click.echo(f'Saving comparison to {output}', err=True)
        table.to_csv(output, index=False)


if __name__ == '__main__':
    main()
