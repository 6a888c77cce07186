"""
cli.py

Command-line interface: simulate, fdt-check, sweep, synth and analyze.

Exit codes: 0 success, 1 failed check or computation, 2 usage or IO error.
"""

import logging
import os
import sys
import time
from dataclasses import replace
from datetime import datetime

import click

from src.eos_signal import KINDS
from src.eos_toolkit import EOSToolkit
from src.persistence import CsvFormatError
from src.run_config import ConfigError, load_run_config
from src.trace_analysis import SampleStepError
from src.trace_io import ManifestError

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(levelname)s - %(message)s')
logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2

# Input validation failures; anything else raised by a step is a failed computation
USAGE_ERRORS = (ConfigError, ManifestError, CsvFormatError, SampleStepError, OSError, click.UsageError)


def _exit_code(error):
    """Map a step failure to an exit code."""
    if isinstance(error, USAGE_ERRORS):
        return EXIT_USAGE
    return EXIT_CHECK_FAILED


def _banner(title, output_dir, start_time, lines=()):
    click.echo("\n" + "=" * 80)
    click.echo(title)
    click.echo("=" * 80)
    click.echo(f"Results saved to: {os.path.abspath(output_dir)}")
    for line in lines:
        click.echo(line)
    click.echo(f"Total duration: {time.time() - start_time:.2f} seconds")
    click.echo("=" * 80 + "\n")


def _toolkit(ctx):
    """Load the run configuration with command-line overrides and build the toolkit."""
    options = ctx.obj
    try:
        config = load_run_config(options['config'])
        overrides = {k: options[k] for k in ('seed', 'threads') if options[k] is not None}
        if options['out']:
            overrides['output_dir'] = options['out']
        config = replace(config, **overrides).validate()
    except (ConfigError, OSError) as e:
        click.echo(f"ERROR: {str(e)}", err=True)
        ctx.exit(EXIT_USAGE)
    try:
        os.makedirs(config.output_dir, exist_ok=True)
    except OSError as e:
        click.echo(f"ERROR: Output directory {config.output_dir} is not writable: {str(e)}", err=True)
        ctx.exit(EXIT_USAGE)
    if not os.access(config.output_dir, os.W_OK):
        click.echo(f"ERROR: Output directory {config.output_dir} is not writable", err=True)
        ctx.exit(EXIT_USAGE)
    return EOSToolkit(config, progress=not options['quiet'])


def _stop(ctx, toolkit):
    error = toolkit.last_error
    click.echo(f"ERROR: {str(error) if error else 'step failed'}", err=True)
    ctx.exit(_exit_code(error))


@click.group()
@click.option('--config', 'config_path', type=click.Path(), default=None,
              help='Run configuration JSON (packaged default if omitted)')
@click.option('--out', type=click.Path(), default=None, help='Output directory')
@click.option('--seed', type=int, default=None, help='Random seed')
@click.option('--threads', type=click.IntRange(min=1), default=None, help='Worker threads')
@click.option('--svg', is_flag=True, help='Also write SVG figures')
@click.option('--quiet', is_flag=True, help='Hide progress bars')
@click.option('--verbose', '-v', is_flag=True, help='Debug logging')
@click.pass_context
def cli(ctx, config_path, out, seed, threads, svg, quiet, verbose):
    """Two-beam electro-optic sampling of the THz vacuum: simulation and trace analysis."""
    if verbose:
        logging.getLogger().setLevel(logging.DEBUG)
    ctx.ensure_object(dict)
    ctx.obj.update({'config': config_path, 'out': out, 'seed': seed, 'threads': threads,
                    'svg': svg, 'quiet': quiet, 'start': time.time()})


@cli.command()
@click.option('--kind', type=click.Choice(['vacuum', 'source', 'both']), default='both',
              help='Signal to simulate')
@click.pass_context
def simulate(ctx, kind):
    """Simulate correlation traces and spectra."""
    toolkit = _toolkit(ctx)
    kinds = KINDS if kind == 'both' else (kind,)
    logger.info(f"Starting simulation at {datetime.now()}")
    if not toolkit.simulate(kinds):
        _stop(ctx, toolkit)
    if kind == 'both' and not toolkit.check_fdt():
        _stop(ctx, toolkit)
    output_dir = toolkit.config.output_dir
    if not toolkit.save_simulation(output_dir, svg=ctx.obj['svg']):
        _stop(ctx, toolkit)

    lines = [f"Kinds: {', '.join(kinds)}"]
    code = EXIT_OK
    if toolkit.fdt_reports:
        lines.append(f"FDT checks: {'PASSED' if toolkit.fdt_passed else 'FAILED'}")
        code = EXIT_OK if toolkit.fdt_passed else EXIT_CHECK_FAILED
    toolkit.save_summary_report(output_dir, 'simulation', {'kinds': ', '.join(kinds),
                                                           'geometry': toolkit.geometry.to_dict()})
    _banner("SIMULATION COMPLETED", output_dir, ctx.obj['start'], lines)
    ctx.exit(code)


@cli.command('fdt-check')
@click.option('--from-dir', type=click.Path(), default=None,
              help='Directory with simulate output; computed on the fly if omitted')
@click.pass_context
def fdt_check(ctx, from_dir):
    """Run the fluctuation-dissipation checks and write fdt_report.json."""
    toolkit = _toolkit(ctx)
    if from_dir and os.path.exists(os.path.join(from_dir, 'vacuum_trace.csv')):
        ok = toolkit.load_simulation(from_dir)
    else:
        if from_dir:
            logger.warning(f"No simulation outputs in {from_dir}; computing on the fly")
        ok = toolkit.simulate(KINDS)
    if not ok or not toolkit.check_fdt():
        _stop(ctx, toolkit)

    output_dir = toolkit.config.output_dir
    try:
        toolkit.save_fdt_report(output_dir)
    except OSError as e:
        click.echo(f"ERROR: {str(e)}", err=True)
        ctx.exit(EXIT_USAGE)
    lines = [f"{r.check}: {'pass' if r.passed else 'FAIL'} (metric {r.metric:.3e}, tolerance {r.tolerance:.1e})"
             for r in toolkit.fdt_reports]
    title = "FDT CHECKS PASSED" if toolkit.fdt_passed else "FDT CHECKS FAILED"
    _banner(title, output_dir, ctx.obj['start'], lines)
    ctx.exit(EXIT_OK if toolkit.fdt_passed else EXIT_CHECK_FAILED)


def _parse_distances(ctx, param, value):
    if value is None:
        return None
    try:
        distances = [float(v) for v in value.split(',') if v.strip()]
    except ValueError:
        raise click.BadParameter(f"expected comma-separated numbers, got {value}")
    if not distances:
        raise click.BadParameter("at least one distance is required")
    return distances


@cli.command()
@click.option('--distances', callback=_parse_distances, default=None,
              help='Comma-separated beam distances in um (config value if omitted)')
@click.pass_context
def sweep(ctx, distances):
    """Vacuum spectra over beam distances with a zero-crossing table."""
    toolkit = _toolkit(ctx)
    if not toolkit.run_sweep(distances) or not toolkit.save_sweep(toolkit.config.output_dir, svg=ctx.obj['svg']):
        _stop(ctx, toolkit)
    lines = [f"delta_r = {row.delta_r_um:g} um: first zero crossing {row.f_zero_THz:.3f} THz"
             for row in toolkit.sweep_summary.itertuples()]
    _banner("SWEEP COMPLETED", toolkit.config.output_dir, ctx.obj['start'], lines)
    ctx.exit(EXIT_OK)


@cli.command()
@click.pass_context
def synth(ctx):
    """Write a synthetic trace set with ground truth."""
    toolkit = _toolkit(ctx)
    if not toolkit.synthesize() or not toolkit.save_trace_set(toolkit.config.output_dir):
        _stop(ctx, toolkit)
    truth = toolkit.trace_set.metadata['ground_truth']
    lines = [f"Traces: {toolkit.trace_set.n_traces}",
             f"Injected offset: {truth['offset_fs']} fs, mid-run shift: {truth['shift_fs']} fs"]
    _banner("SYNTHESIS COMPLETED", toolkit.config.output_dir, ctx.obj['start'], lines)
    ctx.exit(EXIT_OK)


@cli.command()
@click.option('--manifest', type=click.Path(), required=True, help='Trace-set manifest JSON')
@click.pass_context
def analyze(ctx, manifest):
    """Run the trace-analysis pipeline on a manifest."""
    toolkit = _toolkit(ctx)
    if not toolkit.load_traces(manifest) or not toolkit.analyze_traces():
        _stop(ctx, toolkit)
    output_dir = toolkit.config.output_dir
    if not toolkit.save_analysis(output_dir, svg=ctx.obj['svg']):
        _stop(ctx, toolkit)

    summary = toolkit.analysis.summary()
    lines = [f"Zero delay: {summary['zero_delay_fs']:.2f} fs",
             f"Segment shifts: {', '.join(f'{s:.2f}' for s in summary['segment_shifts_fs'])} fs"]
    code = EXIT_OK
    check = toolkit.get_ground_truth_check()
    if check is not None:
        lines.append(f"Ground truth: {'recovered' if check['passed'] else 'NOT recovered'}")
        code = EXIT_OK if check['passed'] else EXIT_CHECK_FAILED
    toolkit.save_summary_report(output_dir, 'analysis', summary)
    _banner("ANALYSIS COMPLETED", output_dir, ctx.obj['start'], lines)
    ctx.exit(code)


def main():
    try:
        cli(obj={})
    except KeyboardInterrupt:
        sys.exit(EXIT_USAGE)


if __name__ == '__main__':
    main()
