import functools
import json
import logging
import sys

import click

from . import get_logger as logger_setup
from .bench import check_methods, load_bench_config, run_bench
from .errors import QmvError
from .get_logger import get_logger
from .liebrobinson import lr_error, max_radius_for_cap, min_radius, radius_table
from .meanvalue import mean_value, oracle_report
from .run_config import load, load_settings

log = get_logger(__name__, logging.INFO)


def exit_on_error(f):
    """Convert simulator errors into log messages and their exit codes."""
    @functools.wraps(f)
    def decorated(*args, **kwargs):
        try:
            return f(*args, **kwargs)
        except QmvError as e:
            log.error('%s: %s', type(e).__name__, e)
            sys.exit(e.exit_code)
    return decorated


def write_document(doc, out):
    text = json.dumps(doc, indent=2, sort_keys=True)
    if out:
        with open(out, 'w') as fh:
            fh.write(text + '\n')
        log.info('wrote %s', out)
    else:
        click.echo(text)


@click.group()
@click.option('--verbose', '-v', is_flag=True, help='Log numerical detail (DEBUG)')
@click.pass_context
def main(ctx, verbose):
    """Lightcone mean value simulator."""
    settings = load_settings()
    logger_setup.setup(logging.DEBUG if verbose else getattr(logging, settings['LOG_LEVEL'], logging.INFO))

    for key in settings:
        log.debug('QMV CONFIG: %r: %r', key, settings[key])

    ctx.obj = settings


@main.command()
@click.argument('config', type=click.Path(exists=True, dir_okay=False))
@click.option('--out', type=click.Path(dir_okay=False), help='Result JSON file (stdout when absent)')
@click.option('--threads', type=int, envvar='QMV_THREADS', help='Worker threads for per-site and per-strip work')
@click.pass_obj
@exit_on_error
def run(settings, config, out, threads):
    """Estimate the mean value of a run configuration."""
    run_config = load(config, settings)
    report = mean_value(run_config, threads=threads)
    report['config'] = run_config.document
    write_document(report, out)


@main.command()
@click.argument('config', type=click.Path(exists=True, dir_okay=False))
@click.option('--out', type=click.Path(dir_okay=False), help='Result JSON file (stdout when absent)')
@click.pass_obj
@exit_on_error
def oracle(settings, config, out):
    """Exact full state vector evaluation (small lattices only)."""
    write_document(oracle_report(load(config, settings)), out)


@main.command()
@click.option('--time', 'T', type=float, required=True, help='Evolution time T')
@click.option('--g', type=float, required=True, help='Coupling bound g')
@click.option('--degree', type=int, default=4, show_default=True, help='Maximum lattice degree')
@click.option('--sites', type=int, required=True, help='Number of lattice sites n')
@click.option('--budget', type=float, required=True, help='Lightcone error budget')
@click.option('--cap', type=int, default=None, help='Lightcone qubit cap (LIGHTCONE_QUBIT_CAP when absent)')
@click.pass_obj
@exit_on_error
def radius(settings, T, g, degree, sites, budget, cap):
    """Minimal lightcone radius and the error table around it."""
    cap = cap if cap is not None else settings['LIGHTCONE_QUBIT_CAP']
    L = min_radius(T, g, degree, sites, budget, cap)
    click.echo('L = %d' % L)
    click.echo('%4s %14s %14s' % ('L', 'eps_lr', 'n*eps_lr'))
    for row in radius_table(T, g, degree, sites, L + 2):
        click.echo('%4d %14.6e %14.6e' % row)
    if L + 2 > max_radius_for_cap(cap):
        log.info('rows beyond L=%d exceed the qubit cap %d', max_radius_for_cap(cap), cap)
    log.debug('eps_lr(L*) = %.6e', lr_error(L, T, g, degree))


@main.command()
@click.argument('config', type=click.Path(exists=True, dir_okay=False))
@click.option('--methods', default='trotter,rk4,dp5', show_default=True, help='Comma-separated solver list')
@click.option('--out', type=click.Path(dir_okay=False), help='CSV file (stdout when absent)')
@click.pass_obj
@exit_on_error
def bench(settings, config, methods, out):
    """Time and compare the propagator solvers on random chains."""
    methods = check_methods([m.strip() for m in methods.split(',') if m.strip()])
    df = run_bench(load_bench_config(config, settings), methods)
    if out:
        df.to_csv(out, index=False)
        log.info('wrote %s', out)
    else:
        click.echo(df.to_csv(index=False), nl=False)


@main.command()
@click.argument('config', type=click.Path(exists=True, dir_okay=False))
@click.pass_obj
@exit_on_error
def validate(settings, config):
    """Check a run configuration without running it."""
    run_config = load(config, settings)
    click.echo('ok: %dx%d lattice, %d edge terms, T=%g, delta=%g, solver=%s, contraction=%s' % (
        run_config.lattice.nx, run_config.lattice.ny, len(run_config.hamiltonian.terms), run_config.time,
        run_config.delta, run_config.solver.method, run_config.backend.contraction))


if __name__ == '__main__':
    main()
