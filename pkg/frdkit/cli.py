"""The ``frdkit`` command-line interface"""

import inspect
import os
import time
from functools import wraps

import click

from . import __version__, theorycheck
from ._utils import (
    echo, echo_error, echo_warning, exit, format_elapsed_time, json_encode)
from .dataio import DatasetSchema, load_csv, run_cutoffs, write_results
from .exceptions import FrdError, InvalidInputError
from .inference import CritLaw, VarianceFlavor, VarianceSpec
from .simlab import (
    load_config, run_grid, sampling_distribution, write_sampling_distribution)
from .simlab import write_results as write_mc_results


def _parse_cli_options(func):
    """Parse click options from a function signature"""
    options = []
    for param in inspect.signature(func).parameters.values():
        if param.kind not in {param.POSITIONAL_OR_KEYWORD, param.KEYWORD_ONLY}:
            # Only keyword arguments are currently supported
            continue

        option_name = '--' + param.name.lower().replace('_', '-').strip('-')
        kwargs = {}
        if param.annotation in {str, int, float, bool}:
            # Only basic types are currently supported
            kwargs['type'] = param.annotation

        if param.default != param.empty:
            kwargs['default'] = param.default
            kwargs['show_default'] = param.default is not None
        else:
            # If the param doesn't have a default, then it's required
            kwargs['required'] = True

        if param.annotation == bool or isinstance(param.default, bool):
            if param.default is True:
                option_name += '/--no-' + option_name.lstrip('-')
            else:
                kwargs['is_flag'] = True

        args = (option_name, param.name)

        options.append((args, kwargs))

    # Reverse it so the decorators are applied in the correct order
    return options[::-1]


def _emit(data, pretty=False):
    click.echo(json_encode(data, pretty=pretty))


def _split(values):
    """Flatten repeated and comma-separated option values."""
    out = []
    for value in values:
        out.extend(v.strip() for v in value.split(',') if v.strip())
    return out


class FrdGroup(click.Group):
    """A group that turns frdkit errors into a one-line message and the
    error's exit code."""

    def invoke(self, ctx):
        try:
            return super(FrdGroup, self).invoke(ctx)
        except FrdError as ex:
            echo_error('[{category}] {message}'.format(
                category=ex.category, message=str(ex)))
            exit(ex.exit_code)


class TheoryCLI(click.MultiCommand):
    """One subcommand per exposed check in :mod:`frdkit.theorycheck`."""

    def list_commands(self, ctx):
        return theorycheck.list_checks()

    def get_command(self, ctx, name):
        if name not in theorycheck.list_checks():
            return None

        check = theorycheck.get_check(name)

        @wraps(check)
        def command(pretty=False, **kwargs):
            _emit(check(**kwargs), pretty=pretty)

        for option_args, option_kwargs in _parse_cli_options(check):
            command = click.option(*option_args, **option_kwargs)(command)
        command = click.option(
            '--pretty', is_flag=True, help='Indent the JSON output.',
        )(command)

        return click.command(name)(command)


@click.group(cls=FrdGroup)
@click.version_option(__version__, prog_name='frdkit')
def main():
    """Fuzzy regression discontinuity estimation with lambda-class
    estimators."""


@main.command()
@click.option('--data', required=True,
              type=click.Path(exists=True, dir_okay=False),
              help='CSV file with a header row.')
@click.option('--x', 'x_col', required=True, help='Running variable column.')
@click.option('--y', 'y_col', required=True, help='Outcome column.')
@click.option('--d', 'd_col', required=True, help='Treatment column (0/1).')
@click.option('--w', 'w_cols', multiple=True,
              help='Covariate column(s); repeat or separate with commas.')
@click.option('--cluster', 'cluster_col', default=None,
              help='Cluster id column for clustered errors.')
@click.option('--cutoff', 'cutoffs', type=float, multiple=True, required=True)
@click.option('--bandwidth', 'bandwidths', multiple=True, required=True,
              help='A bandwidth or "rot"; repeat or separate with commas.')
@click.option('--estimator', 'estimators', multiple=True,
              default=('standard,lambda4,lambda1,ols',), show_default=True)
@click.option('--ci-level', type=float, default=0.95, show_default=True)
@click.option('--crit-law', type=click.Choice([c.value for c in CritLaw]),
              default=CritLaw.STUDENT_T.value, show_default=True)
@click.option('--variance',
              type=click.Choice([f.value for f in VarianceFlavor]),
              default=VarianceFlavor.HC1.value, show_default=True)
@click.option('--out', 'out_dir', default=None, type=click.Path(),
              help='Directory for results.csv and results.json. Without '
                   'it, results are printed as JSON.')
def estimate(data, x_col, y_col, d_col, w_cols, cluster_col, cutoffs,
             bandwidths, estimators, ci_level, crit_law, variance, out_dir):
    """Estimate treatment effects at one or more cutoffs."""
    schema = DatasetSchema(
        x_col, y_col, d_col, w=tuple(_split(w_cols)), cluster=cluster_col)
    loaded = load_csv(data, schema)
    if loaded.dropped:
        echo_warning('Dropped {n} row(s) with missing values'.format(
            n=loaded.dropped))

    estimators = _split(estimators)
    bandwidths = _split(bandwidths)
    runs = run_cutoffs(
        loaded.sample, cutoffs, bandwidths, estimators, level=ci_level,
        crit_law=crit_law,
        variance=VarianceSpec(variance, loaded.cluster_ids))

    missing = sum(not c.ok for run in runs for c in run.cells)
    if missing:
        echo_warning('{n} cell(s) could not be estimated; see the reason '
                     'column'.format(n=missing))

    if out_dir is None:
        _emit([{'cutoff': run.cutoff, 'cells': [c.to_row() for c in run.cells]}
               for run in runs], pretty=True)
        return

    metadata = {
        'data': os.path.basename(data), 'columns': list(schema.columns),
        'cutoffs': sorted(cutoffs), 'bandwidths': bandwidths,
        'estimators': estimators, 'ci_level': ci_level,
        'crit_law': crit_law, 'variance': variance,
        'dropped_rows': loaded.dropped,
    }
    csv_path, json_path = write_results(runs, out_dir, metadata=metadata)
    echo('Wrote {csv} and {json}\n'.format(csv=csv_path, json=json_path))


@main.command()
@click.option('--config', 'config_path', required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option('--out', 'out_dir', required=True, type=click.Path())
@click.option('--workers', type=int, default=None,
              help='Worker processes (default: physical CPU count).')
@click.option('--quiet', is_flag=True, help='Don\'t print progress.')
def simulate(config_path, out_dir, workers, quiet):
    """Run a Monte Carlo grid from a JSON config."""
    config = load_config(config_path)
    started = time.time()
    summaries = run_grid(config, workers=workers, verbose=not quiet)
    write_mc_results(summaries, out_dir, config=config)

    degenerate = sum(s.reps_flagged_degenerate for s in summaries)
    if degenerate:
        echo_warning('{n} estimator replication(s) were degenerate and left '
                     'out of the metrics'.format(n=degenerate))
    if not quiet:
        echo('Done in {elapsed}\n'.format(
            elapsed=format_elapsed_time(time.time() - started)))


@main.command('sampling-dist')
@click.option('--config', 'config_path', required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option('--out', 'out_dir', required=True, type=click.Path())
@click.option('--reference', default='lambda4', show_default=True,
              help='Estimator the normal and Cauchy references are '
                   'calibrated on.')
@click.option('--grid-points', type=int, default=201, show_default=True)
@click.option('--workers', type=int, default=None)
def sampling_dist(config_path, out_dir, reference, grid_points, workers):
    """Simulate the sampling distributions of several estimators."""
    config = load_config(config_path)
    grid = config.grid()
    if len(grid) != 1:
        raise InvalidInputError(
            'sampling-dist takes a single configuration, got {}'.format(
                len(grid)))
    dist = sampling_distribution(
        grid[0], config.estimators, reps=config.reps, seed=config.seed,
        workers=config.workers if workers is None else workers,
        bandwidth=config.bandwidth, reference=reference,
        grid_points=grid_points)
    write_sampling_distribution(dist, out_dir, seed=config.seed)
    _emit(dist.to_dict(), pretty=True)


@main.command('theory', cls=TheoryCLI)
def theory():
    """Numerical checks of the finite-sample theory (JSON output)."""
