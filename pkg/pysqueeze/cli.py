"""Console script for pysqueeze."""
import os
import sys
import functools

import click
import pandas as pd

from pysqueeze.util import (out,
                            get_version,
                            get_template,
                            setup_logging,
                            write_json)
from pysqueeze.config import Config, PHYSICS_TEMPLATE_PATH, CAMPAIGN_TEMPLATE_PATH
from pysqueeze.exceptions import PySqueezeError, ConfigError, DataError
from pysqueeze.simulation import write_campaign_csv, read_campaign_csv
from pysqueeze.pysqueeze import SqueezingExperiment

# The exit code for invalid values, which is the same as for a broken config
VALUE_ERROR_EXIT_CODE = ConfigError.exit_code


def handle_errors(command):
    """
    Decorator for the sub commands, which turns the errors of this package into a red message and the matching exit
    code instead of a traceback.
    """
    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except PySqueezeError as e:
            click.secho('{}: {}'.format(e.__class__.__name__, str(e)), fg='red')
            sys.exit(e.exit_code)
        except ValueError as e:
            click.secho('ValueError: {}'.format(str(e)), fg='red')
            sys.exit(VALUE_ERROR_EXIT_CODE)

    return wrapper


def prepare_output(path: str) -> str:
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as e:
        raise DataError('Could not create the output folder "{}": {}'.format(path, str(e)))
    return path


def metadata(config: Config, seed) -> dict:
    """The header of every output file, which makes it reproducible"""
    return {
        'version':  get_version(),
        'seed':     seed,
        'config':   config.echo(),
    }


@click.group('pysqueeze', invoke_without_command=True)
@click.option('--version', is_flag=True, help='Print the currently installed version of the program')
@click.option('--verbose', '-v', is_flag=True, help='Print additional console output')
@click.option('--config', '-c', type=click.Path(exists=True, file_okay=True, dir_okay=False),
              help='Provide an alternative physics config file')
@click.option('--campaign', type=click.Path(exists=True, file_okay=True, dir_okay=False),
              help='Provide an alternative campaign config file')
@click.pass_context
def cli(ctx, version, verbose, config, campaign):
    """
    Command line interface to predict, simulate and analyze QND spin squeezing experiments.
    """
    ctx.ensure_object(dict)

    # If the "version" option was passed, the user simply wants to display the version number of the project.
    if version:
        click.secho('PYSQUEEZE VERSION')
        click.secho(get_version(), bold=True)
        return 0

    setup_logging(verbose)

    # The config singleton starts with the packaged templates. The files given as options only replace the
    # sections which they contain.
    cfg = Config().reset()
    try:
        if config:
            cfg.merge_file(config)
        if campaign:
            cfg.merge_file(campaign)
    except ConfigError as e:
        click.secho('ConfigError: {}'.format(str(e)), fg='red')
        sys.exit(e.exit_code)

    out(verbose, 'physics config:  {}'.format(config or PHYSICS_TEMPLATE_PATH))
    out(verbose, 'campaign config: {}'.format(campaign or CAMPAIGN_TEMPLATE_PATH))
    # The config object is saved into the context, which is passed on to the invoked sub commands
    ctx.obj['config'] = cfg
    ctx.obj['verbose'] = verbose


@click.command('predict', short_help='Computes the first principle predictions of the physics config')
@click.option('--out', '-o', 'out_path', type=click.Path(file_okay=False), default='.',
              help='The folder into which "predict.json" is written')
@click.option('--atom-number', '-n', type=click.FLOAT, help='The atom number at which kappa^2 is evaluated')
@click.pass_context
@handle_errors
def predict(ctx, out_path, atom_number):
    """
    Computes the polarizabilities, the coupling constant, the measurement strength and the predicted conditional
    noise reduction, the decoherence and the optimal trade-off between both, without simulating anything.
    """
    config = ctx.obj['config']
    verbose = ctx.obj['verbose']
    experiment = SqueezingExperiment(config)
    prediction = experiment.predict(atom_number)

    path = os.path.join(prepare_output(out_path), 'predict.json')
    write_json(path, dict(metadata(config, config.get_seed()), prediction=prediction))

    if verbose:
        out(verbose, get_template('report.j2').render(prediction=prediction))
    elif prediction['conditional_db'] is not None:
        click.secho('kappa^2 = {:.3f}, conditional reduction {:.2f} dB'.format(
            prediction['kappa2'], prediction['conditional_db']))
    else:
        click.secho('No coupling without probe photons', fg='yellow')
    out(True, '==> Written prediction to "{}"'.format(path), fg='green', bold=True)


@click.command('simulate', short_help='Simulates a measurement campaign and writes it to a CSV file')
@click.option('--out', '-o', 'out_path', type=click.Path(file_okay=False), default='.',
              help='The folder into which "campaign.csv" and its sidecar file are written')
@click.option('--seed', '-s', type=click.IntRange(0, 2 ** 64 - 1),
              help='Overrides the seed of the campaign config. Only the simulation uses a seed.')
@click.option('--threads', '-t', type=click.IntRange(1),
              help='The maximum number of worker threads of the simulation')
@click.option('--no-drift', is_flag=True, help='Disables the slow drift of the pulse signals')
@click.pass_context
@handle_errors
def simulate(ctx, out_path, seed, threads, no_drift):
    """
    Simulates a whole measurement campaign. The result is deterministic for a given config and seed.
    """
    config = ctx.obj['config']
    verbose = ctx.obj['verbose']
    if seed is not None:
        config.set_value('campaign.seed', seed)
    if no_drift:
        config.set_value('drift.model', 'NoDrift')

    experiment = SqueezingExperiment(config)
    campaign = experiment.simulate(threads=threads)
    out(verbose, ' > simulated {} atom runs and {} reference runs'.format(
        len(campaign.atom_runs()), len(campaign.reference_runs())))

    path = os.path.join(prepare_output(out_path), 'campaign.csv')
    sidecar = write_campaign_csv(campaign, path, metadata(config, campaign.seed)['config'])
    out(True, '==> Written campaign to "{}" ({})'.format(path, os.path.basename(sidecar)), fg='green', bold=True)


@click.command('analyze', short_help='Analyzes a campaign CSV file')
@click.argument('campaign_path', type=click.Path(exists=True, dir_okay=False))
@click.option('--out', '-o', 'out_path', type=click.Path(file_okay=False), default='.',
              help='The folder into which "report.json" and "plot.csv" are written')
@click.option('--pulses-combined', '-p', type=click.INT, help='The number of pulses per measurement')
@click.option('--bins', '-b', type=click.INT, help='The number of atom number bins')
@click.option('--no-differencing', is_flag=True, help='Disables the subtraction of the previous MOT cycle')
@click.pass_context
@handle_errors
def analyze(ctx, campaign_path, out_path, pulses_combined, bins, no_differencing):
    """
    Runs the data analysis on a campaign file: the noise budget from the quadratic fits of the binned variances and
    covariances, and the conditional noise reduction and squeezing at the largest atom number.
    """
    config = ctx.obj['config']
    verbose = ctx.obj['verbose']
    experiment = SqueezingExperiment(config)
    campaign = read_campaign_csv(campaign_path)
    report = experiment.analyze(
        campaign,
        pulses_combined=pulses_combined,
        bins=bins,
        differencing=False if no_differencing else None,
    )

    folder = prepare_output(out_path)
    report_path = os.path.join(folder, 'report.json')
    plot_path = os.path.join(folder, 'plot.csv')
    write_json(report_path, dict(metadata(config, campaign.seed), report=report.to_dict()))
    report.plot_frame().to_csv(plot_path, index=False, float_format='%.17g', lineterminator='\n')

    for name in report.budget.inconsistencies():
        click.secho('Warning: the noise component "{}" is negative beyond its uncertainty'.format(name), fg='yellow')
    if verbose:
        out(verbose, get_template('report.j2').render(report=report.to_dict()))
    elif report.squeezing:
        click.secho('conditional {:.2f} dB, squeezing {:.2f} +- {:.2f} dB'.format(
            report.squeezing.conditional_db, report.squeezing.xi_db, report.squeezing.uncertainty))
    out(True, '==> Written report to "{}"'.format(report_path), fg='green', bold=True)


@click.command('sweep', short_help='Compares the squeezing over eta with the trade-off model')
@click.argument('campaign_path', type=click.Path(exists=True, dir_okay=False))
@click.option('--out', '-o', 'out_path', type=click.Path(file_okay=False), default='.',
              help='The folder into which "sweep.csv" is written')
@click.option('--no-differencing', is_flag=True, help='Disables the subtraction of the previous MOT cycle')
@click.option('--depths', '-d', type=click.STRING,
              help='Comma separated optical depths, for which the best squeezing is tabulated in "depths.csv"')
@click.pass_context
@handle_errors
def sweep(ctx, campaign_path, out_path, no_differencing, depths):
    """
    Evaluates the squeezing of a campaign for every number of combined pulses P = 1 .. 10, which corresponds to an
    increasing decoherence eta, next to the theoretical curve of the trade-off model at the same values of eta.
    """
    config = ctx.obj['config']
    verbose = ctx.obj['verbose']
    experiment = SqueezingExperiment(config)
    campaign = read_campaign_csv(campaign_path)
    points, theory = experiment.sweep(campaign, differencing=False if no_differencing else None)

    frame = pd.DataFrame({
        'pulses_combined':      [point.pulses_combined for point in points],
        'eta':                  [point.eta for point in points],
        'xi_db':                [point.xi_db for point in points],
        'xi_db_std':            [point.xi_db_std for point in points],
        'conditional_db':       [point.conditional_db for point in points],
        'conditional_db_std':   [point.conditional_db_std for point in points],
        'theory_xi_db':         [xi_db for _, xi_db in theory],
    })
    folder = prepare_output(out_path)
    path = os.path.join(folder, 'sweep.csv')
    frame.to_csv(path, index=False, float_format='%.17g', lineterminator='\n')
    write_json(os.path.join(folder, 'sweep.json'), metadata(config, campaign.seed))
    for point in points:
        out(verbose, ' > P = {:2d}: eta = {:.3f}, xi = {:6.2f} dB'.format(point.pulses_combined, point.eta,
                                                                          point.xi_db))

    if depths:
        values = [float(value) for value in depths.split(',') if value.strip()]
        scaling = experiment.depth_scaling(values)
        depth_path = os.path.join(folder, 'depths.csv')
        frame = pd.DataFrame({
            'depth':                    scaling.depths,
            'xi_min':                   scaling.xi_min,
            'gain_over_single_color':   scaling.gain_over_single_color,
        })
        frame.to_csv(depth_path, index=False, float_format='%.17g', lineterminator='\n')
        click.secho('xi_min scales with d^{:.4f} (single color d^{:.1f})'.format(
            scaling.slope, scaling.single_color_slope))

    out(True, '==> Written sweep to "{}"'.format(path), fg='green', bold=True)


cli.add_command(predict)
cli.add_command(simulate)
cli.add_command(analyze)
cli.add_command(sweep)


if __name__ == "__main__":
    sys.exit(cli())  # pragma: no cover
