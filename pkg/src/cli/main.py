"""Command-line front end.

Commands:
    analyze    print the gain design, poles, steady state and settling
    simulate   run a configured scenario and write its trace
    reproduce  run the reference suite and write its traces and charts
    sweep      evaluate a grid of pole pairs and write the report
"""

import argparse
import logging
import math
import os
import sys
from dataclasses import replace

import numpy as np

from src.components.logic.analysis import BAND, predicted_queue
from src.components.logic.controller import (ControllerParams,
                                             ParameterError, design_gain)
from src.components.logic.plant import Mode
from src.components.logic.sim import (FIGURES, HORIZON, TABLE_LINES,
                                      Scenario, ScenarioError,
                                      run_reference_suite, run_scenario,
                                      sweep)
from src.components.logic.ztx import ZTransformError
from src.components.util.config_importer import Config_Importer, ConfigError
from src.components.util.trace_store import (default_output_dir,
                                             emit_trace, ensure_dir,
                                             write_sweep_csv)

logger = logging.getLogger(__name__)

# Exit codes
__OK__ = 0
__CONFIG_ERROR__ = 1
__IO_ERROR__ = 2

ANALYZE = 'analyze'
SIMULATE = 'simulate'
REPRODUCE = 'reproduce'
SWEEP = 'sweep'

# Pole grid of the sweep when none is given
__SWEEP_GRID__ = tuple(float(v)
                       for v in np.round(np.arange(-0.9, 0.95, 0.1), 10))


def build_parser():
    """Create the argument parser with one subcommand per operation."""
    parser = argparse.ArgumentParser(
        prog='flowctl',
        description='Discrete-time flow control: design, simulate and '
                    'reproduce the reference experiments.')
    parser.add_argument('-v', '--verbose', action='store_true',
                        help='log debug messages')

    commands = parser.add_subparsers(dest='command', required=True)

    for name, text in ((ANALYZE, 'print the controller design'),
                       (SIMULATE, 'run a configured scenario'),
                       (REPRODUCE, 'run the reference suite'),
                       (SWEEP, 'evaluate a grid of pole pairs')):
        command = commands.add_parser(name, help=text)
        command.add_argument('--config', help='configuration file')
        command.add_argument('--out', help='output directory')
        command.add_argument('--band', type=float,
                             help='settling band as a fraction')
        command.add_argument('--fig', type=int, choices=sorted(FIGURES),
                             help='reference pole pair (a, b)')
        command.add_argument('--mode', choices=[m.value for m in Mode],
                             help='analytic or physical')
        command.add_argument('--horizon', type=int, help='epochs to run')

        if name == SWEEP:
            command.add_argument('--a-values', dest='a_values',
                                 help='comma-separated a values')
            command.add_argument('--b-values', dest='b_values',
                                 help='comma-separated b values')
            command.add_argument('--workers', type=int, default=1,
                                 help='parallel grid evaluations')

    return parser


def load_config(args):
    """Import the configuration file, or None when none is given."""
    if args.config is None:
        return None

    config = Config_Importer().import_file(args.config)

    for line in config.report:
        print('default: ' + line)

    return config


def base_scenario(args, config):
    """Return the scenario from the config or from a reference figure.

    Without a config the first table line is used.
    """
    if config is not None:
        scenario = config.scenario
    else:
        a, b = FIGURES[args.fig or 3]
        ub, M, Q = TABLE_LINES[0]
        scenario = Scenario(ControllerParams(a=a, b=b, Q=Q, M=M),
                            ub_schedule=((0, ub),))

    changes = {}

    if args.horizon is not None:
        changes['horizon'] = args.horizon

    if args.mode is not None:
        changes['mode'] = Mode(args.mode)

    if changes:
        scenario = replace(scenario, **changes)

    return scenario


def settings(args, config):
    """Return the band and output directory after applying the flags."""
    band = args.band if args.band is not None else (
        config.band if config is not None else BAND)

    if not (math.isfinite(band) and band > 0):
        raise ConfigError('band', '0 < band < inf')

    out_dir = args.out or (
        config.out_dir if config is not None else default_output_dir())

    return band, out_dir


def analyze(args):
    """Print the gain design of the configured parameters."""
    config = load_config(args)
    scenario = base_scenario(args, config)
    band, _ = settings(args, config)

    params = scenario.params
    design = design_gain(params)
    response = predicted_queue(params, scenario.horizon, band)

    print('a = {0}, b = {1}, Q = {2}, M = {3}, rho = {4}'.format(
        params.a, params.b, params.Q, params.M, params.rho))
    print('gain c = {0}'.format(design.c))
    print('residues a1 = {0}, a2 = {1}'.format(design.residues.a1,
                                               design.residues.a2))
    print('poles = {0}, {1}'.format(*design.poles))
    print('steady-state queue = {0}'.format(design.steady_state_queue))
    print('final value of G(z)S(z) = {0}'.format(response.steady_state))
    print('settling epoch ({0} band) = {1}'.format(band,
                                                   response.settling_epoch))

    return __OK__


def simulate(args):
    """Run the configured scenario and write its trace."""
    config = load_config(args)
    scenario = base_scenario(args, config)
    band, out_dir = settings(args, config)

    emit_chart = config.emit_chart if config is not None else True

    trace = run_scenario(scenario)

    for path in emit_trace(trace, out_dir, 'trace', emit_chart):
        print(path)

    print('final queue = {0}, settling epoch = {1}'.format(
        trace.final_queue(), trace.settling_epoch(band)))

    return __OK__


def reproduce(args):
    """Run the reference suite and write every trace and chart."""
    config = load_config(args)
    band, out_dir = settings(args, config)

    figures = [args.fig] if args.fig is not None else sorted(FIGURES)
    mode = Mode(args.mode) if args.mode is not None else Mode.ANALYTIC
    horizon = args.horizon if args.horizon is not None else HORIZON

    suite = run_reference_suite(figures, mode, horizon)

    for figure, traces in suite.items():
        for line, trace in enumerate(traces, start=1):
            name = 'fig{0}_line{1}'.format(figure, line)

            for path in emit_trace(trace, out_dir, name, emit_chart=True):
                print(path)

            print('{0}: c = {1}, final queue = {2}, settling epoch = {3}'
                  .format(name, trace.design.c, trace.final_queue(),
                          trace.settling_epoch(band)))

    return __OK__


def parse_values(field, text):
    """Parse a comma-separated list of floats."""
    try:
        return [float(v) for v in text.split(',') if v.strip()]
    except ValueError:
        raise ConfigError(field, 'comma-separated numbers')


def run_sweep(args):
    """Evaluate a pole grid and write the sweep CSV."""
    config = load_config(args)
    scenario = base_scenario(args, config)
    band, out_dir = settings(args, config)

    a_values = parse_values('a-values', args.a_values) \
        if args.a_values else __SWEEP_GRID__
    b_values = parse_values('b-values', args.b_values) \
        if args.b_values else __SWEEP_GRID__

    entries = sweep(a_values, b_values, scenario, band, args.workers)

    path = write_sweep_csv(entries,
                           os.path.join(ensure_dir(out_dir), 'sweep.csv'))
    print(path)

    stable = sum(1 for e in entries if e.stable)
    print('{0} of {1} pole pairs stable'.format(stable, len(entries)))

    return __OK__


COMMANDS = {
    ANALYZE: analyze,
    SIMULATE: simulate,
    REPRODUCE: reproduce,
    SWEEP: run_sweep,
}


def main(argv=None):
    """Dispatch a command and map failures to exit codes."""
    args = build_parser().parse_args(argv)

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format='%(levelname)s %(name)s: %(message)s')

    try:
        return COMMANDS[args.command](args)
    except (ConfigError, ParameterError, ScenarioError,
            ZTransformError) as e:
        print('error: ' + str(e), file=sys.stderr)
        return __CONFIG_ERROR__
    except OSError as e:
        print('error: ' + str(e), file=sys.stderr)
        return __IO_ERROR__


if __name__ == "__main__":
    sys.exit(main())
