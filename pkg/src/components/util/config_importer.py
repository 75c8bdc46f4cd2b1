"""Module for importing run configurations.

A configuration is a flat document of `key = value` lines with `#`
comments:

    a = -0.2
    b = -0.1
    Q = 1000
    M = 10
    ub_schedule = 0:14.5, 30:27
"""

import configparser
import logging
import math
from dataclasses import dataclass

from src.components.logic.analysis import BAND
from src.components.logic.controller import (ALPHA, RHO, ControllerParams,
                                             ParameterError)
from src.components.logic.plant import EmptyRateListError, Mode
from src.components.logic.sim import HORIZON, Scenario, ScenarioError
from src.components.util.trace_store import default_output_dir

logger = logging.getLogger(__name__)

# Implicit section the flat document is read into
__SECTION__ = 'run'

REQUIRED = ('a', 'b', 'Q', 'M')
RATE_KEYS = ('ub', 'ub_schedule', 'path_rates')
OPTIONAL = ('alpha', 'rho', 'horizon', 'n_sources', 'mode', 'q0', 'rtt0',
            'band', 'out_dir', 'emit_chart')
KEYS = REQUIRED + RATE_KEYS + OPTIONAL


@dataclass(frozen=True)
class RunConfig:
    """A validated scenario plus output options.

    report lists every default that was applied.
    """

    scenario: Scenario
    band: float
    out_dir: str
    emit_chart: bool
    report: tuple = ()


def str_to_bool(field, value):
    """Convert a string value to bool.

    True in case:
        - 'true', 'yes', '1'
    False in case:
        - 'false', 'no', '0'
    """
    b = value.strip().lower()

    if b in ('true', 'yes', '1'):
        return True

    if b in ('false', 'no', '0'):
        return False

    raise TypeMismatchError(field, 'boolean (true/false)')


def to_float(field, value):
    """Convert a string value to float."""
    try:
        return float(value)
    except ValueError:
        raise TypeMismatchError(field, 'number')


def to_int(field, value):
    """Convert a string value to int."""
    try:
        return int(value)
    except ValueError:
        raise TypeMismatchError(field, 'integer')


def to_mode(field, value):
    """Convert a string value to a plant mode."""
    try:
        return Mode(value.strip().lower())
    except ValueError:
        raise TypeMismatchError(field, 'analytic or physical')


def to_schedule(field, value):
    """Parse `k:rate` pairs separated by commas."""
    schedule = []

    for item in value.split(','):
        if ':' not in item:
            raise TypeMismatchError(field, 'comma-separated k:rate pairs')

        k, rate = item.split(':', 1)
        schedule.append((to_int(field, k), to_float(field, rate)))

    return tuple(schedule)


def to_rates(field, value):
    """Parse comma-separated service rates."""
    return [to_float(field, item) for item in value.split(',')
            if item.strip()]


class Config_Importer:
    """Importer class for run configurations.

    The supported sources are files and strings.
    """

    def import_file(self, path: str) -> RunConfig:
        """Import a configuration from a given file."""
        with open(path, 'r') as f:
            return self.import_str(f.read())

    def import_str(self, text: str) -> RunConfig:
        """Import a configuration from a given string."""
        values = self.read_values(text)

        missing = [key for key in REQUIRED if key not in values]

        if not any(key in values for key in RATE_KEYS):
            missing.append('ub')

        if missing:
            raise InvariantViolationError(', '.join(missing),
                                          'required key missing')

        given = [key for key in RATE_KEYS if key in values]

        if len(given) > 1:
            raise InvariantViolationError(', '.join(given),
                                          'only one of ub, ub_schedule, '
                                          'path_rates')

        report = []

        def option(key, convert, default):
            if key in values:
                return convert(key, values[key])

            report.append(key + ' = ' + str(default) + ' (default)')
            return default

        a = to_float('a', values['a'])
        b = to_float('b', values['b'])
        Q = to_float('Q', values['Q'])
        M = to_float('M', values['M'])

        alpha = option('alpha', to_float, ALPHA)
        rho = option('rho', to_float, RHO)
        horizon = option('horizon', to_int, HORIZON)
        n_sources = option('n_sources', to_int, 1)
        mode = option('mode', to_mode, Mode.ANALYTIC)
        q0 = option('q0', to_float, 0.0)
        rtt0 = option('rtt0', to_float, M)
        band = option('band', to_float, BAND)
        out_dir = option('out_dir', lambda _, v: v.strip(),
                         default_output_dir())
        emit_chart = option('emit_chart', str_to_bool, True)

        if not (math.isfinite(band) and band > 0):
            raise InvariantViolationError('band', '0 < band < inf')

        if 'path_rates' in values:
            rates = to_rates('path_rates', values['path_rates'])
        elif 'ub_schedule' in values:
            schedule = to_schedule('ub_schedule', values['ub_schedule'])
        else:
            schedule = ((0, to_float('ub', values['ub'])),)

        try:
            params = ControllerParams(a=a, b=b, Q=Q, M=M,
                                      alpha=alpha, rho=rho)

            kwargs = dict(horizon=horizon, n_sources=n_sources, mode=mode,
                          q0=q0, rtt0=rtt0)

            if 'path_rates' in values:
                scenario = Scenario.for_path(params, rates, **kwargs)
            else:
                scenario = Scenario(params, ub_schedule=schedule, **kwargs)

        except (ParameterError, ScenarioError) as e:
            # Name the rate key of the document, not the internal schedule
            field = given[0] if e.field == 'ub_schedule' else e.field
            raise InvariantViolationError(field, e.constraint)
        except EmptyRateListError:
            raise InvariantViolationError('path_rates', 'non-empty')
        except ValueError:
            raise InvariantViolationError('path_rates', 'rates >= 0')

        for line in report:
            logger.info('Applied %s', line)

        return RunConfig(scenario=scenario,
                         band=band,
                         out_dir=out_dir,
                         emit_chart=emit_chart,
                         report=tuple(report))

    def read_values(self, text: str):
        """Read the flat document into a key to raw-string dictionary."""
        parser = configparser.ConfigParser(interpolation=None,
                                           delimiters=('=',),
                                           comment_prefixes=('#',),
                                           inline_comment_prefixes=('#',),
                                           default_section='__defaults__')
        # Keys are case sensitive (Q, M)
        parser.optionxform = str

        try:
            parser.read_string('[' + __SECTION__ + ']\n' + text)
        except configparser.DuplicateOptionError as e:
            raise UnknownKeyError(e.option, 'duplicate key')
        except configparser.DuplicateSectionError as e:
            raise UnknownKeyError(e.section, 'sections are not supported')
        except configparser.Error as e:
            raise TypeMismatchError('document', 'key = value lines: ' +
                                    str(e).splitlines()[0])

        extra = [s for s in parser.sections() if s != __SECTION__]

        if extra:
            raise UnknownKeyError(extra[0], 'sections are not supported')

        values = dict(parser.items(__SECTION__))

        for key in values:
            if key not in KEYS:
                raise UnknownKeyError(key, 'unknown key')

        return values


def parse_config(text: str) -> RunConfig:
    """Parse a configuration document."""
    return Config_Importer().import_str(text)


class ConfigError (ValueError):
    """A configuration document is invalid."""

    def __init__(self, field, constraint):
        """Store the offending field and the violated constraint."""
        super().__init__(field + ': ' + constraint)

        self.field = field
        self.constraint = constraint


class UnknownKeyError (ConfigError):
    pass


class TypeMismatchError (ConfigError):
    pass


class InvariantViolationError (ConfigError):
    pass
