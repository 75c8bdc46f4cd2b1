"""Closed-loop scenario engine.

Couples the sending-rate law with the bottleneck plant, splits the
bottleneck equally between sources and runs the reference experiments.
"""

import bisect
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

from src.components.logic.analysis import BAND, predicted_queue, settling_time
from src.components.logic.controller import (ControllerParams, GainDesign,
                                             UnstableParamsError,
                                             check_stability, design_gain,
                                             lambda_rate, send_rate)
from src.components.logic.plant import (Mode, PlantState, min_service_rate,
                                        queue_step, rtt_update)

logger = logging.getLogger(__name__)

# Default number of simulated epochs
HORIZON = 60

# Rows of the parameter table: (ub packets/ms, M ms, Q packets)
TABLE_LINES = (
    (14.5, 10.0, 1000.0),
    (20.0, 7.5, 1000.0),
    (27.0, 5.0, 1000.0),
)

# Pole parameters (a, b) of the two reference figures
FIGURES = {
    3: (-0.2, -0.1),
    4: (-0.5, -0.1),
}


@dataclass(frozen=True)
class Scenario:
    """Description of a closed-loop run.

    Parameters:
        params : Controller design for the whole bottleneck
        horizon : Number of epochs K, the run records k = 0..K
        n_sources : Sources sharing the bottleneck equally
        ub_schedule : (epoch, ub) pairs, ub applies from that epoch on
        mode : Mode.ANALYTIC or Mode.PHYSICAL
        q0 : Initial queue in packets, split equally between sources
        rtt0 : Initial RTT estimate in ms, defaults to M
    """

    params: ControllerParams
    horizon: int = HORIZON
    n_sources: int = 1
    ub_schedule: tuple = ((0, 0.0),)
    mode: Mode = Mode.ANALYTIC
    q0: float = 0.0
    rtt0: float = None

    def __post_init__(self):
        """Validate the scenario and normalize the schedule."""
        if self.n_sources < 1:
            raise ZeroSourcesError('n_sources', 'n_sources >= 1')

        if self.horizon < 1:
            raise ScenarioError('horizon', 'horizon >= 1')

        schedule = tuple((int(k), float(ub)) for k, ub in self.ub_schedule)

        if len(schedule) == 0 or schedule[0][0] != 0:
            raise ScheduleError('ub_schedule', 'first epoch = 0')

        for (k1, _), (k2, _) in zip(schedule, schedule[1:]):
            if k2 <= k1:
                raise ScheduleError('ub_schedule',
                                    'epochs strictly increasing')

        if not all(math.isfinite(ub) and ub >= 0 for _, ub in schedule):
            raise ScheduleError('ub_schedule', '0 <= rate < inf')

        if self.rtt0 is not None and not (math.isfinite(self.rtt0)
                                          and self.rtt0 > 0):
            raise ScenarioError('rtt0', '0 < rtt0 < inf')

        if not math.isfinite(self.q0):
            raise ScenarioError('q0', 'q0 finite')

        if self.mode is Mode.PHYSICAL and not 0 <= self.q0 <= self.params.Q:
            raise ScenarioError('q0', '0 <= q0 <= Q')

        object.__setattr__(self, 'ub_schedule', schedule)

    @staticmethod
    def for_path(params: ControllerParams, path_rates, **kwargs):
        """Build a scenario whose ub is the slowest rate on the path."""
        ub = min_service_rate(path_rates)

        return Scenario(params, ub_schedule=((0, ub),), **kwargs)

    @property
    def initial_rtt(self) -> float:
        """Return rtt0, or M when it is not set."""
        return self.params.M if self.rtt0 is None else self.rtt0

    def ub_at(self, k: int) -> float:
        """Return the bottleneck rate in effect at epoch k."""
        epochs = [epoch for epoch, _ in self.ub_schedule]

        return self.ub_schedule[bisect.bisect_right(epochs, k) - 1][1]

    def source_params(self) -> ControllerParams:
        """Return the design of one source, which owns Q / n."""
        return replace(self.params, Q=self.params.Q / self.n_sources)


@dataclass(frozen=True)
class EpochRecord:
    """One source at one epoch; a row of the trace CSV."""

    k: int
    source: int
    u0: float
    ub: float
    rtt: float
    lam: float
    q_time: float
    q_zpred: float
    drops: float


@dataclass(frozen=True)
class Trace:
    """Per-epoch records of a run, ordered by epoch and then source.

    design is the per-source GainDesign; final_states holds the plant
    state of every source after the last epoch.
    """

    scenario: Scenario
    design: GainDesign
    records: tuple
    final_states: tuple = ()

    @property
    def horizon(self) -> int:
        """Return the last recorded epoch."""
        return self.records[-1].k

    def epoch(self, k: int):
        """Return the records of all sources at epoch k."""
        n = self.scenario.n_sources

        return self.records[k * n:(k + 1) * n]

    def __series(self, column):
        """Sum a column over sources, one value per epoch."""
        return [sum(getattr(r, column) for r in self.epoch(k))
                for k in range(self.horizon + 1)]

    def queue_series(self):
        """Return the time-domain queue, summed over sources."""
        return self.__series('q_time')

    def zpred_series(self):
        """Return the Z-domain prediction, summed over sources."""
        return self.__series('q_zpred')

    def drops_series(self):
        """Return the cumulative drops, summed over sources."""
        return self.__series('drops')

    def send_rate_series(self):
        """Return the total sending rate."""
        return self.__series('u0')

    def final_queue(self) -> float:
        """Return the time-domain queue at the last epoch."""
        return self.queue_series()[-1]

    def settling_epoch(self, band: float = BAND):
        """Return the settling epoch of the predicted queue."""
        return settling_time(self.zpred_series(),
                             self.design.steady_state_queue
                             * self.scenario.n_sources, band)


def split_bottleneck(ub: float, n: int):
    """Divide ub into n equal shares; the last absorbs the rounding."""
    if n < 1:
        raise ZeroSourcesError('n_sources', 'n_sources >= 1')

    if ub < 0:
        raise ScenarioError('ub', 'ub >= 0')

    share = ub / n

    return [share] * (n - 1) + [ub - share * (n - 1)]


def run_scenario(s: Scenario) -> Trace:
    """Run the closed loop over epochs 0..K."""
    report = check_stability(s.params.a, s.params.b)

    if not report:
        raise UnstableParamsError(report.field, 'stable pole pair',
                                  report.reason.value)

    n = s.n_sources
    params = s.source_params()
    design = design_gain(params)
    zpred = predicted_queue(params, s.horizon).values

    logger.debug('Running a=%s b=%s n=%s mode=%s over %s epochs',
                 params.a, params.b, n, s.mode.value, s.horizon)

    states = [PlantState(q=s.q0 / n, rtt=s.initial_rtt, mode=s.mode)
              for _ in range(n)]
    records = []

    for k in range(s.horizon + 1):
        shares = split_bottleneck(s.ub_at(k), n)
        lam = lambda_rate(design, k)

        for i, state in enumerate(states):
            u0 = send_rate(design, shares[i], k, s.mode)

            records.append(EpochRecord(k=k, source=i, u0=u0, ub=shares[i],
                                       rtt=state.rtt, lam=lam,
                                       q_time=state.q, q_zpred=zpred[k],
                                       drops=state.drops))

            if k < s.horizon:
                state = queue_step(state, u0, shares[i], state.rtt,
                                   params.Q)
                states[i] = replace(state, rtt=rtt_update(state.rtt,
                                                          params.M,
                                                          params.alpha))

    logger.debug('Finished with total queue %s',
                 sum(state.q for state in states))

    return Trace(scenario=s, design=design, records=tuple(records),
                 final_states=tuple(states))


class Reference_Suite:
    """Runs the parameter table under the reference pole pairs."""

    def __init__(self, mode=Mode.ANALYTIC, horizon=HORIZON):
        """Init the suite with every figure in the working set.

        Parameters:
            mode : Mode of every run
            horizon : Number of epochs per run
        """
        self.figures = dict(FIGURES)
        self.working_figures = set(self.figures.keys())
        self.mode = mode
        self.horizon = horizon

    def set_working_figures(self, figures):
        """Choose which pole pairs to run.

        Unknown figure numbers are ignored.
        """
        self.working_figures = set()
        for f in figures:
            if f in self.figures:
                self.working_figures.add(f)

    def get_working_figures(self):
        """Return the current working set of figures."""
        return self.working_figures

    def scenarios(self, figure):
        """Return the scenarios of one figure, one per table line."""
        a, b = self.figures[figure]

        return [Scenario(ControllerParams(a=a, b=b, Q=Q, M=M),
                         horizon=self.horizon,
                         ub_schedule=((0, ub),),
                         mode=self.mode)
                for ub, M, Q in TABLE_LINES]

    def apply(self):
        """Return a dictionary mapping each figure to its traces."""
        res = {}
        for figure in sorted(self.working_figures):
            res[figure] = [run_scenario(s) for s in self.scenarios(figure)]
        return res


def run_reference_suite(figures=tuple(FIGURES), mode=Mode.ANALYTIC,
                        horizon=HORIZON):
    """Run the three table lines under each reference pole pair."""
    suite = Reference_Suite(mode, horizon)
    suite.set_working_figures(figures)

    return suite.apply()


@dataclass(frozen=True)
class SweepEntry:
    """One grid point of a parameter sweep."""

    a: float
    b: float
    stable: bool
    reason: str = None
    c: float = None
    settling_epoch: int = None


def __sweep_point(a, b, base, band):
    """Gate, design and settle one (a, b) pair."""
    report = check_stability(a, b)

    if not report:
        logger.debug('Rejected a=%s b=%s: %s', a, b, report.reason.value)
        return SweepEntry(a, b, False, reason=report.reason.value)

    params = replace(base.params, a=a, b=b)
    response = predicted_queue(params, base.horizon, band)

    return SweepEntry(a, b, True,
                      c=design_gain(params).c,
                      settling_epoch=response.settling_epoch)


def sweep(a_values, b_values, base: Scenario, band=BAND, workers=None):
    """Evaluate every (a, b) of the grid; entries keep the input order."""
    a_values = list(a_values)
    b_values = list(b_values)

    if len(a_values) == 0 or len(b_values) == 0:
        raise ScenarioError('grid', 'non-empty a and b values')

    grid = [(a, b) for a in a_values for b in b_values]

    def point(pair):
        return __sweep_point(pair[0], pair[1], base, band)

    if workers is None or workers <= 1:
        return [point(pair) for pair in grid]

    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(point, grid))


class ScenarioError (ValueError):
    """A scenario field violates its constraint."""

    def __init__(self, field, constraint):
        """Store the offending field and the violated constraint."""
        super().__init__(field + ': ' + constraint)

        self.field = field
        self.constraint = constraint


class ZeroSourcesError (ScenarioError):
    pass


class ScheduleError (ScenarioError):
    pass
