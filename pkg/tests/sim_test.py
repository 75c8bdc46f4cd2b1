"""Tests for the closed-loop scenario engine."""

import pytest

from src.components.logic.analysis import predicted_queue
from src.components.logic.controller import (ControllerParams,
                                             UnstableParamsError,
                                             lambda_rate)
from src.components.logic.plant import Mode
from src.components.logic.sim import (FIGURES, HORIZON, TABLE_LINES,
                                      Reference_Suite, Scenario,
                                      ScenarioError, ScheduleError,
                                      ZeroSourcesError, run_reference_suite,
                                      run_scenario, split_bottleneck, sweep)


def line_one(a=-0.2, b=-0.1, **kwargs):
    """Return the table line 1 scenario for a pole pair."""
    ub, M, Q = TABLE_LINES[0]
    kwargs.setdefault('ub_schedule', ((0, ub),))

    return Scenario(ControllerParams(a=a, b=b, Q=Q, M=M), **kwargs)


def test_split_bottleneck():
    """Equal shares that add up to ub."""
    assert split_bottleneck(14.5, 1) == [14.5]
    assert split_bottleneck(30.0, 3) == pytest.approx([10.0, 10.0, 10.0])
    assert sum(split_bottleneck(14.5, 7)) == pytest.approx(14.5)

    with pytest.raises(ZeroSourcesError):
        split_bottleneck(14.5, 0)


def test_scenario_validation():
    """Bad scenarios are refused with the field named."""
    with pytest.raises(ZeroSourcesError):
        line_one(n_sources=0)

    with pytest.raises(ScenarioError) as e:
        line_one(horizon=0)
    assert e.value.field == 'horizon'

    params = line_one().params

    for schedule in (((1, 14.5),), ((0, 14.5), (0, 20.0)),
                     ((0, -1.0),), ()):
        with pytest.raises(ScheduleError):
            Scenario(params, ub_schedule=schedule)

    with pytest.raises(ScenarioError):
        line_one(mode=Mode.PHYSICAL, q0=2000.0)


def test_schedule_lookup():
    """A rate applies from its epoch on."""
    s = line_one(ub_schedule=((0, 14.5), (30, 27.0)))

    assert s.ub_at(0) == 14.5
    assert s.ub_at(29) == 14.5
    assert s.ub_at(30) == 27.0
    assert s.ub_at(60) == 27.0


def test_for_path():
    """The bottleneck of the path is its slowest node."""
    s = Scenario.for_path(line_one().params, [27.0, 14.5, 20.0])

    assert s.ub_schedule == ((0, 14.5),)
    assert s.initial_rtt == 10.0


def test_unstable_scenario_rejected():
    """The stability gate runs before any simulation."""
    with pytest.raises(UnstableParamsError):
        line_one(a=1.5)


def test_first_epochs():
    """The first records of table line 1 follow the closed form."""
    trace = run_scenario(line_one())
    first, second = trace.records[0], trace.records[1]

    assert len(trace.records) == HORIZON + 1
    assert (first.k, first.source) == (0, 0)
    assert first.u0 == pytest.approx(475.3)
    assert (first.ub, first.rtt) == (14.5, 10.0)
    assert first.lam == pytest.approx(460.8)
    assert (first.q_time, first.q_zpred, first.drops) == (0.0, 0.0, 0.0)

    assert second.q_time == pytest.approx(4608.0)
    assert second.q_zpred == pytest.approx(576.0)


def test_steady_state_reached():
    """Both trajectories end within 0.1 packets of 800."""
    trace = run_scenario(line_one())

    assert abs(trace.final_queue() - 800.0) <= 0.1
    assert abs(trace.zpred_series()[-1] - 800.0) <= 0.1
    assert trace.settling_epoch() == 4


def test_rtt_stays_at_m():
    """Starting from rtt0 = M the estimate never moves."""
    trace = run_scenario(line_one())

    assert all(r.rtt == 10.0 for r in trace.records)


def test_rtt_converges_from_other_start():
    """A different rtt0 converges to M."""
    trace = run_scenario(line_one(rtt0=40.0))

    assert trace.records[0].rtt == 40.0
    assert trace.records[1].rtt == pytest.approx(36.25)
    assert trace.records[-1].rtt == pytest.approx(10.0, abs=0.05)


def test_analytic_ub_invariance():
    """A ub change does not alter the analytic queue trajectory."""
    constant = run_scenario(line_one())
    switched = run_scenario(line_one(ub_schedule=((0, 14.5), (30, 27.0))))

    assert switched.queue_series() == \
        pytest.approx(constant.queue_series(), abs=1e-9)
    assert switched.records[30].ub == 27.0
    assert switched.records[30].u0 == \
        pytest.approx(27.0 + lambda_rate(switched.design, 30))


def test_determinism():
    """Repeated runs produce identical traces."""
    assert run_scenario(line_one()) == run_scenario(line_one())


def test_multi_source_equivalence():
    """n equal sources add up to the single-source trace."""
    single = run_scenario(line_one(a=-0.5))

    for n in (2, 3, 5):
        multi = run_scenario(line_one(a=-0.5, n_sources=n))

        assert len(multi.records) == (HORIZON + 1) * n
        assert multi.design.c == pytest.approx(single.design.c / n)
        assert multi.queue_series() == \
            pytest.approx(single.queue_series(), abs=1e-9)
        assert multi.zpred_series() == \
            pytest.approx(single.zpred_series(), abs=1e-9)
        assert multi.send_rate_series() == \
            pytest.approx(single.send_rate_series(), abs=1e-9)


def test_multi_source_record_order():
    """Records are ordered by epoch, then by source."""
    trace = run_scenario(line_one(n_sources=3, horizon=5))

    assert [(r.k, r.source) for r in trace.records] == \
        [(k, i) for k in range(6) for i in range(3)]
    assert [r.source for r in trace.epoch(2)] == [0, 1, 2]


def test_column_consistency():
    """lambda and q_zpred columns match their definitions."""
    for a, b in FIGURES.values():
        trace = run_scenario(line_one(a=a, b=b))
        zpred = predicted_queue(trace.scenario.params, HORIZON).values

        for r in trace.records:
            assert r.lam == lambda_rate(trace.design, r.k)
            assert r.q_zpred == zpred[r.k]


def test_physical_conservation():
    """q - q(0) = arrived - served - drops for every source."""
    for n in (1, 3):
        for q0 in (0.0, 600.0):
            s = line_one(mode=Mode.PHYSICAL, n_sources=n, q0=q0)
            trace = run_scenario(s)

            for state in trace.final_states:
                balance = state.arrived - state.served - state.drops

                assert state.q - q0 / n == pytest.approx(balance, abs=1e-9)

            for r in trace.records:
                assert 0.0 <= r.q_time <= 1000.0 / n
                assert r.u0 >= 0.0


def test_physical_drops_on_first_burst():
    """The first epoch of line 1 overflows the buffer."""
    trace = run_scenario(line_one(mode=Mode.PHYSICAL))

    assert trace.records[1].q_time == 1000.0
    assert trace.records[1].drops == pytest.approx(3608.0)
    assert trace.drops_series() == sorted(trace.drops_series())


def test_reference_suite():
    """Six traces, all ending at 800 packets."""
    suite = run_reference_suite()

    assert sorted(suite) == [3, 4]

    for figure, traces in suite.items():
        assert len(traces) == len(TABLE_LINES)

        for trace, (ub, M, Q) in zip(traces, TABLE_LINES):
            assert (trace.scenario.params.a, trace.scenario.params.b) == \
                FIGURES[figure]
            assert trace.scenario.ub_schedule == ((0, ub),)
            assert abs(trace.final_queue() - 800.0) <= 0.1
            assert abs(trace.zpred_series()[-1] - 800.0) <= 0.1


def test_reference_suite_working_figures():
    """Unknown figures are ignored by the working set."""
    suite = Reference_Suite()
    suite.set_working_figures([4, 9])

    assert suite.get_working_figures() == {4}
    assert list(suite.apply()) == [4]


def test_sweep_entries():
    """Stable points carry a design, rejected points a reason."""
    entries = sweep([-0.2, 1.0], [-0.1, -0.2], line_one())

    assert [(e.a, e.b) for e in entries] == \
        [(-0.2, -0.1), (-0.2, -0.2), (1.0, -0.1), (1.0, -0.2)]

    first = entries[0]
    assert first.stable
    assert first.c == pytest.approx(57.6)
    assert first.settling_epoch == 4

    assert entries[1].reason == 'repeated pole'
    assert entries[2].reason == 'pole on unit circle'
    assert not any(e.stable for e in entries[1:])


def test_sweep_order_with_workers():
    """Parallel evaluation keeps the input order."""
    grid = [-0.7, -0.3, 0.0, 0.4, 0.8]

    serial = sweep(grid, grid, line_one())
    parallel = sweep(grid, grid, line_one(), workers=4)

    assert parallel == serial


def test_sweep_rejects_empty_grid():
    """A sweep needs at least one a and one b."""
    with pytest.raises(ScenarioError):
        sweep([], [0.1], line_one())


def test_sweep_near_repeated_pole():
    """Pairs closer than the pole tolerance are rejected, not raised."""
    entries = sweep([0.1], [0.1 + 1e-14, -0.1], line_one())

    assert not entries[0].stable
    assert entries[0].reason == 'repeated pole'
    assert entries[1].stable


def test_scenario_rejects_non_finite_values():
    """Infinite rates, RTTs and queues are refused."""
    with pytest.raises(ScheduleError):
        line_one(ub_schedule=((0, float('inf')),))

    with pytest.raises(ScheduleError):
        line_one(ub_schedule=((0, 14.5), (10, float('nan'))))

    for field, value in (('rtt0', float('inf')), ('q0', float('inf')),
                         ('q0', float('nan'))):
        with pytest.raises(ScenarioError) as e:
            line_one(**{field: value})
        assert e.value.field == field
