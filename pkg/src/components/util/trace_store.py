"""Trace output.

Writes traces and sweep grids as CSV, draws static SVG charts and reads
trace CSV files back. Numbers are written as the shortest decimal that
round-trips, so a trace read back equals the trace written.
"""

import logging
import os

import appdirs
import matplotlib
import numpy as np
import pandas as pd

from src.components.logic.sim import EpochRecord

matplotlib.use('Agg')
import matplotlib.pyplot as plt  # noqa: E402

logger = logging.getLogger(__name__)

# App name for the default output directory
__APP_NAME__ = 'Discrete-Flow-Control'

TRACE_COLUMNS = ('k', 'source', 'u0', 'ub', 'rtt', 'lambda', 'q_time',
                 'q_zpred', 'drops')
SWEEP_COLUMNS = ('a', 'b', 'stable', 'c', 'settling_epoch')

# Trace columns stored as integers
__INT_COLUMNS__ = ('k', 'source')


def default_output_dir() -> str:
    """Return the per-user data directory for output files."""
    return appdirs.user_data_dir(__APP_NAME__)


def ensure_dir(path: str) -> str:
    """Make sure the directory exists."""
    if not os.path.exists(path):
        os.makedirs(path)

    return path


def format_number(value) -> str:
    """Return the shortest decimal that reads back as the same float."""
    if value is None:
        return ''

    if isinstance(value, (bool, np.bool_)):
        return 'true' if value else 'false'

    if isinstance(value, (int, np.integer)):
        return str(value)

    positional = np.format_float_positional(value, trim='-')
    scientific = np.format_float_scientific(value, trim='-')

    return scientific if len(scientific) < len(positional) else positional


def trace_frame(trace) -> pd.DataFrame:
    """Return the trace records as a frame of formatted strings."""
    rows = [(r.k, r.source, r.u0, r.ub, r.rtt, r.lam, r.q_time, r.q_zpred,
             r.drops) for r in trace.records]

    return pd.DataFrame([[format_number(v) for v in row] for row in rows],
                        columns=list(TRACE_COLUMNS))


def write_trace_csv(trace, path: str) -> str:
    """Write the trace CSV, one row per epoch and source."""
    trace_frame(trace).to_csv(path, index=False)

    logger.info('Wrote trace %s', path)

    return path


def read_trace_csv(path: str):
    """Read a trace CSV back into EpochRecords."""
    frame = pd.read_csv(path, dtype=str, keep_default_na=False)

    if tuple(frame.columns) != TRACE_COLUMNS:
        raise ValueError('Unexpected trace header: ' + ','.join(frame.columns))

    records = []

    for row in frame.itertuples(index=False):
        values = dict(zip(TRACE_COLUMNS, row))

        records.append(EpochRecord(
            k=int(values['k']),
            source=int(values['source']),
            u0=float(values['u0']),
            ub=float(values['ub']),
            rtt=float(values['rtt']),
            lam=float(values['lambda']),
            q_time=float(values['q_time']),
            q_zpred=float(values['q_zpred']),
            drops=float(values['drops'])))

    return tuple(records)


def write_chart(trace, path: str) -> str:
    """Draw the queue and sending-rate panels of a trace as SVG."""
    k = np.arange(trace.horizon + 1)
    params = trace.scenario.params

    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(10, 7), sharex=True)
    fig.suptitle('a = {0}, b = {1}, M = {2} ms, Q = {3} packets'.format(
        params.a, params.b, params.M, params.Q))

    ax1.plot(k, trace.queue_series(), color='black', linewidth=1.2,
             label='q time domain')
    ax1.plot(k, trace.zpred_series(), color='#D55E00', linestyle='--',
             linewidth=1.2, label='q Z-domain prediction')
    ax1.axhline(y=params.rho * params.Q, color='gray', linestyle=':',
                label='rho Q')
    ax1.set_ylabel('Queue (packets)')
    ax1.legend(loc='lower right')
    ax1.grid(True, alpha=0.3, linestyle=':')

    ax2.plot(k, trace.send_rate_series(), color='#009E73', linewidth=1.2,
             label='u0')
    ax2.step(k, [trace.scenario.ub_at(i) for i in k], where='post',
             color='gray', linestyle=':', label='ub')
    ax2.set_xlabel('Epoch k')
    ax2.set_ylabel('Rate (packets/ms)')
    ax2.legend(loc='upper right')
    ax2.grid(True, alpha=0.3, linestyle=':')

    fig.tight_layout()
    fig.savefig(path, format='svg')
    plt.close(fig)

    logger.info('Wrote chart %s', path)

    return path


def emit_trace(trace, destination: str, name: str = 'trace',
               emit_chart: bool = False):
    """Write <name>.csv and optionally <name>.svg into destination.

    Returns the list of written paths.
    """
    ensure_dir(destination)

    paths = [write_trace_csv(trace, os.path.join(destination, name + '.csv'))]

    if emit_chart:
        paths.append(write_chart(trace,
                                 os.path.join(destination, name + '.svg')))

    return paths


def write_sweep_csv(entries, path: str) -> str:
    """Write a sweep grid as CSV."""
    rows = [[format_number(v) for v in
             (e.a, e.b, e.stable, e.c, e.settling_epoch)] for e in entries]

    pd.DataFrame(rows, columns=list(SWEEP_COLUMNS)).to_csv(path, index=False)

    logger.info('Wrote sweep %s', path)

    return path
