"""Time-domain model of the bottleneck node.

The queue follows the fluid recursion

    q(k + 1) = q(k) + u0(k) RTT(k) - ub(k) RTT(k)

and each connection keeps an EWMA estimate of its round trip time.
"""

from dataclasses import dataclass, replace
from enum import Enum


class Mode (Enum):
    """Operation mode of the plant and the sending-rate law.

    ANALYTIC: The unclamped fluid model. Rates may go negative and the
    queue may leave [0, Q]; nothing is ever dropped.

    PHYSICAL: Sending rates are clamped at 0 and the queue at [0, Q].
    Overflow above Q is counted as dropped volume.
    """

    ANALYTIC = 'analytic'
    PHYSICAL = 'physical'


@dataclass(frozen=True)
class PlantState:
    """Queue level, RTT estimate and volume counters of one connection.

    arrived and served accumulate the volume actually applied to the
    queue, so that q - q(0) = arrived - served - drops.
    """

    q: float
    rtt: float
    drops: float = 0.0
    mode: Mode = Mode.ANALYTIC
    arrived: float = 0.0
    served: float = 0.0

    def __post_init__(self):
        """Check the state invariants."""
        if not self.rtt > 0:
            raise ValueError('rtt must be positive, got ' + str(self.rtt))

        if self.mode is Mode.ANALYTIC and self.drops != 0.0:
            raise ValueError('The analytic plant never drops packets')

        if self.mode is Mode.PHYSICAL and (self.q < 0 or self.drops < 0):
            raise ValueError('Queue and drops must be non-negative')


def min_service_rate(rates) -> float:
    """Return the bottleneck rate, the minimum service rate on the path."""
    rates = list(rates)

    if len(rates) == 0:
        raise EmptyRateListError('The path has no service rates')

    if not all(r >= 0 for r in rates):
        raise ValueError('Service rates must be non-negative')

    return min(rates)


def rtt_update(prev: float, m: float, alpha: float) -> float:
    """Smooth the RTT estimate with a new measurement m.

    RTT(k) = alpha RTT(k - 1) + (1 - alpha) M
    """
    if not (prev > 0 and m > 0):
        raise ValueError('RTT values must be positive')

    if not 0 <= alpha < 1:
        raise ValueError('alpha must lie in [0, 1)')

    return alpha * prev + (1 - alpha) * m


def queue_step(s: PlantState, u0: float, ub: float, rtt: float,
               Q: float) -> PlantState:
    """Advance the queue by one epoch.

    Parameters:
        s : State at the start of the epoch
        u0 : Sending rate in packets/ms
        ub : Bottleneck service rate in packets/ms
        rtt : Epoch length in ms
        Q : Buffer capacity, only used in physical mode
    """
    if not rtt > 0:
        raise ValueError('rtt must be positive, got ' + str(rtt))

    if s.mode is Mode.ANALYTIC:
        return replace(s,
                       q=s.q + (u0 - ub) * rtt,
                       arrived=s.arrived + u0 * rtt,
                       served=s.served + ub * rtt)

    u0 = max(0.0, u0)
    raw = s.q + (u0 - ub) * rtt

    overflow = max(0.0, raw - Q)
    underflow = max(0.0, -raw)

    return replace(s,
                   q=min(max(raw, 0.0), Q),
                   drops=s.drops + overflow,
                   arrived=s.arrived + u0 * rtt,
                   served=s.served + ub * rtt - underflow)


class EmptyRateListError (ValueError):
    pass
