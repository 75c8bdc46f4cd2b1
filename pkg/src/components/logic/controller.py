"""Discrete controller design and the closed-form sending-rate law.

The loop filter f(z) = c(z - 1)(8z - 7) / ((z + a)(z + b)) places the
closed-loop poles at -a and -b. The gain c puts the steady-state queue
at rho Q, and the sending rate is

    u0(k) = ub(k) + c [a1 (-a)^k + a2 (-b)^k]

with a1 = (-7 - 8a) / (b - a) and a2 = (-7 - 8b) / (a - b).
"""

import math
from dataclasses import dataclass
from enum import Enum

from src.components.logic.plant import Mode
from src.components.logic.ztx import (POLE_TOLERANCE, Polynomial, Residues,
                                      partial_fractions)

# RTT smoothing factor the closed-form law is built for
ALPHA = 7 / 8

# Default steady-state margin, the queue settles at RHO * Q
RHO = 4 / 5

__ALPHA_TOLERANCE__ = 1e-12


class Rejection (Enum):
    """Reason for rejecting a pole pair (a, b)."""

    NOT_FINITE = 'pole parameter is not finite'
    ON_UNIT_CIRCLE = 'pole on unit circle'
    OUTSIDE_UNIT_CIRCLE = 'pole outside unit circle'
    REPEATED_POLE = 'repeated pole'


@dataclass(frozen=True)
class StabilityReport:
    """Outcome of the stability gate. Truthy when the pair is accepted."""

    ok: bool
    reason: Rejection = None
    field: str = None

    def __bool__(self):
        """Return whether the pair passed the gate."""
        return self.ok


def check_stability(a: float, b: float) -> StabilityReport:
    """Gate a pole pair: accept iff |a| < 1, |b| < 1 and a != b.

    Pairs closer than POLE_TOLERANCE count as a repeated pole.
    """
    for name, value in (('a', a), ('b', b)):
        if not math.isfinite(value):
            return StabilityReport(False, Rejection.NOT_FINITE, name)

        if abs(value) == 1:
            return StabilityReport(False, Rejection.ON_UNIT_CIRCLE, name)

        if abs(value) > 1:
            return StabilityReport(False, Rejection.OUTSIDE_UNIT_CIRCLE, name)

    if abs(a - b) < POLE_TOLERANCE:
        return StabilityReport(False, Rejection.REPEATED_POLE, 'b')

    return StabilityReport(True)


@dataclass(frozen=True)
class ControllerParams:
    """Design tuple of the controller.

    Parameters:
        a, b : Pole parameters, the closed-loop poles are -a and -b
        Q : Buffer capacity in packets
        M : Measured RTT in ms
        alpha : RTT smoothing factor, must be 7/8
        rho : Steady-state margin in (0, 1]
    """

    a: float
    b: float
    Q: float
    M: float
    alpha: float = ALPHA
    rho: float = RHO

    def __post_init__(self):
        """Validate the design tuple."""
        report = check_stability(self.a, self.b)

        if not report:
            constraint = ('a != b'
                          if report.reason is Rejection.REPEATED_POLE
                          else '|' + report.field + '| < 1')
            raise UnstableParamsError(report.field, constraint,
                                      report.reason.value)

        for name in ('Q', 'M'):
            value = getattr(self, name)

            if not (math.isfinite(value) and value > 0):
                raise ParameterError(name, '0 < ' + name + ' < inf')

        if not 0 < self.rho <= 1:
            raise ParameterError('rho', '0 < rho <= 1')

        if not abs(self.alpha - ALPHA) <= __ALPHA_TOLERANCE__:
            raise ParameterError('alpha', 'alpha = 7/8')


@dataclass(frozen=True)
class GainDesign:
    """Quantities derived from a ControllerParams tuple."""

    params: ControllerParams
    c: float
    residues: Residues
    steady_state_queue: float

    @property
    def poles(self):
        """Return the closed-loop poles (-a, -b)."""
        return (self.residues.pole1, self.residues.pole2)


def rtt_numerator(alpha: float = ALPHA) -> Polynomial:
    """Return (z - alpha) / (1 - alpha), which is 8z - 7 for alpha = 7/8."""
    return Polynomial((1 / (1 - alpha), -alpha / (1 - alpha)))


def design_gain(p: ControllerParams) -> GainDesign:
    """Compute the gain c, the residues and the steady-state queue.

    c = rho Q (1 + a)(1 + b) / M
    """
    c = p.rho * p.Q * (1 + p.a) * (1 + p.b) / p.M

    residues = partial_fractions(rtt_numerator(p.alpha), -p.a, -p.b)

    return GainDesign(params=p,
                      c=c,
                      residues=residues,
                      steady_state_queue=p.rho * p.Q)


def lambda_rate(d: GainDesign, k: int) -> float:
    """Return the rate excess lambda(k) = u0(k) - ub(k) in packets/ms."""
    if k < 0:
        raise ParameterError('k', 'k >= 0')

    r = d.residues

    return d.c * (r.a1 * r.pole1 ** k + r.a2 * r.pole2 ** k)


def send_rate(d: GainDesign, u_b: float, k: int,
              mode: Mode = Mode.ANALYTIC) -> float:
    """Return the sending rate u0(k) in packets/ms.

    The analytic rate may be negative; the physical rate is clamped at 0.
    """
    if u_b < 0:
        raise ParameterError('ub', 'ub >= 0')

    rate = u_b + lambda_rate(d, k)

    if mode is Mode.PHYSICAL:
        return max(0.0, rate)

    return rate


class ParameterError (ValueError):
    """A controller parameter violates its constraint."""

    def __init__(self, field, constraint, detail=None):
        """Store the offending field and the violated constraint."""
        message = field + ': ' + constraint

        if detail is not None:
            message += ' (' + detail + ')'

        super().__init__(message)

        self.field = field
        self.constraint = constraint


class UnstableParamsError (ParameterError):
    pass
