"""Closed-loop predictions in the Z-domain.

G(z) = M c z / ((z + a)(z + b)) maps the unit step to the queue level.
Its step response is the queue trajectory the design predicts.
"""

from dataclasses import dataclass

from src.components.logic.controller import ControllerParams, design_gain
from src.components.logic.ztx import (Polynomial, RationalZ, final_value,
                                      impulse_sequence, linear, step)

# Default settling band, a fraction of the steady state
BAND = 0.01


@dataclass(frozen=True)
class StepResponse:
    """Predicted queue q(0..K) with its steady state and settling epoch."""

    values: tuple
    steady_state: float
    settling_epoch: int
    band: float


def transfer_function(p: ControllerParams) -> RationalZ:
    """Return G(z) = M c z / ((z + a)(z + b))."""
    d = design_gain(p)

    return RationalZ.from_factors(Polynomial((p.M * d.c, 0.0)),
                                  (linear(-p.a), linear(-p.b)))


def predicted_queue(p: ControllerParams, K: int,
                    band: float = BAND) -> StepResponse:
    """Return the step response of G(z) over epochs 0..K."""
    response = transfer_function(p) * step()

    values = tuple(impulse_sequence(response, K))
    steady_state = final_value(response)

    return StepResponse(values=values,
                        steady_state=steady_state,
                        settling_epoch=settling_time(values,
                                                     steady_state, band),
                        band=band)


def steady_state_queue(p: ControllerParams) -> float:
    """Return the steady-state queue rho Q."""
    return p.rho * p.Q


def settling_time(values, target: float, band: float = BAND):
    """Return the first epoch after which values stay within the band.

    The band is |value - target| <= band |target|. Returns None when the
    last value is still outside.
    """
    if not band > 0:
        raise ValueError('band must be positive')

    if target == 0:
        raise ValueError('target must be non-zero')

    tolerance = band * abs(target)
    settled = None

    for k in range(len(values) - 1, -1, -1):
        if abs(values[k] - target) > tolerance:
            break

        settled = k

    return settled
