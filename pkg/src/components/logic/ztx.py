"""Rational functions of z.

Evaluation, inversion by long division in powers of z^-1, two-pole
partial fractions and the final value theorem. Coefficients are stored
in descending powers of z, e.g. (z + a)(z + b) -> (1, a + b, a * b).
Only real poles are supported.
"""

import logging
from dataclasses import dataclass
from functools import reduce

import numpy as np

logger = logging.getLogger(__name__)

# A denominator value or a pole distance below this counts as zero.
POLE_TOLERANCE = 1e-12

# Agreement between a truncated series and a direct evaluation.
SERIES_TOLERANCE = 1e-9

# Largest imaginary part a root may carry and still be taken as real.
__IMAG_TOLERANCE__ = 1e-9


@dataclass(frozen=True)
class Polynomial:
    """Real polynomial in z, coefficients in descending powers."""

    coefficients: tuple

    def __post_init__(self):
        """Normalize the coefficients and strip leading zeros."""
        coefficients = tuple(float(c) for c in self.coefficients)

        if len(coefficients) == 0:
            raise ValueError('A polynomial needs at least one coefficient')

        # The zero polynomial keeps a single 0
        first = next((i for i, c in enumerate(coefficients) if c != 0.0),
                     len(coefficients) - 1)

        object.__setattr__(self, 'coefficients', coefficients[first:])

    @property
    def degree(self) -> int:
        """Return the degree implied by the coefficient count."""
        return len(self.coefficients) - 1

    @property
    def leading(self) -> float:
        """Return the coefficient of the highest power."""
        return self.coefficients[0]

    def is_zero(self) -> bool:
        """Determine whether this is the zero polynomial."""
        return self.coefficients == (0.0,)

    def __call__(self, z: float) -> float:
        """Evaluate the polynomial at z."""
        return float(np.polyval(self.coefficients, z))

    def __mul__(self, other):
        """Multiply two polynomials."""
        return Polynomial(tuple(np.polymul(self.coefficients,
                                           other.coefficients)))

    def roots(self):
        """Return the real roots.

        Raises ComplexPoleError if a root has a non-negligible
        imaginary part.
        """
        if self.degree < 1:
            return ()

        roots = np.roots(self.coefficients)

        if np.any(np.abs(roots.imag) > __IMAG_TOLERANCE__):
            raise ComplexPoleError(
                'Complex roots are not supported: ' + str(self.coefficients))

        return tuple(sorted(float(r) for r in roots.real))


def linear(root: float) -> Polynomial:
    """Return the monic factor (z - root)."""
    return Polynomial((1.0, -root))


@dataclass(frozen=True)
class RationalZ:
    """Ratio of two real polynomials in z.

    factors optionally records the first- and second-order factors of
    the denominator; when present they are the source of the poles.
    """

    numerator: Polynomial
    denominator: Polynomial
    factors: tuple = ()

    def __post_init__(self):
        """Validate the denominator and its recorded factors."""
        if self.denominator.is_zero():
            raise ZTransformError('The denominator is the zero polynomial')

        object.__setattr__(self, 'factors', tuple(self.factors))

        if not self.factors:
            return

        for factor in self.factors:
            if factor.degree not in (1, 2):
                raise ZTransformError(
                    'Denominator factors must be of degree 1 or 2')

            # Rejects complex pole pairs at construction time
            factor.roots()

        product = reduce(lambda p, f: p * f, self.factors)
        scale = self.denominator.leading / product.leading

        if product.degree != self.denominator.degree or not np.allclose(
                self.denominator.coefficients,
                scale * np.array(product.coefficients),
                rtol=1e-9, atol=POLE_TOLERANCE):
            raise ZTransformError(
                'The recorded factors do not multiply to the denominator')

    @staticmethod
    def from_factors(numerator: Polynomial, factors):
        """Build a rational function from its denominator factors."""
        factors = tuple(factors)
        denominator = reduce(lambda p, f: p * f, factors, Polynomial((1.0,)))

        return RationalZ(numerator, denominator, factors)

    def is_proper(self) -> bool:
        """Return whether degree(num) <= degree(den)."""
        return self.numerator.degree <= self.denominator.degree

    def __mul__(self, other):
        """Multiply two rational functions, keeping known factors."""
        factored = all(r.factors or r.denominator.degree == 0
                       for r in (self, other))

        return RationalZ(self.numerator * other.numerator,
                         self.denominator * other.denominator,
                         self.factors + other.factors if factored else ())

    def __call__(self, z: float) -> float:
        """Evaluate at z."""
        return eval_rational(self, z)

    def poles(self):
        """Return the real poles, sorted ascending."""
        if self.factors:
            return tuple(sorted(p for f in self.factors for p in f.roots()))

        if self.denominator.degree > 2:
            raise ZTransformError(
                'Poles above degree 2 need recorded factors')

        return self.denominator.roots()


@dataclass(frozen=True)
class Residues:
    """Residues of num(z) / ((z - pole1)(z - pole2))."""

    a1: float
    a2: float
    pole1: float
    pole2: float


def step() -> RationalZ:
    """Return S(z) = z / (z - 1), the transform of the unit step."""
    return RationalZ.from_factors(Polynomial((1.0, 0.0)), (linear(1.0),))


def rtt_transform(alpha: float, m: float) -> RationalZ:
    """Return RTT(z) = z(1 - alpha)M / (z - alpha) of the RTT estimator."""
    return RationalZ.from_factors(Polynomial(((1 - alpha) * m, 0.0)),
                                  (linear(alpha),))


def loop_filter(c: float, a: float, b: float) -> RationalZ:
    """Return f(z) = c(z - 1)(8z - 7) / ((z + a)(z + b))."""
    numerator = Polynomial((c, -c)) * Polynomial((8.0, -7.0))

    return RationalZ.from_factors(numerator, (linear(-a), linear(-b)))


def lambda_transform(c: float, a: float, b: float) -> RationalZ:
    """Return lambda(z) = c z (8z - 7) / ((z + a)(z + b))."""
    return RationalZ.from_factors(Polynomial((8.0 * c, -7.0 * c, 0.0)),
                                  (linear(-a), linear(-b)))


def eval_rational(r: RationalZ, z: float) -> float:
    """Evaluate num(z) / den(z).

    Raises PoleAtEvaluationPointError if |den(z)| is below
    POLE_TOLERANCE.
    """
    denominator = r.denominator(z)

    if abs(denominator) < POLE_TOLERANCE:
        raise PoleAtEvaluationPointError(
            'Denominator vanishes at z = ' + str(z))

    return r.numerator(z) / denominator


def impulse_sequence(r: RationalZ, K: int):
    """Invert r(z) by long division in powers of z^-1.

    Returns h(0..K) with r(z) = sum h(k) z^-k. Divergent sequences are
    returned as they are.
    """
    if not r.is_proper():
        raise ImproperRationalError(
            'Numerator degree exceeds denominator degree')

    if K < 0:
        raise ValueError('K must be non-negative')

    den = r.denominator.coefficients
    n = r.denominator.degree

    # Align the numerator with z^n ... z^0
    num = (0.0,) * (n - r.numerator.degree) + r.numerator.coefficients

    h = []

    for k in range(K + 1):
        acc = num[k] if k <= n else 0.0

        for j in range(1, min(k, n) + 1):
            acc -= den[j] * h[k - j]

        h.append(acc / den[0])

    return h


def partial_fractions(num: Polynomial, pole1: float, pole2: float):
    """Split num(z) / ((z - pole1)(z - pole2)) into two simple fractions.

    Returns Residues(A, B) with
    num / ((z - p1)(z - p2)) = A / (z - p1) + B / (z - p2).
    """
    if abs(pole1 - pole2) < POLE_TOLERANCE:
        raise RepeatedPoleError('Repeated pole at ' + str(pole1))

    if num.degree > 1:
        raise ImproperRationalError(
            'Partial fractions need a numerator of degree <= 1')

    a1 = num(pole1) / (pole1 - pole2)
    a2 = num(pole2) / (pole2 - pole1)

    # Reconstruct at two points away from both poles
    radius = max(abs(pole1), abs(pole2)) + 1.0

    for z in (radius, -radius):
        direct = num(z) / ((z - pole1) * (z - pole2))
        split = a1 / (z - pole1) + a2 / (z - pole2)
        scale = max(1.0, abs(direct))

        if abs(direct - split) > SERIES_TOLERANCE * scale:
            raise ZTransformError(
                'Partial fraction reconstruction failed at z = ' + str(z))

    return Residues(a1=a1, a2=a2, pole1=pole1, pole2=pole2)


def final_value(r: RationalZ, factors=None) -> float:
    """Return lim_{z -> 1} (z - 1) r(z).

    The poles left after cancelling one step pole must lie strictly
    inside the unit disc. They are taken from factors, from the factors
    recorded on r, or from the roots of a denominator of degree <= 2.
    """
    if factors is not None:
        r = RationalZ(r.numerator, r.denominator, tuple(factors))

    poles = list(r.poles())

    step_poles = [p for p in poles if abs(p - 1.0) < POLE_TOLERANCE]

    if step_poles:
        poles.remove(step_poles[0])

    unstable = [p for p in poles if abs(p) >= 1.0]

    if unstable:
        raise FinalValueInapplicableError(
            'Poles on or outside the unit circle: ' + str(unstable))

    if not step_poles:
        # r(1) is finite, so (z - 1) r(z) vanishes at z = 1
        return 0.0

    reduced, _ = np.polydiv(r.denominator.coefficients, (1.0, -1.0))

    value = r.numerator(1.0) / float(np.polyval(reduced, 1.0))

    logger.debug('Final value %s for %s', value, r)

    return value


class ZTransformError (Exception):
    pass


class PoleAtEvaluationPointError (ZTransformError):
    pass


class ImproperRationalError (ZTransformError):
    pass


class RepeatedPoleError (ZTransformError):
    pass


class FinalValueInapplicableError (ZTransformError):
    pass


class ComplexPoleError (ZTransformError):
    pass
