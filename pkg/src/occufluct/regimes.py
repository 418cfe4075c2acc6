"""Classification of occupation-time fluctuation regimes and norming growth.

The asymptotic behaviour of the rescaled occupation-time fluctuations of a
Poisson system of independent symmetric stable particles is governed by exact
arithmetic relations between the stability index alpha, the dimension d, and
the intensity decay exponent gamma (or finiteness of the intensity), so
classification is done on exact rationals, never on floats.

Regime ids (stable identifiers used in configs and reports):
  G1  gamma < d < alpha      Gaussian, long-range dependent (forces d=1)
  G2  gamma < d = alpha      Gaussian, inhomogeneous-Wiener limit
  G3  gamma < alpha < d      Gaussian, distribution-valued Wiener limit
  C1  gamma = alpha < d      Gaussian, constant in time, log norming
  B   alpha < d, alpha < gamma   bounded total occupation, no norming
  G4  gamma = d < alpha      Gaussian LRD with extra sqrt-log norming
  C2  gamma = d = alpha      Gaussian, constant in time, log^{3/2} norming
  F1  finite mu, d < alpha   compound Poisson of local times
  F2  finite mu, d = alpha   compound Poisson of exponentials
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import DomainError

GAUSSIAN_REGIMES = frozenset({"G1", "G2", "G3", "C1", "G4", "C2"})
FINITE_REGIMES = frozenset({"F1", "F2"})
# limits that are discontinuous at t=0; statements hold on windows [eps, tau]
LOG_WINDOW_REGIMES = frozenset({"C1", "C2", "F2"})

_DESCRIPTIONS = {
    "G1": "long-range dependent Gaussian limit (extended fBm)",
    "G2": "critical-dimension Gaussian limit (inhomogeneous Wiener)",
    "G3": "transient Gaussian limit (distribution-valued Wiener)",
    "C1": "critical slow Gaussian limit, constant in time",
    "B": "bounded total occupation, no norming",
    "G4": "boundary long-range dependent Gaussian limit",
    "C2": "doubly critical Gaussian limit, constant in time",
    "F1": "finite intensity, compound Poisson of local times",
    "F2": "finite intensity, compound Poisson of exponentials",
}


@dataclass(frozen=True)
class RegimeSpec:
    """Resolved regime: id, exponents and norming description.

    The norming is F_T = T**power * (log T)**log_power.  `kappa`, the
    self-similarity index of the limit, equals `power`.
    """

    regime_id: str
    alpha: Fraction
    d: int
    gamma: Fraction | None      # None for finite intensities
    power: Fraction
    log_power: Fraction
    degenerate: bool = False

    @property
    def gaussian(self) -> bool:
        return self.regime_id in GAUSSIAN_REGIMES

    @property
    def kappa(self) -> Fraction:
        return self.power

    @property
    def needs_log_window(self) -> bool:
        return self.regime_id in LOG_WINDOW_REGIMES

    @property
    def description(self) -> str:
        return _DESCRIPTIONS[self.regime_id]


def as_fraction(x) -> Fraction:
    """Exact rational from int/str/Fraction; floats only if exactly rational."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        try:
            return Fraction(x)
        except (ValueError, ZeroDivisionError) as e:
            raise DomainError(f"cannot interpret {x!r} as an exact rational") from e
    if isinstance(x, float):
        f = Fraction(x).limit_denominator(10**6)
        if abs(float(f) - x) > 1e-12:
            raise DomainError(f"cannot interpret {x!r} as an exact rational")
        return f
    raise DomainError(f"cannot interpret {x!r} as an exact rational")


def classify(alpha, d: int, gamma=None, finite: bool = False) -> RegimeSpec:
    """Resolve the regime for (alpha, d, gamma), or for a finite intensity.

    gamma may be omitted when finite=True; a power law with gamma > d is
    itself finite and routed to F1/F2.  Raises DomainError for parameter
    combinations with no covered limit theorem.
    """
    a = as_fraction(alpha)
    if not (0 < a <= 2):
        raise DomainError(f"alpha must lie in (0, 2], got {alpha}")
    if d < 1 or d != int(d) or d > 3:
        raise DomainError(f"d must be in {{1, 2, 3}}, got {d}")
    d = int(d)

    g = None
    if gamma is not None:
        g = as_fraction(gamma)
        if g <= 0:
            raise DomainError(f"gamma must be positive, got {gamma}")

    if finite or (g is not None and g > d):
        if a < d and (g is None or a < g):
            # bounded total occupation; relationship of gamma and d irrelevant
            return RegimeSpec("B", a, d, g, power=Fraction(0),
                              log_power=Fraction(0), degenerate=True)
        if d < a:
            return RegimeSpec("F1", a, d, g,
                              power=1 - Fraction(1, 1) / a, log_power=Fraction(0))
        if d == a:
            return RegimeSpec("F2", a, d, g,
                              power=Fraction(0), log_power=Fraction(1))
        raise DomainError(
            f"finite intensity with d > alpha (d={d}, alpha={alpha}) is not covered")

    if g is None:
        raise DomainError("gamma is required for infinite intensities")

    if g < d:
        if d < a:
            return RegimeSpec("G1", a, d, g,
                              power=1 - (d + g) / (2 * a), log_power=Fraction(0))
        if d == a:
            return RegimeSpec("G2", a, d, g,
                              power=Fraction(1, 2) - g / (2 * a),
                              log_power=Fraction(1, 2))
        # d > alpha
        if g < a:
            return RegimeSpec("G3", a, d, g,
                              power=(1 - g / a) / 2, log_power=Fraction(0))
        if g == a:
            return RegimeSpec("C1", a, d, g,
                              power=Fraction(0), log_power=Fraction(1, 2))
        # alpha < gamma <= d with alpha < d: no fluctuation growth
        return RegimeSpec("B", a, d, g, power=Fraction(0),
                          log_power=Fraction(0), degenerate=True)

    # g == d
    if d < a:
        return RegimeSpec("G4", a, d, g,
                          power=1 - Fraction(d, 1) / a, log_power=Fraction(1, 2))
    if d == a:
        return RegimeSpec("C2", a, d, g,
                          power=Fraction(0), log_power=Fraction(3, 2))
    # gamma = d > alpha means alpha < gamma: bounded occupation
    return RegimeSpec("B", a, d, g, power=Fraction(0),
                      log_power=Fraction(0), degenerate=True)


def norming(spec: RegimeSpec, T: float) -> float:
    """Evaluate the norming F_T at horizon T (> 1)."""
    if T <= 1.0:
        raise DomainError(f"norming defined for T > 1, got {T}")
    if spec.degenerate:
        raise DomainError("regime B has no norming (occupation stays bounded)")
    return T ** float(spec.power) * math.log(T) ** float(spec.log_power)


def kappa(spec: RegimeSpec) -> Fraction:
    """Self-similarity index of the limit (the pure power in F_T)."""
    if spec.degenerate:
        raise DomainError("regime B has no self-similarity index")
    return spec.power
