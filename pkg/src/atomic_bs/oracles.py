"""Closed-form results used as ground truth.

Every formula carries its validity domain and refuses to evaluate outside
it.  All arguments are dimensionless: ``sigma = Omega/gamma``,
``delta = Delta/gamma`` and ``t_prime = gamma (t - t0)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class OutOfDomainError(ValueError):
    """A closed form was asked for a value outside its validity domain."""


@dataclass(frozen=True)
class ClosedForm:
    tag: str
    pulse_kind: str | None  # None: monochromatic (no pulse shape)
    resonant_only: bool
    time_window: bool = False  # valid only for 0 <= t' <= 2/sigma

    def covers(self, pulse_kind: str | None, detuning: float = 0.0, sigma: float | None = None,
               sigma_max: float | None = None) -> bool:
        if self.pulse_kind is not None and pulse_kind != self.pulse_kind:
            return False
        if self.resonant_only and detuning != 0.0:
            return False
        if sigma_max is not None and (sigma is None or sigma > sigma_max):
            return False
        return True


REFLECTION_MONOCHROMATIC = ClosedForm("reflection_monochromatic", None, False)
COINCIDENCE_MONOCHROMATIC = ClosedForm("coincidence_monochromatic", None, False)
REFLECTION_SQUARE = ClosedForm("reflection_square_resonant", "square", True)
COINCIDENCE_SQUARE = ClosedForm("coincidence_square_resonant", "square", True)
EXCITATION_SQUARE = ClosedForm("excitation_square", "square", False, time_window=True)


def _positive(sigma):
    sigma = np.asarray(sigma, dtype=float)
    if np.any(~(sigma > 0)):
        raise OutOfDomainError("sigma must be positive")
    return sigma


def _scalar(x):
    return float(x) if np.ndim(x) == 0 else x


def reflection_monochromatic(delta):
    """Single-photon reflection probability for a monochromatic photon."""
    delta = np.asarray(delta, dtype=float)
    return _scalar(1.0 / (1.0 + delta**2))


def coincidence_monochromatic(delta):
    """Coincidence for two monochromatic photons, ``1 - 4 R T``."""
    delta = np.asarray(delta, dtype=float)
    return _scalar(1.0 - 4.0 * delta**2 / (1.0 + delta**2) ** 2)


def reflection_square_resonant(sigma):
    """Single-photon reflection probability for a resonant square pulse."""
    sigma = _positive(sigma)
    return _scalar(1.0 + np.expm1(-2.0 / sigma) * sigma / 2.0)


def coincidence_square_resonant(sigma):
    """Two-photon coincidence for simultaneous resonant square pulses."""
    sigma = _positive(sigma)
    return _scalar(1.0 - 3.0 * sigma * (1.0 - sigma + np.exp(-2.0 / sigma) * (1.0 + sigma)))


def linear_square_resonant(sigma):
    """Linear beamsplitter prediction ``1 - 2 R T`` for the square pulse."""
    r = np.asarray(reflection_square_resonant(sigma))
    return _scalar(1.0 - 2.0 * r * (1.0 - r))


def excitation_square_resonant(sigma, t_prime):
    """Excitation probability during a resonant square pulse pair."""
    return excitation_square(sigma, 0.0, t_prime)


def excitation_square(sigma, delta, t_prime):
    """Excitation probability during a square pulse pair at detuning ``delta``.

    Valid only while the pulses are passing, ``0 <= t_prime <= 2/sigma``.
    The ``sin(t delta)/delta`` term is written with ``np.sinc`` so the
    resonant limit is exact.
    """
    sigma = _positive(sigma)
    t = np.asarray(t_prime, dtype=float)
    d = float(delta)
    if np.any(t < 0) or np.any(t > 2.0 / sigma * (1 + 1e-12)):
        raise OutOfDomainError("excitation_square is only valid for 0 <= t' <= 2/sigma")
    d2 = d * d
    q = d2 + 1.0
    et = np.exp(t)
    sinc = np.sinc(t * d / np.pi)
    bracket = (2.0 * sigma * ((2.0 * t - 3.0) * d2 + 2.0 * t + 5.0) + q * q
               + et * et * q * (q - 2.0 * sigma)
               - 2.0 * et * (q * q - 2.0 * sigma * ((t + 2.0) * d2 + t - 2.0)) * np.cos(t * d)
               + 4.0 * sigma * et * (t * d2 * d2 + (t - 3.0) * d2 + 1.0) * t * sinc)
    return _scalar(sigma * np.exp(-2.0 * t) / q**3 * bracket)


def excitation_square_resonant_explicit(sigma, t_prime):
    """The resonant excitation formula as usually printed, for cross-checks."""
    sigma = _positive(sigma)
    t = np.asarray(t_prime, dtype=float)
    if np.any(t < 0) or np.any(t > 2.0 / sigma * (1 + 1e-12)):
        raise OutOfDomainError("valid only for 0 <= t' <= 2/sigma")
    e = np.exp(-t)
    return _scalar(sigma * (1.0 - 2.0 * sigma + 2.0 * e * (-1.0 + (t - 1.0) * 4.0 * sigma)
                            + e * e * (1.0 + (5.0 + 2.0 * t) * 2.0 * sigma)))
