"""Linear frequency-dependent beamsplitter used as the reference model.

Each photon is reflected with amplitude ``r(x) = -i/(x + i)`` and
transmitted with ``t(x) = x/(x + i)``, where ``x = (omega - omega_A)/gamma``.
Frequencies passed to this module are detuned from the pulse carrier, so
``x = (omega + Delta)/gamma``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from .core import Grid2D, JointDistribution2D, Pulse

_MAX_POINTS = 2_000_001


@dataclass(frozen=True)
class SinglePhotonResponse:
    """Reflection and transmission amplitudes at normalised frequencies ``x``."""

    x: np.ndarray
    reflection: np.ndarray
    transmission: np.ndarray

    @classmethod
    def at(cls, x) -> SinglePhotonResponse:
        x = np.asarray(x, dtype=float)
        return cls(x, reflection_amplitude(x), transmission_amplitude(x))


def reflection_amplitude(x):
    return -1j / (np.asarray(x, dtype=float) + 1j)


def transmission_amplitude(x):
    x = np.asarray(x, dtype=float)
    return x / (x + 1j)


def _frequency_nodes(pulse: Pulse, detuning: float, gamma: float, delay: float = 0.0):
    """Odd-length uniform grid for Simpson; the window is wide enough that the
    neglected ``|f r|^2`` tail, which falls off like ``omega^-4``, is below 1e-7.
    A delay adds the phase ``exp(i omega tau)``, which must also be resolved."""
    half = 60.0 * max(pulse.bandwidth, gamma) + abs(detuning)
    h = min(pulse.bandwidth, gamma) / 16.0
    if delay:
        h = min(h, 0.25 / abs(delay))
    n = min(_MAX_POINTS, 2 * math.ceil(half / h) + 1)
    return np.linspace(-half, half, n)


def _spectral_weight(pulse: Pulse, detuning: float, gamma: float, delay: float = 0.0):
    w = _frequency_nodes(pulse, detuning, gamma, delay)
    f2 = np.abs(pulse.spectral_amplitude(w)) ** 2
    return w, f2, (w + detuning) / gamma


def single_photon_reflection_coefficient(pulse: Pulse, detuning: float = 0.0,
                                         gamma: float = 1.0) -> float:
    """Probability that a single photon in ``pulse`` is reflected."""
    w, f2, x = _spectral_weight(pulse, detuning, gamma)
    return float(simpson(f2 / (1.0 + x * x), x=w))


def linear_cross_term(pulse: Pulse, detuning: float = 0.0, gamma: float = 1.0,
                      delay: float = 0.0) -> complex:
    """``X(tau) X(-tau)`` with ``X(tau) = int |f|^2 t r* exp(i omega tau) d omega``.

    At zero delay this is the squared overlap that spoils the ``T^2 + R^2``
    form; it vanishes for symmetric pulses on resonance because ``t r*`` is
    odd in ``x``.
    """
    w, f2, x = _spectral_weight(pulse, detuning, gamma, delay)
    tr = transmission_amplitude(x) * np.conj(reflection_amplitude(x))
    plus = simpson(f2 * tr * np.exp(1j * w * delay), x=w)
    minus = plus if delay == 0.0 else simpson(f2 * tr * np.exp(-1j * w * delay), x=w)
    return complex(plus * minus)


def linear_coincidence(pulse: Pulse, detuning: float = 0.0, gamma: float = 1.0,
                       delay: float = 0.0) -> float:
    """Coincidence of the linear beamsplitter, ``T^2 + R^2 + 2 Re X(tau) X(-tau)``.

    The backward photon arrives ``delay`` later than the forward one.
    """
    r = single_photon_reflection_coefficient(pulse, detuning, gamma)
    t = 1.0 - r
    return float(t * t + r * r + 2.0 * linear_cross_term(pulse, detuning, gamma, delay).real)


def linear_pair_amplitude(pulse: Pulse, w1, w2, detuning: float = 0.0, gamma: float = 1.0):
    """Coincidence amplitude ``f1 f2 (t1 t2 + r1 r2)`` for simultaneous photons."""
    w1 = np.asarray(w1, dtype=float)
    w2 = np.asarray(w2, dtype=float)
    x1, x2 = (w1 + detuning) / gamma, (w2 + detuning) / gamma
    r1, r2 = reflection_amplitude(x1), reflection_amplitude(x2)
    t1, t2 = 1.0 + r1, 1.0 + r2
    return pulse.spectral_amplitude(w1) * pulse.spectral_amplitude(w2) * (t1 * t2 + r1 * r2)


def linear_joint_spectrum(pulse: Pulse, grid: Grid2D, detuning: float = 0.0,
                          gamma: float = 1.0) -> JointDistribution2D:
    """Joint spectral density of the coincidence sector for the linear model.

    ``normalization`` is the full-plane integral (the linear coincidence);
    a :class:`GridWarning` is raised when the grid captures less than 99% of it.
    """
    W1, W2 = np.meshgrid(grid.x.nodes, grid.y.nodes, indexing="ij")
    values = np.abs(linear_pair_amplitude(pulse, W1, W2, detuning, gamma)) ** 2
    dist = JointDistribution2D(grid, values, "frequency",
                               linear_coincidence(pulse, detuning, gamma))
    dist.check_coverage(dist.normalization)
    return dist


def interference_locus(kind: str, omega1, omega_atom: float = 0.0, gamma: float = 1.0):
    """Frequency ``omega2`` paired with ``omega1`` on the linear interference hyperbolas.

    ``kind="destructive"`` gives ``(omega1 - omega_A)(omega2 - omega_A) = gamma^2``,
    ``kind="constructive"`` the same with ``-gamma^2``.
    """
    sign = {"destructive": 1.0, "constructive": -1.0}.get(kind)
    if sign is None:
        raise ValueError(f"kind must be 'destructive' or 'constructive', got {kind!r}")
    d = np.asarray(omega1, dtype=float) - omega_atom
    if np.any(d == 0):
        raise ZeroDivisionError("omega1 equal to the atomic frequency has no partner")
    out = omega_atom + sign * gamma * gamma / d
    return float(out) if out.ndim == 0 else out
