"""Units, pulse families, grids and the shared parameter record.

All quantities are expressed in units where the atomic bandwidth ``gamma``
sets the scale: detunings and bandwidths in units of gamma, times in units
of 1/gamma.  Frequencies handed to pulses are *detuned* from the pulse
carrier, i.e. ``omega - omega_0``.
"""

from __future__ import annotations

import csv
import enum
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

SQRT_2PI = math.sqrt(2.0 * math.pi)

# relative amplitude below which smooth pulses are truncated
TRUNCATION = 1e-8


class GridWarning(UserWarning):
    """Raised (as a warning) when a grid misses a noticeable part of a density."""


class PulseKind(str, enum.Enum):
    SQUARE = "square"
    GAUSSIAN = "gaussian"
    EXP_RISING = "exprising"
    SAMPLED = "sampled"


@dataclass(frozen=True)
class ScatterParams:
    """Physical configuration of one scattering run.

    Parameters
    ----------
    gamma : float
        Atomic bandwidth (amplitude decay rate into each direction).
    detuning : float
        Carrier detuning ``omega_0 - omega_A``.
    bandwidth : float
        Pulse bandwidth ``Omega``.
    delay : float
        Arrival delay of the backward photon relative to the forward one.
    pulse_kind : PulseKind
        Pulse family used by :meth:`make_pulse`.
    """

    gamma: float = 1.0
    detuning: float = 0.0
    bandwidth: float = 1.0
    delay: float = 0.0
    pulse_kind: PulseKind = PulseKind.SQUARE

    def __post_init__(self):
        object.__setattr__(self, "pulse_kind", PulseKind(self.pulse_kind))
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if not self.bandwidth > 0:
            raise ValueError(f"bandwidth must be positive, got {self.bandwidth}")
        if not self.delay >= 0:
            raise ValueError(f"delay must be non-negative, got {self.delay}")

    def make_pulse(self) -> Pulse:
        if self.pulse_kind is PulseKind.SAMPLED:
            raise ValueError("sampled pulses must be loaded explicitly (load_sampled_pulse)")
        return Pulse(self.pulse_kind, self.bandwidth)

    def rescaled(self, factor: float) -> ScatterParams:
        """Same dimensionless configuration with every rate multiplied by ``factor``."""
        return ScatterParams(
            gamma=self.gamma * factor,
            detuning=self.detuning * factor,
            bandwidth=self.bandwidth * factor,
            delay=self.delay / factor,
            pulse_kind=self.pulse_kind,
        )


@dataclass(frozen=True)
class Pulse:
    """Single-photon wavepacket, unit normalised.

    ``offset`` shifts the whole profile in time; a delayed copy is obtained
    with :meth:`shifted`.  Sampled pulses carry their own uniform sample
    grid and are interpolated with hat functions.
    """

    kind: PulseKind
    bandwidth: float
    offset: float = 0.0
    sample_times: np.ndarray | None = field(default=None, repr=False, compare=False)
    sample_values: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "kind", PulseKind(self.kind))
        if not self.bandwidth > 0:
            raise ValueError(f"bandwidth must be positive, got {self.bandwidth}")
        if self.kind is PulseKind.SAMPLED:
            if self.sample_times is None or self.sample_values is None:
                raise ValueError("sampled pulse needs sample_times and sample_values")
            for arr in (self.sample_times, self.sample_values):
                arr.setflags(write=False)

    # -- constructors -----------------------------------------------------
    @classmethod
    def square(cls, bandwidth: float) -> Pulse:
        return cls(PulseKind.SQUARE, bandwidth)

    @classmethod
    def gaussian(cls, bandwidth: float) -> Pulse:
        return cls(PulseKind.GAUSSIAN, bandwidth)

    @classmethod
    def exp_rising(cls, bandwidth: float) -> Pulse:
        return cls(PulseKind.EXP_RISING, bandwidth)

    @classmethod
    def sampled(cls, times, values, bandwidth: float | None = None) -> Pulse:
        """Pulse from samples on a uniform grid, renormalised to unit norm.

        The interpolant is ``sum_n xi_n * hat((t - t_n) / h)``, so it ramps
        to zero one sample spacing outside the given range.  When no
        bandwidth is given the rms spectral width of the interpolant is used.
        """
        times = np.asarray(times, dtype=float)
        values = np.asarray(values, dtype=complex)
        if times.ndim != 1 or times.shape != values.shape or times.size < 2:
            raise ValueError("times and values must be 1-D arrays of equal length >= 2")
        h = np.diff(times)
        if np.any(h <= 0) or not np.allclose(h, h[0], rtol=1e-9, atol=0):
            raise ValueError("sampled pulse requires a strictly increasing uniform time grid")
        h = float(h[0])
        norm = h * (2.0 / 3.0 * np.sum(np.abs(values) ** 2)
                    + 1.0 / 3.0 * np.sum(np.real(values[:-1] * np.conj(values[1:]))))
        if not norm > 0:
            raise ValueError("sampled pulse has zero norm")
        values = values / math.sqrt(norm)
        if bandwidth is None:
            # |xi'|^2 integrated over the piecewise-linear interpolant
            padded = np.concatenate(([0.0], values, [0.0]))
            bandwidth = math.sqrt(np.sum(np.abs(np.diff(padded)) ** 2) / h)
        return cls(PulseKind.SAMPLED, float(bandwidth), 0.0,
                   times.copy(), values.copy())

    def shifted(self, delay: float) -> Pulse:
        return Pulse(self.kind, self.bandwidth, self.offset + delay,
                     self.sample_times, self.sample_values)

    # -- support ------------------------------------------------------------
    @property
    def _base_support(self) -> tuple[float, float]:
        bw = self.bandwidth
        if self.kind is PulseKind.SQUARE:
            return 0.0, 2.0 / bw
        if self.kind is PulseKind.GAUSSIAN:
            half = math.sqrt(-math.log(TRUNCATION) / 2.0) / bw
            return -half, half
        if self.kind is PulseKind.EXP_RISING:
            return 2.0 * math.log(TRUNCATION) / bw, 0.0
        h = self.sample_times[1] - self.sample_times[0]
        return float(self.sample_times[0] - h), float(self.sample_times[-1] + h)

    @property
    def start_time(self) -> float:
        return self._base_support[0] + self.offset

    @property
    def end_time(self) -> float:
        return self._base_support[1] + self.offset

    @property
    def duration(self) -> float:
        lo, hi = self._base_support
        return hi - lo

    @property
    def breakpoints(self) -> tuple[float, ...]:
        """Times where the profile (or its derivative) is discontinuous."""
        lo, hi = self.start_time, self.end_time
        if self.kind is PulseKind.SAMPLED:
            return tuple(np.concatenate(([lo], self.sample_times + self.offset, [hi])))
        return (lo, hi)

    @property
    def time_scale(self) -> float:
        """Shortest time scale on which the profile varies."""
        if self.kind is PulseKind.SAMPLED:
            return float(min(1.0 / self.bandwidth,
                             self.sample_times[1] - self.sample_times[0]))
        return 1.0 / self.bandwidth

    def bulk_window(self) -> tuple[float, float]:
        """Interval holding all but ~1e-12 of the pulse energy."""
        if self.kind is PulseKind.GAUSSIAN:
            half = 3.0 / self.bandwidth
            return self.offset - half, self.offset + half
        if self.kind is PulseKind.EXP_RISING:
            return self.offset - 28.0 / self.bandwidth, self.offset
        return self.start_time, self.end_time

    @property
    def is_symmetric(self) -> bool:
        """Whether |f(omega)|^2 is even about the carrier."""
        return self.kind is not PulseKind.SAMPLED

    # -- profiles ------------------------------------------------------------
    def time_profile(self, tau):
        """Temporal amplitude xi(tau); zero outside the support."""
        tau = np.asarray(tau, dtype=float)
        s = tau - self.offset
        bw = self.bandwidth
        lo, hi = self._base_support
        if self.kind is PulseKind.SQUARE:
            out = np.where((s >= lo) & (s <= hi), math.sqrt(bw / 2.0), 0.0)
        elif self.kind is PulseKind.GAUSSIAN:
            amp = (4.0 * bw * bw / math.pi) ** 0.25
            out = np.where((s >= lo) & (s <= hi), amp * np.exp(-2.0 * bw * bw * s * s), 0.0)
        elif self.kind is PulseKind.EXP_RISING:
            inside = (s >= lo) & (s <= hi)
            out = np.where(inside, math.sqrt(bw) * np.exp(0.5 * bw * np.minimum(s, 0.0)), 0.0)
        else:
            t = self.sample_times
            h = t[1] - t[0]
            grid = np.concatenate(([t[0] - h], t, [t[-1] + h]))
            vals = np.concatenate(([0.0], self.sample_values, [0.0]))
            out = (np.interp(s, grid, vals.real, left=0.0, right=0.0)
                   + 1j * np.interp(s, grid, vals.imag, left=0.0, right=0.0))
            return out
        return out.astype(complex) if out.ndim else complex(out)

    def spectral_amplitude(self, omega):
        """Spectral amplitude f(omega), omega detuned from the carrier.

        Convention: f(omega) = (2 pi)^-1/2 * int xi(t) exp(i omega t) dt.
        """
        w = np.asarray(omega, dtype=float)
        bw = self.bandwidth
        phase = np.exp(1j * w * self.offset)
        if self.kind is PulseKind.SQUARE:
            T = 2.0 / bw
            amp = math.sqrt(bw / 2.0) / SQRT_2PI
            out = amp * T * np.exp(0.5j * w * T) * np.sinc(w * T / (2.0 * math.pi))
        elif self.kind is PulseKind.GAUSSIAN:
            amp = (4.0 * bw * bw / math.pi) ** 0.25 / SQRT_2PI
            out = amp * math.sqrt(math.pi / (2.0 * bw * bw)) * np.exp(-w * w / (8.0 * bw * bw))
        elif self.kind is PulseKind.EXP_RISING:
            out = math.sqrt(bw / (2.0 * math.pi)) / (0.5 * bw + 1j * w)
        else:
            t = self.sample_times
            h = t[1] - t[0]
            tri = np.sinc(w * h / (2.0 * math.pi)) ** 2
            dft = np.exp(1j * np.multiply.outer(w, t)) @ self.sample_values
            out = h / SQRT_2PI * tri * dft
        out = out * phase
        return out if out.ndim else complex(out)


def pulse_time_profile(pulse: Pulse, tau):
    return pulse.time_profile(tau)


def pulse_spectral_amplitude(pulse: Pulse, omega):
    return pulse.spectral_amplitude(omega)


def load_sampled_pulse(path, bandwidth: float | None = None) -> Pulse:
    """Read a ``tau,re,im`` CSV (header required) into a sampled pulse."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = [h.strip().lower() for h in next(reader)]
        if header != ["tau", "re", "im"]:
            raise ValueError(f"{path}: expected header 'tau,re,im', got {','.join(header)}")
        rows = [[float(x) for x in row] for row in reader if row]
    data = np.array(rows, dtype=float)
    return Pulse.sampled(data[:, 0], data[:, 1] + 1j * data[:, 2], bandwidth=bandwidth)


def save_sampled_pulse(path, times, values) -> None:
    values = np.asarray(values, dtype=complex)
    with open(Path(path), "w", newline="") as fh:
        fh.write("tau,re,im\n")
        for t, v in zip(times, values):
            fh.write(f"{t:.17g},{v.real:.17g},{v.imag:.17g}\n")


@dataclass(frozen=True)
class Grid1D:
    lower: float
    upper: float
    points: int

    def __post_init__(self):
        if self.points < 2:
            raise ValueError("a grid needs at least two points")
        if not self.upper > self.lower:
            raise ValueError("grid upper bound must exceed lower bound")

    @property
    def spacing(self) -> float:
        return (self.upper - self.lower) / (self.points - 1)

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(self.lower, self.upper, self.points)

    @classmethod
    def cells(cls, lower: float, upper: float, count: int) -> Grid1D:
        """Grid of the midpoints of ``count`` equal cells spanning [lower, upper]."""
        h = (upper - lower) / count
        return cls(lower + 0.5 * h, upper - 0.5 * h, count)

    def index_of(self, value: float) -> int:
        return int(round((value - self.lower) / self.spacing))

    def to_dict(self) -> dict:
        return {"lower": self.lower, "upper": self.upper, "points": self.points,
                "spacing": self.spacing}


@dataclass(frozen=True)
class Grid2D:
    x: Grid1D
    y: Grid1D

    @classmethod
    def square(cls, axis: Grid1D) -> Grid2D:
        return cls(axis, axis)

    @property
    def shape(self) -> tuple[int, int]:
        return self.x.points, self.y.points

    @property
    def cell_area(self) -> float:
        return self.x.spacing * self.y.spacing

    def to_dict(self) -> dict:
        return {"x": self.x.to_dict(), "y": self.y.to_dict()}


@dataclass(frozen=True)
class JointDistribution2D:
    """Nonnegative density on a 2D grid.

    ``values[i, j]`` is the density at ``(grid.x.nodes[i], grid.y.nodes[j])``.
    ``normalization`` is the best estimate of the integral over the whole
    plane, which can exceed the on-grid integral when the grid clips tails.
    """

    grid: Grid2D
    values: np.ndarray
    domain: str
    normalization: float

    def __post_init__(self):
        if self.domain not in ("time", "frequency"):
            raise ValueError(f"unknown domain {self.domain!r}")
        if self.values.shape != self.grid.shape:
            raise ValueError("values do not match the grid shape")

    def grid_integral(self) -> float:
        """Quadrature of the density over the grid.

        Time grids are cell-centred, so the midpoint rule applies; frequency
        grids are node-based and use the trapezoidal rule.
        """
        if self.domain == "time":
            return float(self.values.sum() * self.grid.cell_area)
        return float(np.trapezoid(np.trapezoid(self.values, dx=self.grid.y.spacing, axis=1),
                                  dx=self.grid.x.spacing))

    def normalized(self) -> np.ndarray:
        return self.values / self.normalization

    def check_coverage(self, reference: float, tolerance: float = 0.01) -> None:
        integral = self.grid_integral()
        if abs(integral - reference) > tolerance * abs(reference):
            warnings.warn(
                f"{self.domain} grid captures {integral:.6g} of {reference:.6g} "
                f"({100 * abs(integral - reference) / abs(reference):.2f}% off); "
                "widen or refine the grid",
                GridWarning, stacklevel=3)


def default_time_axis(pulse: Pulse, gamma: float = 1.0, points: int = 512,
                      tail: float = 12.0) -> Grid1D:
    """Cell-centred time axis covering the pulse plus a decay tail.

    The span is [start - 2/Omega, end + tail/gamma]; the cell size is
    adjusted so that pulse discontinuities fall on cell boundaries.
    """
    lo, hi = pulse.bulk_window()
    lower = lo - 2.0 / pulse.bandwidth if pulse.kind is PulseKind.SQUARE else lo
    upper = hi + tail / gamma
    h = (upper - lower) / points
    anchors = [b for b in pulse.breakpoints if lower < b < upper]
    if pulse.kind is PulseKind.SQUARE:
        m = max(1, math.ceil(pulse.duration / h))
        h = pulse.duration / m
    if anchors:
        ref = anchors[0]
        n_before = math.ceil((ref - lower) / h)
        lower = ref - n_before * h
    count = math.ceil((upper - lower) / h)
    return Grid1D.cells(lower, lower + count * h, count)


def default_frequency_axis(pulse: Pulse, gamma: float = 1.0, points: int = 512,
                           width: float = 12.0) -> Grid1D:
    """Symmetric node grid of half-width ``width * max(Omega, gamma)``; odd point count."""
    half = width * max(pulse.bandwidth, gamma)
    points = points + 1 if points % 2 == 0 else points
    return Grid1D(-half, half, points)
