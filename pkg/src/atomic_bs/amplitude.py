"""Coincidence-sector two-photon amplitude for resonant, simultaneous pulses.

The outgoing amplitude for finding one photon at distance ``tau1`` behind
the forward wavefront and the other at ``tau2`` behind the backward one is

    c_s = xi1 xi2 + th(t - tau2) [xi1 cA2 + 2 th(tau2 - tau1) cA1 cnl(tau2, tau1)] + (1 <-> 2)

with the single-photon emission amplitude ``cA`` (a causal convolution of
the pulse with the atomic response) and its truncated version ``cnl``,
which starts the convolution at the first emission instead of the
wavefront.  The step function is taken as ``th(0) = 1``; on the diagonal
the double-emission term vanishes anyway because ``cnl(tau, tau) = 0``.

Everything here assumes ``Delta = 0``, zero delay and identical pulses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from . import _kernels
from .core import (SQRT_2PI, Grid1D, Grid2D, JointDistribution2D, Pulse,
                   default_frequency_axis, default_time_axis)
from .linear_reference import linear_coincidence, linear_pair_amplitude, reflection_amplitude
from .moments import stage_samples

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


class EmptySliceError(ValueError):
    """Conditional distribution with (numerically) zero weight."""


def _split(points, breakpoints, max_piece):
    """Sub-interval edges for every consecutive pair in ``points``.

    Returns (lo, hi, owner) arrays: piece ``k`` spans ``[lo[k], hi[k]]`` and
    belongs to the interval ``[points[owner[k]], points[owner[k] + 1]]``.
    """
    los, his, owner = [], [], []
    bps = np.asarray(sorted(breakpoints))
    for i, (a, b) in enumerate(zip(points[:-1], points[1:])):
        inner = bps[(bps > a) & (bps < b)]
        edges = np.concatenate(([a], inner, [b]))
        for lo, hi in zip(edges[:-1], edges[1:]):
            n = max(1, math.ceil((hi - lo) / max_piece))
            e = np.linspace(lo, hi, n + 1)
            los.append(e[:-1])
            his.append(e[1:])
            owner.append(np.full(n, i))
    return np.concatenate(los), np.concatenate(his), np.concatenate(owner)


def emission_amplitude(pulse: Pulse, tau, gamma: float = 1.0) -> np.ndarray:
    """Linear emission amplitude ``cA(tau) = -gamma int exp(-gamma(tau - s)) xi(s) ds``.

    The integral starts at the pulse front.  It is evaluated by an exact
    exponential recursion between sorted evaluation points, with
    Gauss-Legendre quadrature on pieces that never straddle a pulse
    discontinuity.
    """
    tau = np.asarray(tau, dtype=float)
    flat = tau.ravel()
    order = np.argsort(flat, kind="stable")
    sorted_tau = flat[order]
    start = pulse.start_time
    out = np.zeros(flat.shape, dtype=complex)
    active = sorted_tau > start
    if not np.any(active):
        return out.reshape(tau.shape)
    pts = np.concatenate(([start], sorted_tau[active]))
    max_piece = min(1.0 / gamma, pulse.time_scale) / 4.0
    lo, hi, owner = _split(pts, pulse.breakpoints, max_piece)
    mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    s = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    interval_end = pts[owner + 1]
    integrand = np.exp(-gamma * (interval_end[:, None] - s)) * pulse.time_profile(s)
    piece = -gamma * half * (integrand @ _GL_WEIGHTS)
    incr = np.zeros(pts.size - 1, dtype=complex)
    np.add.at(incr, owner, piece)
    decay = np.exp(-gamma * np.diff(pts))
    values = _kernels.exp_recursion(decay, incr)
    idx = order[active]
    out[idx] = values
    return out.reshape(tau.shape)


@dataclass(frozen=True)
class AtomResponse:
    """Emission amplitudes on a time axis.

    ``linear[i] = cA(tau_i)``; ``nonlinear[j, i] = cnl(tau_j, tau_i)`` for
    ``tau_j >= tau_i`` and zero above the diagonal.
    """

    tau: np.ndarray
    xi: np.ndarray
    linear: np.ndarray
    gamma: float

    @property
    def nonlinear(self) -> np.ndarray:
        t2 = self.tau[:, None]
        t1 = self.tau[None, :]
        lower = t2 >= t1
        decay = np.exp(-self.gamma * np.where(lower, t2 - t1, 0.0))
        c = self.linear[:, None] - decay * self.linear[None, :]
        return np.where(lower, c, 0.0)


def atom_response(pulse: Pulse, grid: Grid1D | None = None, gamma: float = 1.0) -> AtomResponse:
    if grid is None:
        grid = default_time_axis(pulse, gamma)
    tau = grid.nodes
    return AtomResponse(tau, pulse.time_profile(tau).astype(complex),
                        emission_amplitude(pulse, tau, gamma), gamma)


def nonlinear_emission_amplitude(pulse: Pulse, tau2, tau1, gamma: float = 1.0):
    """``cnl(tau2, tau1)``: the emission amplitude with the convolution started at ``tau1``."""
    tau2 = np.asarray(tau2, dtype=float)
    tau1 = np.asarray(tau1, dtype=float)
    if np.any(tau2 < tau1):
        raise ValueError("cnl(tau2, tau1) is defined for tau2 >= tau1")
    return (emission_amplitude(pulse, tau2, gamma)
            - np.exp(-gamma * (tau2 - tau1)) * emission_amplitude(pulse, tau1, gamma))


def coincidence_amplitude(pulse: Pulse, grid: Grid2D | None = None, t: float = math.inf,
                          gamma: float = 1.0, linear: bool = False) -> np.ndarray:
    """Complex amplitude ``c_s(tau1, tau2; t)`` on ``grid``.

    ``linear=True`` replaces the double-emission paths by the uncorrected
    product ``2 cA1 cA2``, which is the linear beamsplitter in the time domain.
    """
    if grid is None:
        grid = Grid2D.square(default_time_axis(pulse, gamma))
    tx, ty = grid.x.nodes, grid.y.nodes
    r1 = atom_response(pulse, grid.x, gamma)
    if grid.y == grid.x:
        r2 = r1
    else:
        r2 = AtomResponse(ty, pulse.time_profile(ty).astype(complex),
                          emission_amplitude(pulse, ty, gamma), gamma)
    return _kernels.coincidence_grid(tx, r1.xi, r1.linear, ty, r2.xi, r2.linear,
                                     t, gamma, linear)


def joint_time_distribution(pulse: Pulse, t: float = math.inf, grid: Grid2D | None = None,
                            gamma: float = 1.0, linear: bool = False) -> JointDistribution2D:
    """Two-time correlation of the coincidence sector at running time ``t``.

    ``normalization`` is the midpoint-rule integral over the grid, which for
    ``t = inf`` approximates the coincidence probability.
    """
    if grid is None:
        grid = Grid2D.square(default_time_axis(pulse, gamma))
    amp = coincidence_amplitude(pulse, grid, t, gamma, linear)
    values = np.abs(amp) ** 2
    area = grid.cell_area
    return JointDistribution2D(grid, values, "time", float(values.sum() * area))


@dataclass(frozen=True)
class PathAmplitudes:
    """The five interfering coincidence paths at one pair of detection times.

    ``a``: both photons pass untouched; ``b1``/``b2``: photon 1 or 2 is
    absorbed and re-emitted; ``c1``/``c2``: both photons are absorbed and
    re-emitted, ending in either output ordering.
    """

    a: complex
    b1: complex
    b2: complex
    c1: complex
    c2: complex

    @property
    def total(self) -> complex:
        return self.a + self.b1 + self.b2 + self.c1 + self.c2

    def as_tuple(self) -> tuple:
        return self.a, self.b1, self.b2, self.c1, self.c2


def path_decomposition(pulse: Pulse, tau1: float, tau2: float, t: float = math.inf,
                       gamma: float = 1.0, linear: bool = False) -> PathAmplitudes:
    """Time-domain amplitudes of the five coincidence paths.

    The double-emission paths carry the truncated convolution unless
    ``linear`` is set, in which case each is ``cA(tau1) cA(tau2)``.
    """
    xi1, xi2 = pulse.time_profile(np.array([tau1, tau2])).astype(complex)
    ca1, ca2 = emission_amplitude(pulse, np.array([tau1, tau2]), gamma)
    seen1, seen2 = t >= tau1, t >= tau2
    b1 = ca1 * xi2 if seen1 else 0j
    b2 = xi1 * ca2 if seen2 else 0j
    if linear:
        c = ca1 * ca2 if (seen1 and seen2) else 0j
    elif tau2 > tau1:
        c = ca1 * (ca2 - math.exp(-gamma * (tau2 - tau1)) * ca1) if seen2 else 0j
    elif tau1 > tau2:
        c = ca2 * (ca1 - math.exp(-gamma * (tau1 - tau2)) * ca2) if seen1 else 0j
    else:
        c = 0j
    return PathAmplitudes(complex(xi1 * xi2), complex(b1), complex(b2), complex(c), complex(c))


def marginal_time_distribution(joint: JointDistribution2D, postselect_tau2: float | None = None):
    """Density of the forward photon's detection time.

    Without ``postselect_tau2`` the other photon is traced out and the result
    is normalised by the coincidence probability.  With it, the slice at the
    nearest ``tau2`` node is returned renormalised to unit area.

    Returns
    -------
    tau : ndarray
    density : ndarray
    """
    if joint.domain != "time":
        raise ValueError("marginals are defined for time-domain distributions")
    gx, gy = joint.grid.x, joint.grid.y
    if postselect_tau2 is None:
        density = joint.values.sum(axis=1) * gy.spacing / joint.grid_integral()
        return gx.nodes, density
    j = gy.index_of(postselect_tau2)
    if not 0 <= j < gy.points:
        raise EmptySliceError(f"tau2={postselect_tau2} lies outside the grid")
    row = joint.values[:, j]
    norm = row.sum() * gx.spacing
    if norm < 1e-12:
        raise EmptySliceError(f"conditional weight {norm:.3g} at tau2={postselect_tau2} is zero")
    return gx.nodes, row / norm


# -- frequency domain --------------------------------------------------------

def fluorescence_overlap(pulse: Pulse, total, gamma: float = 1.0) -> np.ndarray:
    """``I(s) = int f(w) f(s - w) r(w) r(s - w) dw`` at each sum frequency ``s``.

    The integrand is symmetric about ``w = s/2``, so only half the line is
    integrated (Simpson), out to where the ``w^-4`` tail is negligible.
    """
    total = np.atleast_1d(np.asarray(total, dtype=float))
    reach = 60.0 * max(pulse.bandwidth, gamma)
    h = min(pulse.bandwidth, gamma) / 16.0
    upper = reach + 0.5 * np.abs(total).max()
    n = 2 * math.ceil(upper / (2 * h)) + 1
    u = np.linspace(0.0, upper, n)
    out = np.empty(total.size, dtype=complex)
    chunk = max(1, 4_000_000 // n)
    for k in range(0, total.size, chunk):
        s = total[k:k + chunk, None]
        w1, w2 = 0.5 * s + u, 0.5 * s - u
        g = (pulse.spectral_amplitude(w1) * pulse.spectral_amplitude(w2)
             * reflection_amplitude(w1 / gamma) * reflection_amplitude(w2 / gamma))
        out[k:k + chunk] = 2.0 * simpson(g, x=u, axis=1)
    return out


def spectral_amplitude_pair(pulse: Pulse, w1, w2, gamma: float = 1.0,
                            overlap: np.ndarray | None = None):
    """(linear, fluorescence) parts of the outgoing coincidence amplitude."""
    w1 = np.asarray(w1, dtype=float)
    w2 = np.asarray(w2, dtype=float)
    lin = linear_pair_amplitude(pulse, w1, w2, 0.0, gamma)
    if overlap is None:
        overlap = fluorescence_overlap(pulse, (w1 + w2).ravel(), gamma).reshape(w1.shape)
    r1, r2 = reflection_amplitude(w1 / gamma), reflection_amplitude(w2 / gamma)
    return lin, (r1 + r2) / (math.pi * gamma) * overlap


def joint_spectrum(pulse: Pulse, grid: Grid2D | None = None, gamma: float = 1.0,
                   linear: bool = False) -> JointDistribution2D:
    """Joint spectral density of the coincidence sector after scattering.

    ``normalization`` is the full-plane integral: the linear part is
    integrated exactly along one dimension and only the fluorescence
    contribution, which decays quickly away from the atomic line, is taken
    from the grid.  A :class:`GridWarning` is issued when the grid itself
    captures less than 99% of it.
    """
    if grid is None:
        grid = Grid2D.square(default_frequency_axis(pulse, gamma))
    gx, gy = grid.x, grid.y
    W1, W2 = np.meshgrid(gx.nodes, gy.nodes, indexing="ij")
    if linear:
        lin = linear_pair_amplitude(pulse, W1, W2, 0.0, gamma)
        nl = np.zeros_like(lin)
    else:
        if np.isclose(gx.spacing, gy.spacing, rtol=1e-12, atol=0.0):
            # sums on a uniform grid form another uniform grid
            h = gx.spacing
            base = gx.lower + gy.lower
            n_sum = gx.points + gy.points - 1
            sums = base + h * np.arange(n_sum)
            table = fluorescence_overlap(pulse, sums, gamma)
            k = np.add.outer(np.arange(gx.points), np.arange(gy.points))
            overlap = table[k]
        else:
            overlap = None
        lin, nl = spectral_amplitude_pair(pulse, W1, W2, gamma, overlap)
    values = np.abs(lin + nl) ** 2
    extra = values - np.abs(lin) ** 2
    dx, dy = gx.spacing, gy.spacing
    excess = float(np.trapezoid(np.trapezoid(extra, dx=dy, axis=1), dx=dx))
    dist = JointDistribution2D(grid, values, "frequency",
                               linear_coincidence(pulse, 0.0, gamma) + excess)
    dist.check_coverage(dist.normalization)
    return dist


def fourier_transform_2d(amplitude: np.ndarray, time_grid: Grid2D, freq_grid: Grid2D) -> np.ndarray:
    """Two-dimensional Fourier transform of a cell-centred time amplitude.

    Uses ``f(w) = (2 pi)^-1/2 int xi(t) exp(i w t) dt`` on both axes.
    """
    ex = np.exp(1j * np.multiply.outer(freq_grid.x.nodes, time_grid.x.nodes))
    ey = np.exp(1j * np.multiply.outer(freq_grid.y.nodes, time_grid.y.nodes))
    scale = time_grid.x.spacing * time_grid.y.spacing / (SQRT_2PI * SQRT_2PI)
    return scale * (ex @ amplitude @ ey.T)


# -- delta-jump propagation ---------------------------------------------------

def jump_ode_oracle(pulse: Pulse, axis: Grid1D, gamma: float = 1.0,
                    max_step: float | None = None, backend: str | None = None) -> np.ndarray:
    """Coincidence amplitude from direct propagation of the amplitude equations.

    The detection-time variables live on ``axis``; the atom is driven with a
    fixed-step RK4 whose grid contains every node of ``axis``, so the delta
    kicks at ``t = tau`` are applied exactly.  Intended as an independent
    check of :func:`coincidence_amplitude` at ``t = inf``.
    """
    tau = axis.nodes
    if max_step is None:
        max_step = min(1.0 / gamma, pulse.time_scale) / 50.0
    t0 = min(pulse.start_time, tau[0])
    t1 = max(tau[-1], pulse.start_time)
    cuts = np.unique(np.concatenate(([t0, t1], tau[(tau > t0) & (tau < t1)],
                                     [b for b in pulse.breakpoints if t0 < b < t1])))
    pieces = []
    for a, b in zip(cuts[:-1], cuts[1:]):
        n = max(1, math.ceil((b - a) / max_step - 1e-9))
        pieces.append(np.linspace(a, b, n + 1)[:-1])
    times = np.concatenate(pieces + [np.array([t1])])
    xi = stage_samples(pulse, times)
    # step after which t == tau_j; nodes before the start fire immediately
    event = np.searchsorted(times, tau) - 1
    event[tau <= times[0]] = -1
    xi_tau = pulse.time_profile(tau).astype(complex)
    return _kernels.jump_propagate(xi_tau, xi, np.diff(times), event, gamma, backend)
