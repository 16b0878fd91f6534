import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad, simpson
from scipy.special import sici

from atomic_bs.core import (Grid1D, Grid2D, GridWarning, JointDistribution2D, Pulse, PulseKind,
                            ScatterParams, default_frequency_axis, default_time_axis,
                            load_sampled_pulse, pulse_spectral_amplitude, pulse_time_profile,
                            save_sampled_pulse)

FAMILIES = [Pulse.square, Pulse.gaussian, Pulse.exp_rising]
bandwidths = st.floats(min_value=0.05, max_value=20.0, allow_nan=False)


def time_norm(pulse):
    inner = list(pulse.breakpoints[1:-1])
    lo, hi = pulse.start_time, pulse.end_time
    val, _ = quad(lambda t: abs(pulse.time_profile(t)) ** 2, lo, hi, points=inner or None,
                  limit=400, epsabs=1e-13, epsrel=1e-12)
    return val


# -- profiles ----------------------------------------------------------------

def test_square_profile_values():
    p = Pulse.square(1.0)
    assert pulse_time_profile(p, 1.0) == pytest.approx(math.sqrt(0.5))
    assert pulse_time_profile(p, 3.0) == 0
    assert p.duration == 2.0


def test_gaussian_peak():
    assert pulse_time_profile(Pulse.gaussian(1.0), 0.0).real == pytest.approx((4 / math.pi) ** 0.25)


def test_exp_rising_support_ends_at_zero():
    p = Pulse.exp_rising(2.0)
    assert p.end_time == 0.0
    assert pulse_time_profile(p, 0.1) == 0
    assert pulse_time_profile(p, -1.0).real == pytest.approx(math.sqrt(2.0) * math.exp(-1.0))


@pytest.mark.parametrize("family", FAMILIES)
@pytest.mark.parametrize("bw", [0.1, 1.0, 7.5])
def test_unit_time_norm(family, bw):
    assert time_norm(family(bw)) == pytest.approx(1.0, abs=1e-10)


@given(bw=bandwidths)
@settings(max_examples=25, deadline=None)
def test_square_support_length(bw):
    p = Pulse.square(bw)
    assert p.end_time - p.start_time == pytest.approx(2.0 / bw, rel=1e-15)


@given(bw=bandwidths, delay=st.floats(0.0, 50.0))
@settings(max_examples=25, deadline=None)
def test_shift_moves_profile(bw, delay):
    p = Pulse.gaussian(bw)
    t = np.linspace(-2 / bw, 2 / bw, 7)
    np.testing.assert_allclose(p.shifted(delay).time_profile(t + delay), p.time_profile(t))


# -- spectra -------------------------------------------------------------------

def _spectral_norm(pulse, half, n=400_001):
    """|f|^2 on [-half, half] plus the analytic tail beyond it."""
    w = np.linspace(-half, half, n)
    core = simpson(np.abs(pulse.spectral_amplitude(w)) ** 2, x=w)
    bw = pulse.bandwidth
    if pulse.kind is PulseKind.SQUARE:
        # |f|^2 = sin^2(u)/(pi Omega u^2) with u = w/Omega; tail via the sine integral
        a = half / bw
        tail = 2.0 / math.pi * (math.pi / 2 - sici(2 * a)[0] + math.sin(a) ** 2 / a)
        return core + tail
    if pulse.kind is PulseKind.EXP_RISING:
        # Lorentzian of half width Omega/2
        return core + 1.0 - 2.0 / math.pi * math.atan(2.0 * half / bw)
    return core


@pytest.mark.parametrize("family", FAMILIES)
@pytest.mark.parametrize("bw", [0.2, 1.0, 5.0])
def test_parseval(family, bw):
    pulse = family(bw)
    assert _spectral_norm(pulse, 200.0 * bw) == pytest.approx(1.0, abs=1e-6)


def test_spectral_amplitude_matches_numerical_transform():
    p = Pulse.exp_rising(1.3)
    for w in (-2.0, 0.0, 0.7):
        re, _ = quad(lambda t: (p.time_profile(t) * np.exp(1j * w * t)).real, p.start_time, 0.0,
                     limit=200)
        im, _ = quad(lambda t: (p.time_profile(t) * np.exp(1j * w * t)).imag, p.start_time, 0.0,
                     limit=200)
        assert pulse_spectral_amplitude(p, w) == pytest.approx((re + 1j * im) / math.sqrt(2 * math.pi),
                                                               abs=1e-8)


def test_shift_is_a_phase_in_frequency():
    p = Pulse.square(0.8)
    w = np.linspace(-3, 3, 11)
    np.testing.assert_allclose(p.shifted(2.5).spectral_amplitude(w),
                               np.exp(2.5j * w) * p.spectral_amplitude(w))


# -- sampled pulses ------------------------------------------------------------

def test_sampled_pulse_roundtrip(tmp_path):
    t = np.linspace(-4, 4, 161)
    v = np.exp(-t**2) * np.exp(0.3j * t)
    path = tmp_path / "pulse.csv"
    save_sampled_pulse(path, t, v)
    assert path.read_text().splitlines()[0] == "tau,re,im"
    p = load_sampled_pulse(path)
    assert p.kind is PulseKind.SAMPLED
    assert time_norm(p) == pytest.approx(1.0, abs=1e-10)
    # Parseval for the exact transform of the hat-function interpolant
    w = np.linspace(-150, 150, 300_001)
    assert simpson(np.abs(p.spectral_amplitude(w)) ** 2, x=w) == pytest.approx(1.0, abs=1e-6)


def test_sampled_pulse_rejects_bad_input(tmp_path):
    with pytest.raises(ValueError):
        Pulse.sampled([0.0, 1.0, 3.0], [1, 1, 1])
    bad = tmp_path / "bad.csv"
    bad.write_text("t,a,b\n0,1,0\n1,1,0\n")
    with pytest.raises(ValueError, match="header"):
        load_sampled_pulse(bad)


# -- parameters ----------------------------------------------------------------

@pytest.mark.parametrize("kw", [dict(gamma=0.0), dict(bandwidth=-1.0), dict(delay=-0.1)])
def test_params_validation(kw):
    with pytest.raises(ValueError):
        ScatterParams(**kw)


def test_rescaled_keeps_ratios():
    p = ScatterParams(gamma=1.0, detuning=0.5, bandwidth=2.0, delay=3.0)
    q = p.rescaled(2.0)
    assert (q.gamma, q.detuning, q.bandwidth, q.delay) == (2.0, 1.0, 4.0, 1.5)


# -- grids -----------------------------------------------------------------------

def test_grid_spacing_and_cells():
    g = Grid1D(0.0, 1.0, 11)
    assert g.spacing == pytest.approx(0.1)
    c = Grid1D.cells(0.0, 1.0, 10)
    assert c.nodes[0] == pytest.approx(0.05) and c.spacing == pytest.approx(0.1)
    with pytest.raises(ValueError):
        Grid1D(0.0, 1.0, 1)


def test_default_time_axis_puts_edges_on_cell_boundaries():
    p = Pulse.square(0.3)
    ax = default_time_axis(p)
    for edge in p.breakpoints:
        k = (edge - (ax.lower - ax.spacing / 2)) / ax.spacing
        assert k == pytest.approx(round(k), abs=1e-9)


def test_default_frequency_axis_symmetric():
    ax = default_frequency_axis(Pulse.gaussian(3.0))
    assert ax.points % 2 == 1
    assert ax.lower == -ax.upper == -36.0


def test_joint_distribution_coverage_warning():
    g = Grid2D.square(Grid1D.cells(0.0, 1.0, 4))
    d = JointDistribution2D(g, np.ones(g.shape), "time", 1.0)
    assert d.grid_integral() == pytest.approx(1.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        d.check_coverage(1.0)
    with pytest.warns(GridWarning):
        d.check_coverage(2.0)
    with pytest.raises(ValueError):
        JointDistribution2D(g, np.ones((2, 2)), "time", 1.0)
