"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines inline;
they are printed with capture disabled, so they also appear without ``-s``.
Two criteria contain a requirement the exact model does not meet; those
tests are strict xfails and their attainable parts are asserted separately.
"""

import math
import warnings

import numpy as np
import pytest

from atomic_bs import amplitude, linear_reference, moments, oracles
from atomic_bs.core import Grid1D, Grid2D, GridWarning, Pulse, ScatterParams, default_time_axis

LN2 = math.log(2.0)


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {number}: {detail}")
        return ok
    return emit


# -- 1 ------------------------------------------------------------------------------

DETUNINGS = (0.0, 0.5, 1.0, 2.0, 4.0)


@pytest.fixture(scope="module")
def monochromatic_sweep():
    return {d: moments.coincidence(ScatterParams(bandwidth=0.02, detuning=d)) for d in DETUNINGS}


@pytest.mark.xfail(strict=True, reason="at Omega/gamma=0.02 the exact resonant coincidence is "
                                       "1 - 3 sigma (1 - sigma) = 0.941, outside 0.98")
def test_criterion_01_monochromatic_coincidence(monochromatic_sweep, report):
    err = {d: abs(c - oracles.coincidence_monochromatic(d)) for d, c in monochromatic_sweep.items()}
    c = monochromatic_sweep
    ok = max(err.values()) <= 0.02 and c[1.0] <= 0.05 and c[0.0] >= 0.98
    detail = ", ".join(f"C({d:g})={v:.4f}" for d, v in c.items())
    assert report(1, ok, f"{detail}; max |C - C_mono| = {max(err.values()):.4f}")


def test_criterion_01_detuned_points(monochromatic_sweep):
    for d in DETUNINGS[1:]:
        assert monochromatic_sweep[d] == pytest.approx(oracles.coincidence_monochromatic(d),
                                                       abs=0.02)
    assert monochromatic_sweep[1.0] <= 0.05
    # the resonant point follows the finite-bandwidth closed form instead
    assert monochromatic_sweep[0.0] == pytest.approx(oracles.coincidence_square_resonant(0.02),
                                                     abs=1e-6)


# -- 2 ------------------------------------------------------------------------------

def test_criterion_02_square_resonant(report):
    sigmas = (0.1, 0.5, 1.0, 1.25, 2.0, 5.0, 10.0)
    values = {s: moments.coincidence(ScatterParams(bandwidth=s)) for s in sigmas}
    worst = max(abs(values[s] - oracles.coincidence_square_resonant(s)) for s in sigmas)
    ok = worst <= 1e-3 and abs(values[1.25] - 0.23) <= 0.01
    assert report(2, ok, f"max |C - closed form| = {worst:.2e}, C(1.25) = {values[1.25]:.4f}")


# -- 3 ------------------------------------------------------------------------------

def test_criterion_03_nonlinearity_gap(report):
    sigma = 1.25
    atomic = moments.coincidence(ScatterParams(bandwidth=sigma))
    r = linear_reference.single_photon_reflection_coefficient(Pulse.square(sigma))
    linear = 1.0 - 2.0 * r * (1.0 - r)
    ok = atomic < linear and abs(linear - 0.5) <= 0.01
    assert report(3, ok, f"atomic C = {atomic:.4f} < linear 1 - 2RT = {linear:.4f}")


# -- 4 ------------------------------------------------------------------------------

def test_criterion_04_excitation(report):
    worst, peaks = 0.0, {}
    for sigma in (0.1, 1.25, 10.0):
        for delta in (0.0, 1.0):
            tr = moments.integrate_moments(ScatterParams(bandwidth=sigma, detuning=delta))
            inside = tr.times <= 2.0 / sigma
            t = tr.times[inside]
            if delta == 0.0:
                ref = oracles.excitation_square_resonant_explicit(sigma, t)
                peaks[sigma] = tr.excitation.max()
            else:
                ref = oracles.excitation_square(sigma, delta, t)
            worst = max(worst, float(np.abs(tr.excitation[inside] - ref).max()))
    ordered = peaks[1.25] > peaks[0.1] and peaks[1.25] > peaks[10.0]
    ok = worst <= 1e-4 and ordered
    detail = ", ".join(f"max Pe({s:g}) = {p:.4f}" for s, p in peaks.items())
    assert report(4, ok, f"max pointwise error {worst:.2e}; {detail}")


# -- 5 ------------------------------------------------------------------------------

def test_criterion_05_linear_bound(report):
    sigmas = np.geomspace(0.1, 10.0, 9)
    lowest, cross = np.inf, 0.0
    for kind in ("square", "gaussian", "exprising"):
        for s in sigmas:
            pulse = Pulse(kind, float(s))
            lowest = min(lowest, linear_reference.linear_coincidence(pulse))
            cross = max(cross, abs(linear_reference.linear_cross_term(pulse)))
    ok = lowest >= 0.5 - 1e-6 and cross < 1e-10
    assert report(5, ok, f"min linear C = {lowest:.7f}, max |cross term| = {cross:.1e}")


# -- 6 ------------------------------------------------------------------------------

def test_criterion_06_normalisation(report):
    details, ok = [], True
    for sigma in (0.1, 1.0, 10.0):
        pulse = Pulse.square(sigma)
        c = moments.coincidence(ScatterParams(bandwidth=sigma))
        time_integral = amplitude.joint_time_distribution(pulse).normalization
        with warnings.catch_warnings():
            # the square-pulse |f|^2 tail reaches past any finite grid; the
            # full-plane normalisation accounts for it
            warnings.simplefilter("ignore", GridWarning)
            freq_integral = amplitude.joint_spectrum(pulse).normalization
        e_time = abs(time_integral / c - 1.0)
        e_freq = abs(freq_integral / time_integral - 1.0)
        ok &= e_time <= 0.01 and e_freq <= 0.01
        details.append(f"sigma={sigma:g}: time/C-1={e_time:.1e}, freq/time-1={e_freq:.1e}")
    assert report(6, ok, "; ".join(details))


# -- 7 ------------------------------------------------------------------------------

def test_criterion_07_valleys(report):
    pulse = Pulse.square(0.1)
    axis = Grid1D.cells(0.0, 20.0, 2000)
    h = axis.spacing
    values = amplitude.joint_time_distribution(pulse, grid=Grid2D.square(axis)).values
    peak = values.max()
    tau = axis.nodes
    near = np.abs(tau - LN2) <= h
    diag = np.diagonal(values)[near].min() / peak
    rows = np.flatnonzero((tau >= 6.0) & (tau <= 14.0))
    off = 0.0
    for i in rows:
        for sign in (1, -1):
            window = np.abs(tau - (tau[i] + sign * LN2)) <= h
            off = max(off, values[i, window].min() / peak)
    ok = diag < 1e-4 and off < 1e-4
    assert report(7, ok, f"diagonal valley {diag:.1e} of peak, worst off-diagonal {off:.1e}")


# -- 8 ------------------------------------------------------------------------------

def test_criterion_08_reversed_hom(report):
    pulse = Pulse.square(10.0)
    w1 = np.array([0.4, 0.7, 1.0, 1.6, 2.5])
    w2 = linear_reference.interference_locus("constructive", w1)
    lin, nl = amplitude.spectral_amplitude_pair(pulse, w1, w2)
    full, linear = np.abs(lin + nl) ** 2, np.abs(lin) ** 2
    r1, r2 = linear_reference.reflection_amplitude(w1), linear_reference.reflection_amplitude(w2)
    f12 = np.abs(pulse.spectral_amplitude(w1) * pulse.spectral_amplitude(w2)) ** 2
    background = f12 * (np.abs((1 + r1) * (1 + r2)) ** 2 + np.abs(r1 * r2) ** 2)
    ratio = (full / linear).max()
    ok = ratio <= 0.1 and np.all(linear > background)
    assert report(8, ok, f"max full/linear = {ratio:.4f}, "
                         f"min linear/background = {(linear / background).min():.3f}")


# -- 9 ------------------------------------------------------------------------------

def test_criterion_09_delay_scan(report):
    params = ScatterParams(bandwidth=0.02, detuning=1.0)
    pulse = params.make_pulse()
    scan = dict(moments.delay_scan(params, pulse, [0.0, pulse.duration, 1.5 * pulse.duration]))
    plateau = [scan[pulse.duration], scan[1.5 * pulse.duration]]
    oracle = moments.independent_photon_coincidence(params)
    ok = scan[0.0] <= 0.05 and all(abs(c - 0.5) <= 0.05 for c in plateau)
    assert report(9, ok, f"C(0) = {scan[0.0]:.4f}, plateau {plateau[0]:.4f}/{plateau[1]:.4f}, "
                         f"independent photons {oracle:.4f}")


# -- 10 -----------------------------------------------------------------------------

def test_criterion_10_engine_cross_validation(report):
    pulse = Pulse.square(1.0)
    axis = default_time_axis(pulse, points=128)
    quad = amplitude.coincidence_amplitude(pulse, Grid2D.square(axis))
    ode = amplitude.jump_ode_oracle(pulse, axis)
    err = np.abs(ode - quad).max() / np.abs(quad).max()
    assert report(10, err <= 1e-3, f"max |ODE - quadrature| = {err:.1e} of peak")


# -- 11 -----------------------------------------------------------------------------

CURVE_SIGMAS = tuple(float(s) for s in np.geomspace(0.02, 10.0, 24))


@pytest.fixture(scope="module")
def bandwidth_curves():
    return {kind: np.array([moments.coincidence(ScatterParams(bandwidth=s, pulse_kind=kind))
                            for s in CURVE_SIGMAS])
            for kind in ("gaussian", "exprising")}


def _single_minimum(curve):
    steps = np.sign(np.diff(curve))
    return np.count_nonzero(np.diff(steps[steps != 0])) == 1 and steps[0] < 0 < steps[-1]


def _dips_near_one(curve):
    s = np.array(CURVE_SIGMAS)
    return curve[(s >= 0.3) & (s <= 3.0)].min() < 0.5


@pytest.mark.xfail(strict=True, reason="the finite-bandwidth correction leaves C(0.02) near "
                                       "0.94, not within 0.03 of 1")
def test_criterion_11_bandwidth_curves(bandwidth_curves, report):
    ok, parts = True, []
    for kind, curve in bandwidth_curves.items():
        shape = _single_minimum(curve) and _dips_near_one(curve)
        converged = abs(curve[0] - 1.0) <= 0.03
        ok &= shape and converged
        parts.append(f"{kind}: min {curve.min():.3f} at sigma={CURVE_SIGMAS[curve.argmin()]:.2f}, "
                     f"C(0.02)={curve[0]:.4f}")
    assert report(11, ok, "; ".join(parts))


@pytest.mark.parametrize("kind", ["gaussian", "exprising"])
def test_criterion_11_shape(bandwidth_curves, kind):
    curve = bandwidth_curves[kind]
    assert _single_minimum(curve)
    assert _dips_near_one(curve)
    assert curve[0] > 0.9
