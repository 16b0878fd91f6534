"""Heisenberg-picture expectation-value hierarchy for two-photon scattering.

Every tracked quantity is a matrix element ``<L| O(t) |R>`` where ``O`` is
one of the atom/field operator products below and ``L``, ``R`` are the
initial two-photon state or one of its photon-reduced descendants:

    "2"  both photons (the input state)
    "A"  only the forward photon left
    "B"  only the backward photon left
    "0"  vacuum with the atom in its ground state

The free-field operators only act through
``a0 |2> = exp(-i Delta t) xi_a(t) |B>`` and friends, so each equation
couples a matrix element to elements with fewer photons.  The closure is
generated by repeatedly applying the operator equations, starting from the
requested targets, and the resulting linear system is integrated with a
fixed-step RK4 whose grid contains every pulse discontinuity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _kernels
from .core import Pulse, ScatterParams

PHOTONS = {"2": "ab", "A": "a", "B": "b", "0": ""}
_BY_PHOTONS = {v: k for k, v in PHOTONS.items()}

# (rate kind, coefficient, mode of a0^dagger on the left, operator, mode of a0 on the right)
# rate kind "g" multiplies gamma, "s" multiplies sqrt(gamma)
_EQUATIONS_A = {
    "I": (),
    "Sz": (("g", -2.0, None, "I", None), ("g", -2.0, None, "Sz", None),
           ("s", -2.0, None, "Sp", "a"), ("s", -2.0, None, "Sp", "b"),
           ("s", -2.0, "a", "Sm", None), ("s", -2.0, "b", "Sm", None)),
    "Sp": (("g", -1.0, None, "Sp", None),
           ("s", 1.0, "a", "Sz", None), ("s", 1.0, "b", "Sz", None)),
    "Na": (("g", 0.5, None, "I", None), ("g", 0.5, None, "Sz", None),
           ("s", 1.0, None, "Sp", "a"), ("s", 1.0, "a", "Sm", None)),
    "Caa": (("g", 0.5, None, "Na", None), ("g", 0.5, None, "NaSz", None),
            ("s", 1.0, None, "NaSp", "a"), ("s", 1.0, "a", "NaSm", None)),
    "NaSp": (("g", -1.0, None, "NaSp", None),
             ("s", 0.5, "a", "I", None), ("s", 0.5, "a", "Sz", None),
             ("s", 1.0, "a", "NaSz", None), ("s", 1.0, "b", "NaSz", None)),
    "NaSz": (("g", -2.0, None, "NaSz", None), ("g", -2.0, None, "Na", None),
             ("g", -0.5, None, "I", None), ("g", -0.5, None, "Sz", None),
             ("s", -2.0, None, "NaSp", "a"), ("s", -2.0, None, "NaSp", "b"),
             ("s", -1.0, None, "Sp", "a"),
             ("s", -2.0, "a", "NaSm", None), ("s", -2.0, "b", "NaSm", None),
             ("s", -1.0, "a", "Sm", None)),
}

_ADJOINT = {"I": "I", "Sz": "Sz", "Sp": "Sm", "Sm": "Sp", "Na": "Na", "Nb": "Nb",
            "Caa": "Caa", "Cbb": "Cbb", "NaSp": "NaSm", "NaSm": "NaSp", "NaSz": "NaSz",
            "NbSp": "NbSm", "NbSm": "NbSp", "NbSz": "NbSz"}

# change of the total excitation number produced by each operator
_RAISES = {"Sp": 1, "Sm": -1, "NaSp": 1, "NaSm": -1, "NbSp": 1, "NbSm": -1}


def _mirror_name(op):
    return op.translate(_SWAP_AB)


_SWAP_AB = str.maketrans("ab", "ba")


def _mirror_term(term):
    kind, coef, left, op, right = term
    swap = {"a": "b", "b": "a", None: None}
    return kind, coef, swap[left], _mirror_name(op), swap[right]


def _adjoint_term(term):
    kind, coef, left, op, right = term
    return kind, coef, right, _ADJOINT[op], left


def _build_equations():
    eqs = dict(_EQUATIONS_A)
    for op in ("Na", "Caa", "NaSp", "NaSz"):
        eqs[_mirror_name(op)] = tuple(_mirror_term(t) for t in _EQUATIONS_A[op])
    for op in ("Sp", "NaSp", "NbSp"):
        eqs[_ADJOINT[op]] = tuple(_adjoint_term(t) for t in eqs[op])
    return eqs


EQUATIONS = _build_equations()


def _reduce(state, mode):
    """State left after the free-field annihilator of ``mode`` acts, or None."""
    photons = PHOTONS[state]
    if mode not in photons:
        return None
    return _BY_PHOTONS[photons.replace(mode, "")]


def _allowed(member):
    op, left, right = member
    return len(PHOTONS[left]) == len(PHOTONS[right]) + _RAISES.get(op, 0)


def initial_value(member) -> complex:
    """Matrix element at the initial time, atom in its ground state."""
    op, left, right = member
    if left != right:
        return 0.0
    n_a = 1.0 if "a" in PHOTONS[left] else 0.0
    n_b = 1.0 if "b" in PHOTONS[left] else 0.0
    return {"I": 1.0, "Sz": -1.0, "Na": n_a, "Nb": n_b,
            "NaSz": -n_a, "NbSz": -n_b}.get(op, 0.0)


def _label(member):
    op, left, right = member
    return f"<{left}|{op}|{right}>"


@dataclass(frozen=True)
class Hierarchy:
    """Closed linear system generated from a set of target matrix elements.

    ``matrices`` holds the constant generator ``K0`` and the coefficients of
    ``s_a``, ``conj(s_a)``, ``s_b``, ``conj(s_b)``, where ``s_j(t)`` is the
    detuning-rotated pulse amplitude.  Members are sorted by the number of
    photons in ``L`` and ``R`` (vacuum first), which makes every source
    matrix strictly lower block-triangular.
    """

    members: tuple
    gamma_terms: dict  # name -> (coefficients of gamma, coefficients of sqrt(gamma))

    @property
    def labels(self) -> tuple:
        return tuple(_label(m) for m in self.members)

    def index(self, op, left="2", right="2") -> int:
        return self.members.index((op, left, right))

    @property
    def levels(self) -> list:
        """Members grouped by (L, R) pair, in dependency order."""
        groups = {}
        for i, (op, left, right) in enumerate(self.members):
            groups.setdefault((left, right), []).append(i)
        return list(groups.values())

    @property
    def independent_count(self) -> int:
        """Members that are neither constant nor the adjoint of another member."""
        seen = set()
        count = 0
        for op, left, right in self.members:
            if op == "I" or (left == "0" and right == "0"):
                continue
            key = frozenset([(op, left, right), (_ADJOINT[op], right, left)])
            if key not in seen:
                seen.add(key)
                count += 1
        return count

    def matrices(self, gamma: float):
        g, s = gamma, math.sqrt(gamma)
        t = self.gamma_terms
        return tuple(g * t[name][0] + s * t[name][1] for name in ("K0", "Ka", "Kac", "Kb", "Kbc"))

    def initial_state(self) -> np.ndarray:
        return np.array([initial_value(m) for m in self.members], dtype=complex)


@lru_cache(maxsize=None)
def build_hierarchy(targets: tuple) -> Hierarchy:
    """Generate the closure of ``targets`` under the operator equations."""
    pending = [t for t in targets if _allowed(t)]
    found = {}
    while pending:
        member = pending.pop()
        if member in found:
            continue
        op, left, right = member
        terms = []
        for kind, coef, lmode, op2, rmode in EQUATIONS[op]:
            l2 = _reduce(left, lmode) if lmode else left
            r2 = _reduce(right, rmode) if rmode else right
            if l2 is None or r2 is None:
                continue
            dep = (op2, l2, r2)
            if not _allowed(dep):
                continue
            source = ("a" if (lmode or rmode) == "a" else "b") if (lmode or rmode) else None
            terms.append((kind, coef, source, bool(lmode), dep))
            pending.append(dep)
        found[member] = terms

    # drop members that stay identically zero: zero initially and only fed by zeros
    live = {m for m in found if initial_value(m) != 0}
    changed = True
    while changed:
        changed = False
        for m, terms in found.items():
            if m not in live and any(dep in live for *_, dep in terms):
                live.add(m)
                changed = True

    order = sorted(live, key=lambda m: (len(PHOTONS[m[1]]) + len(PHOTONS[m[2]]),
                                        m[1], m[2], m[0]))
    index = {m: i for i, m in enumerate(order)}
    n = len(order)
    mats = {name: (np.zeros((n, n)), np.zeros((n, n)))
            for name in ("K0", "Ka", "Kac", "Kb", "Kbc")}
    for m in order:
        i = index[m]
        for kind, coef, source, on_left, dep in found[m]:
            if dep not in index:
                continue
            name = "K0" if source is None else "K" + source + ("c" if on_left else "")
            mats[name][0 if kind == "g" else 1][i, index[dep]] += coef
    return Hierarchy(tuple(order), mats)


TWO_PHOTON_TARGETS = (("Caa", "2", "2"), ("Cbb", "2", "2"), ("Sz", "2", "2"),
                      ("Na", "2", "2"), ("Nb", "2", "2"))
SINGLE_PHOTON_TARGETS = (("Na", "A", "A"), ("Nb", "A", "A"), ("Sz", "A", "A"),
                         ("Na", "B", "B"), ("Nb", "B", "B"), ("Sz", "B", "B"))


class StepSizeError(RuntimeError):
    """Integration left the physical range; the time step is too coarse."""


@dataclass(frozen=True)
class MomentVector:
    members: tuple
    values: np.ndarray

    def __getitem__(self, label):
        return self.values[self.members.index(label)]


@dataclass(frozen=True)
class MomentTrace:
    times: np.ndarray
    hierarchy: Hierarchy
    values: np.ndarray  # (n_times, n_members)
    params: ScatterParams
    final_slope: float  # |dC/dt| at the last time

    def series(self, op, left="2", right="2") -> np.ndarray:
        return self.values[:, self.hierarchy.index(op, left, right)]

    def vector(self, i: int) -> MomentVector:
        return MomentVector(self.hierarchy.labels, self.values[i])

    @property
    def excitation(self) -> np.ndarray:
        return 0.5 * (self.series("Sz").real + 1.0)

    @property
    def p_aa(self) -> np.ndarray:
        return self.series("Caa").real

    @property
    def p_bb(self) -> np.ndarray:
        return self.series("Cbb").real

    @property
    def coincidence_series(self) -> np.ndarray:
        return 1.0 - self.p_aa - self.p_bb

    @property
    def coincidence(self) -> float:
        return float(self.coincidence_series[-1])

    def single_photon(self, photon="A"):
        """(reflection, transmission) of one photon scattered alone."""
        own, other = ("Na", "Nb") if photon == "A" else ("Nb", "Na")
        return (float(self.series(other, photon, photon)[-1].real),
                float(self.series(own, photon, photon)[-1].real))


def _time_grid(t_start, t_end, dt, breakpoints):
    cuts = sorted({t_start, t_end, *[b for b in breakpoints if t_start < b < t_end]})
    pieces = []
    for a, b in zip(cuts[:-1], cuts[1:]):
        n = max(1, math.ceil((b - a) / dt - 1e-9))
        pieces.append(np.linspace(a, b, n + 1)[:-1])
    pieces.append(np.array([t_end]))
    return np.concatenate(pieces)


def stage_samples(pulse: Pulse, times: np.ndarray, detuning: float = 0.0) -> np.ndarray:
    """Source samples at RK4 stage times, one-sided at the step edges.

    Returns an array (n_steps, 3) of ``exp(-i Delta t) xi(t)`` at
    ``t_n+``, ``t_n + h/2`` and ``t_{n+1}-``, so a step ending on a
    discontinuity only sees the profile on its own side.
    """
    t0, t1 = times[:-1], times[1:]
    h = t1 - t0
    eps = 1e-9 * h
    stage = np.stack([t0 + eps, 0.5 * (t0 + t1), t1 - eps], axis=1)
    return np.exp(-1j * detuning * stage) * pulse.time_profile(stage)


def default_step(gamma: float, pulse: Pulse) -> float:
    return min(1.0 / gamma, pulse.time_scale) / 50.0


def integrate_pair(pulse_a: Pulse, pulse_b: Pulse, gamma: float = 1.0, detuning: float = 0.0,
                   t_end: float | None = None, dt: float | None = None,
                   targets=TWO_PHOTON_TARGETS + SINGLE_PHOTON_TARGETS,
                   record_stride: int = 1, params: ScatterParams | None = None,
                   check_asymptote: bool = True) -> MomentTrace:
    """Integrate the hierarchy for arbitrary forward/backward pulses."""
    hierarchy = build_hierarchy(tuple(targets))
    pulse_end = max(pulse_a.end_time, pulse_b.end_time)
    if t_end is None:
        t_end = pulse_end + 15.0 / gamma
    elif check_asymptote and t_end < pulse_end + 10.0 / gamma:
        raise ValueError(f"t_end={t_end} is before pulse end + 10/gamma = {pulse_end + 10 / gamma}")
    limit = min(default_step(gamma, pulse_a), default_step(gamma, pulse_b))
    if dt is None:
        dt = limit
    elif dt > limit * (1 + 1e-12):
        raise ValueError(f"dt={dt} exceeds min(1/gamma, 1/Omega)/50 = {limit}")
    t_start = min(pulse_a.start_time, pulse_b.start_time)
    times = _time_grid(t_start, t_end, dt, pulse_a.breakpoints + pulse_b.breakpoints)
    sa = stage_samples(pulse_a, times, detuning)
    sb = stage_samples(pulse_b, times, detuning)
    mats = hierarchy.matrices(gamma)
    values = _kernels.rk4_linear(*mats, sa, sb, np.diff(times), hierarchy.initial_state(),
                                 record_stride)
    idx = np.arange(0, times.size - 1, record_stride)
    rec_times = np.concatenate((times[idx], [times[-1]])) if idx[-1] != times.size - 1 else times[idx]
    rec_times = rec_times[: values.shape[0]]

    # slope of the coincidence at the final time from the generator itself
    K0 = mats[0]
    y = values[-1]
    dy = K0 @ y + sa[-1, 2] * (mats[1] @ y) + np.conj(sa[-1, 2]) * (mats[2] @ y) \
        + sb[-1, 2] * (mats[3] @ y) + np.conj(sb[-1, 2]) * (mats[4] @ y)
    slope = 0.0
    if ("Caa", "2", "2") in hierarchy.members and ("Cbb", "2", "2") in hierarchy.members:
        slope = abs((dy[hierarchy.index("Caa")] + dy[hierarchy.index("Cbb")]).real)

    trace = MomentTrace(rec_times, hierarchy, values, params, float(slope))
    _check_range(trace)
    return trace


def _check_range(trace: MomentTrace, tol: float = 1e-6) -> None:
    members = trace.hierarchy.members
    series = [0.5 * (trace.series("Sz", k, k).real + 1.0)
              for k in ("2", "A", "B") if ("Sz", k, k) in members]
    if ("Caa", "2", "2") in members:
        series.append(trace.coincidence_series)
    for s in series:
        if np.any(~np.isfinite(s)) or s.min() < -tol or s.max() > 1 + tol:
            raise StepSizeError("probability left [0, 1]; reduce the time step")


def integrate_moments(params: ScatterParams, pulse: Pulse | None = None,
                      t_end: float | None = None, dt: float | None = None,
                      record_stride: int = 1) -> MomentTrace:
    """Scatter two identical photons, the backward one delayed by ``params.delay``."""
    if pulse is None:
        pulse = params.make_pulse()
    return integrate_pair(pulse, pulse.shifted(params.delay), gamma=params.gamma,
                          detuning=params.detuning, t_end=t_end, dt=dt,
                          record_stride=record_stride, params=params)


def excitation_probability(trace: MomentTrace) -> np.ndarray:
    return trace.excitation


def coincidence(params: ScatterParams, pulse: Pulse | None = None, dt: float | None = None) -> float:
    """Asymptotic coincidence probability; only the final state is kept."""
    return integrate_moments(params, pulse, dt=dt, record_stride=1 << 30).coincidence


def delay_scan(params: ScatterParams, pulse: Pulse | None, delays) -> list:
    """Coincidence as a function of the backward photon's delay."""
    out = []
    for d in delays:
        if d < 0:
            raise ValueError("delays must be non-negative")
        p = ScatterParams(params.gamma, params.detuning, params.bandwidth, float(d),
                          params.pulse_kind)
        out.append((float(d), coincidence(p, pulse)))
    return out


def single_photon_scattering(params: ScatterParams, pulse: Pulse | None = None):
    """(reflection, transmission) of a single photon, from the one-photon sector."""
    if pulse is None:
        pulse = params.make_pulse()
    trace = integrate_pair(pulse, pulse, gamma=params.gamma, detuning=params.detuning,
                           targets=SINGLE_PHOTON_TARGETS, record_stride=1 << 30)
    return trace.single_photon("A")


def independent_photon_coincidence(params: ScatterParams, pulse: Pulse | None = None) -> float:
    """Coincidence of two photons that scatter one after the other: R^2 + T^2."""
    r, t = single_photon_scattering(params, pulse)
    return r * r + t * t
