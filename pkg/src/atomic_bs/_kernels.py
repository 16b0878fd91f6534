"""Hot inner loops, each in a numba and a pure-numpy flavour.

The numba versions are used when numba imports and ``ATOMIC_BS_BACKEND``
is unset or ``numba``; ``ATOMIC_BS_BACKEND=numpy`` forces the fallback.
The public wrappers at the bottom dispatch on :data:`BACKEND` at call time,
or on an explicit ``backend`` argument.  Apart from the RK4 integrator,
whose numba flavour takes the generator in sparse form, both flavours of a
kernel share a signature.
"""

import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
else:
    # the bundled TBB is often too old; the workqueue layer is always present
    if "NUMBA_THREADING_LAYER" not in os.environ:
        numba.config.THREADING_LAYER = "workqueue"

_requested = os.environ.get("ATOMIC_BS_BACKEND", "numba").strip().lower()
if _requested not in ("numba", "numpy"):
    raise ImportError(f"ATOMIC_BS_BACKEND must be 'numba' or 'numpy', got {_requested!r}")
BACKEND = "numba" if (_requested == "numba" and numba is not None) else "numpy"


def _njit(*args, **kwargs):
    if numba is None:
        return lambda f: f
    return numba.njit(*args, cache=True, **kwargs)


# ---------------------------------------------------------------------------
# RK4 for y' = (K0 + sa Ka + conj(sa) Kac + sb Kb + conj(sb) Kbc) y
# sa, sb: (n_steps, 3) source samples at the start, midpoint and end of each step
# ---------------------------------------------------------------------------

def _rk4_linear_numpy(K0, Ka, Kac, Kb, Kbc, sa, sb, steps, y0, stride):
    n_steps = steps.shape[0]
    n_rec = n_steps // stride + 1 + (1 if n_steps % stride else 0)
    out = np.empty((n_rec, y0.shape[0]), dtype=np.complex128)
    y = y0.astype(np.complex128).copy()
    out[0] = y
    rec = 1

    def rhs(y, a, b):
        return (K0 @ y + a * (Ka @ y) + np.conj(a) * (Kac @ y)
                + b * (Kb @ y) + np.conj(b) * (Kbc @ y))

    for n in range(n_steps):
        h = steps[n]
        a0, am, a1 = sa[n]
        b0, bm, b1 = sb[n]
        k1 = rhs(y, a0, b0)
        k2 = rhs(y + 0.5 * h * k1, am, bm)
        k3 = rhs(y + 0.5 * h * k2, am, bm)
        k4 = rhs(y + h * k3, a1, b1)
        y = y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if (n + 1) % stride == 0 or n + 1 == n_steps:
            out[rec] = y
            rec += 1
    return out


# The numba flavour works on the nonzeros only: entry k adds
# weight[kind[k]] * val[k] * y[col[k]] to row[k], with weights
# (1, sa, conj(sa), sb, conj(sb)).

@_njit()
def _rhs_sparse(row, col, val, kind, y, a, b, out):
    w0 = 1.0 + 0j
    w1 = a
    w2 = np.conj(a)
    w3 = b
    w4 = np.conj(b)
    out[:] = 0j
    for k in range(row.shape[0]):
        c = kind[k]
        if c == 0:
            w = w0
        elif c == 1:
            w = w1
        elif c == 2:
            w = w2
        elif c == 3:
            w = w3
        else:
            w = w4
        out[row[k]] += w * val[k] * y[col[k]]


@_njit()
def _rk4_linear_numba(row, col, val, kind, sa, sb, steps, y0, stride):
    n_steps = steps.shape[0]
    m = y0.shape[0]
    n_rec = n_steps // stride + 1
    if n_steps % stride:
        n_rec += 1
    out = np.empty((n_rec, m), dtype=np.complex128)
    y = y0.astype(np.complex128).copy()
    out[0] = y
    rec = 1
    k1 = np.empty(m, dtype=np.complex128)
    k2 = np.empty(m, dtype=np.complex128)
    k3 = np.empty(m, dtype=np.complex128)
    k4 = np.empty(m, dtype=np.complex128)
    tmp = np.empty(m, dtype=np.complex128)
    for n in range(n_steps):
        h = steps[n]
        _rhs_sparse(row, col, val, kind, y, sa[n, 0], sb[n, 0], k1)
        for i in range(m):
            tmp[i] = y[i] + 0.5 * h * k1[i]
        _rhs_sparse(row, col, val, kind, tmp, sa[n, 1], sb[n, 1], k2)
        for i in range(m):
            tmp[i] = y[i] + 0.5 * h * k2[i]
        _rhs_sparse(row, col, val, kind, tmp, sa[n, 1], sb[n, 1], k3)
        for i in range(m):
            tmp[i] = y[i] + h * k3[i]
        _rhs_sparse(row, col, val, kind, tmp, sa[n, 2], sb[n, 2], k4)
        for i in range(m):
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
        if (n + 1) % stride == 0 or n + 1 == n_steps:
            out[rec] = y
            rec += 1
    return out


def _to_coo(mats):
    rows, cols, vals, kinds = [], [], [], []
    for k, M in enumerate(mats):
        r, c = np.nonzero(M)
        rows.append(r)
        cols.append(c)
        vals.append(M[r, c])
        kinds.append(np.full(r.size, k))
    return (np.concatenate(rows).astype(np.int64), np.concatenate(cols).astype(np.int64),
            np.concatenate(vals).astype(np.float64), np.concatenate(kinds).astype(np.int64))


# ---------------------------------------------------------------------------
# c[k] = decay[k] * c[k-1] + incr[k],  c[-1] = c0
# ---------------------------------------------------------------------------

def _exp_recursion_numpy(decay, incr, c0):
    out = np.empty(incr.shape[0], dtype=np.complex128)
    c = complex(c0)
    for k in range(incr.shape[0]):
        c = decay[k] * c + incr[k]
        out[k] = c
    return out


@_njit()
def _exp_recursion_numba(decay, incr, c0):
    out = np.empty(incr.shape[0], dtype=np.complex128)
    c = c0 + 0j
    for k in range(incr.shape[0]):
        c = decay[k] * c + incr[k]
        out[k] = c
    return out


# ---------------------------------------------------------------------------
# Coincidence amplitude on a tau1 x tau2 grid at running time t
#   c_s = xi1 xi2 + th(t-tau2)[xi1 cA2 + 2 th(tau2-tau1) cA1 cnl(tau2,tau1)] + (1<->2)
#   cnl(tau2, tau1) = cA2 - exp(-gamma (tau2 - tau1)) cA1
# linear=True keeps the uncorrected double-emission paths 2 cA1 cA2.
# ---------------------------------------------------------------------------

def _coincidence_grid_numpy(tau1, xi1, ca1, tau2, xi2, ca2, t, gamma, linear):
    T1 = tau1[:, None]
    T2 = tau2[None, :]
    X1 = xi1[:, None]
    X2 = xi2[None, :]
    A1 = ca1[:, None]
    A2 = ca2[None, :]
    seen1 = t >= T1
    seen2 = t >= T2
    amp = X1 * X2 + np.where(seen2, X1 * A2, 0.0) + np.where(seen1, X2 * A1, 0.0)
    if linear:
        amp = amp + np.where(seen1 & seen2, 2.0 * A1 * A2, 0.0)
    else:
        dt = T2 - T1
        decay = np.exp(-gamma * np.abs(dt))
        upper = np.where(dt > 0, 2.0 * A1 * (A2 - decay * A1), 0.0)
        lower = np.where(dt < 0, 2.0 * A2 * (A1 - decay * A2), 0.0)
        amp = amp + np.where(seen2, upper, 0.0) + np.where(seen1, lower, 0.0)
    return amp


@_njit(parallel=True)
def _coincidence_grid_numba(tau1, xi1, ca1, tau2, xi2, ca2, t, gamma, linear):
    n1 = tau1.shape[0]
    n2 = tau2.shape[0]
    out = np.empty((n1, n2), dtype=np.complex128)
    for i in numba.prange(n1):
        for j in range(n2):
            seen1 = t >= tau1[i]
            seen2 = t >= tau2[j]
            amp = xi1[i] * xi2[j]
            if seen2:
                amp += xi1[i] * ca2[j]
            if seen1:
                amp += xi2[j] * ca1[i]
            if linear:
                if seen1 and seen2:
                    amp += 2.0 * ca1[i] * ca2[j]
            else:
                dt = tau2[j] - tau1[i]
                if dt > 0 and seen2:
                    amp += 2.0 * ca1[i] * (ca2[j] - np.exp(-gamma * dt) * ca1[i])
                elif dt < 0 and seen1:
                    amp += 2.0 * ca2[j] * (ca1[i] - np.exp(gamma * dt) * ca2[j])
            out[i, j] = amp
    return out


# ---------------------------------------------------------------------------
# Delta-jump propagation of the coincidence-sector amplitude ODEs.
#   atom:   cA' = -g cA - sqrt(g) xi(t)
#   mixed:  cas(tau)' = -g cas(tau) - 2 sqrt(g) xi(t) ca(tau)
# At t = tau_j:  cs[:, j] += sqrt(g) cas,  cs[j, :] += sqrt(g) cas,
#                ca[j] += sqrt(g) cA.
# xi: (n_steps, 3) stage samples; event_step[j] = step after which t == tau_j
# (-1: before the first step).
# ---------------------------------------------------------------------------

def _jump_propagate_numpy(xi_tau, xi, steps, event_step, gamma):
    n = xi_tau.shape[0]
    sg = np.sqrt(gamma)
    cs = np.multiply.outer(xi_tau, xi_tau).astype(np.complex128)
    ca = 0.5 * xi_tau.astype(np.complex128)
    cas = np.zeros(n, dtype=np.complex128)
    cA = 0j
    order = np.argsort(event_step, kind="stable")
    ev = 0

    def fire(upto):
        nonlocal ev
        while ev < n and event_step[order[ev]] <= upto:
            j = order[ev]
            cs[:, j] += sg * cas
            cs[j, :] += sg * cas
            ca[j] += sg * cA
            ev += 1

    fire(-1)
    for k in range(steps.shape[0]):
        h = steps[k]
        x0, xm, x1 = xi[k]
        a1 = -gamma * cA - sg * x0
        m1 = -gamma * cas - 2 * sg * x0 * ca
        a2 = -gamma * (cA + 0.5 * h * a1) - sg * xm
        m2 = -gamma * (cas + 0.5 * h * m1) - 2 * sg * xm * ca
        a3 = -gamma * (cA + 0.5 * h * a2) - sg * xm
        m3 = -gamma * (cas + 0.5 * h * m2) - 2 * sg * xm * ca
        a4 = -gamma * (cA + h * a3) - sg * x1
        m4 = -gamma * (cas + h * m3) - 2 * sg * x1 * ca
        cA = cA + h / 6.0 * (a1 + 2 * a2 + 2 * a3 + a4)
        cas = cas + h / 6.0 * (m1 + 2 * m2 + 2 * m3 + m4)
        fire(k)
    return cs


@_njit()
def _jump_propagate_numba(xi_tau, xi, steps, event_step, gamma):
    n = xi_tau.shape[0]
    sg = np.sqrt(gamma)
    cs = np.empty((n, n), dtype=np.complex128)
    for i in range(n):
        for j in range(n):
            cs[i, j] = xi_tau[i] * xi_tau[j]
    ca = 0.5 * xi_tau.astype(np.complex128)
    cas = np.zeros(n, dtype=np.complex128)
    m1 = np.empty(n, dtype=np.complex128)
    m2 = np.empty(n, dtype=np.complex128)
    m3 = np.empty(n, dtype=np.complex128)
    m4 = np.empty(n, dtype=np.complex128)
    cA = 0j
    order = np.argsort(event_step, kind="mergesort")
    ev = 0
    while ev < n and event_step[order[ev]] <= -1:
        j = order[ev]
        for i in range(n):
            cs[i, j] += sg * cas[i]
        for i in range(n):
            cs[j, i] += sg * cas[i]
        ca[j] += sg * cA
        ev += 1
    for k in range(steps.shape[0]):
        h = steps[k]
        x0 = xi[k, 0]
        xm = xi[k, 1]
        x1 = xi[k, 2]
        a1 = -gamma * cA - sg * x0
        a2 = -gamma * (cA + 0.5 * h * a1) - sg * xm
        a3 = -gamma * (cA + 0.5 * h * a2) - sg * xm
        a4 = -gamma * (cA + h * a3) - sg * x1
        for i in range(n):
            m1[i] = -gamma * cas[i] - 2 * sg * x0 * ca[i]
            m2[i] = -gamma * (cas[i] + 0.5 * h * m1[i]) - 2 * sg * xm * ca[i]
            m3[i] = -gamma * (cas[i] + 0.5 * h * m2[i]) - 2 * sg * xm * ca[i]
            m4[i] = -gamma * (cas[i] + h * m3[i]) - 2 * sg * x1 * ca[i]
        cA = cA + h / 6.0 * (a1 + 2 * a2 + 2 * a3 + a4)
        for i in range(n):
            cas[i] += h / 6.0 * (m1[i] + 2 * m2[i] + 2 * m3[i] + m4[i])
        while ev < n and event_step[order[ev]] <= k:
            j = order[ev]
            for i in range(n):
                cs[i, j] += sg * cas[i]
            for i in range(n):
                cs[j, i] += sg * cas[i]
            ca[j] += sg * cA
            ev += 1
    return cs


_IMPLS = {
    "rk4_linear": (_rk4_linear_numba, _rk4_linear_numpy),
    "exp_recursion": (_exp_recursion_numba, _exp_recursion_numpy),
    "coincidence_grid": (_coincidence_grid_numba, _coincidence_grid_numpy),
    "jump_propagate": (_jump_propagate_numba, _jump_propagate_numpy),
}


def _resolve(backend):
    backend = backend or BACKEND
    if backend not in ("numba", "numpy"):
        raise ValueError(f"backend must be 'numba' or 'numpy', got {backend!r}")
    return backend


def implementation(name, backend=None):
    """Return the ``name`` kernel for ``backend`` (default: the active one)."""
    fast, slow = _IMPLS[name]
    return fast if _resolve(backend) == "numba" else slow


def rk4_linear(K0, Ka, Kac, Kb, Kbc, sa, sb, steps, y0, stride=1, backend=None):
    """Fixed-step RK4 for the source-driven linear system; returns recorded states."""
    sa = np.ascontiguousarray(sa, dtype=np.complex128)
    sb = np.ascontiguousarray(sb, dtype=np.complex128)
    steps = np.ascontiguousarray(steps, dtype=np.float64)
    y0 = np.ascontiguousarray(y0, dtype=np.complex128)
    mats = (K0, Ka, Kac, Kb, Kbc)
    if _resolve(backend) == "numba":
        return _rk4_linear_numba(*_to_coo(mats), sa, sb, steps, y0, int(stride))
    return _rk4_linear_numpy(*(np.asarray(M, dtype=np.float64) for M in mats),
                             sa, sb, steps, y0, int(stride))


def exp_recursion(decay, incr, c0=0j, backend=None):
    return implementation("exp_recursion", backend)(
        np.ascontiguousarray(decay, dtype=np.float64),
        np.ascontiguousarray(incr, dtype=np.complex128), complex(c0))


def coincidence_grid(tau1, xi1, ca1, tau2, xi2, ca2, t, gamma, linear=False, backend=None):
    args = [np.ascontiguousarray(a, dtype=dt) for a, dt in (
        (tau1, np.float64), (xi1, np.complex128), (ca1, np.complex128),
        (tau2, np.float64), (xi2, np.complex128), (ca2, np.complex128))]
    return implementation("coincidence_grid", backend)(*args, float(t), float(gamma),
                                                       bool(linear))


def jump_propagate(xi_tau, xi, steps, event_step, gamma, backend=None):
    return implementation("jump_propagate", backend)(
        np.ascontiguousarray(xi_tau, dtype=np.complex128),
        np.ascontiguousarray(xi, dtype=np.complex128),
        np.ascontiguousarray(steps, dtype=np.float64),
        np.ascontiguousarray(event_step, dtype=np.int64), float(gamma))
