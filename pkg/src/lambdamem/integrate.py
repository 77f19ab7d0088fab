"""Adaptive embedded Runge-Kutta integration on complex state vectors.

A Dormand-Prince 5(4) pair with FSAL, stepping exactly onto a caller
supplied output grid so no dense-output interpolation is needed. The step
controller is capped by `max_step`, which callers derive from the fastest
retained phase of their system (one twentieth of its period).

The core is written in numba-compatible NumPy and jitted when numba is
available (set LAMBDAMEM_NO_NUMBA=1 to force the pure-Python path, e.g.
for debugging).
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .errors import DivergenceError, StiffnessError

try:
    import numba

    HAVE_NUMBA = os.environ.get("LAMBDAMEM_NO_NUMBA", "") != "1"
except ImportError:                                   # pragma: no cover
    numba = None
    HAVE_NUMBA = False

STATUS_OK = 0
STATUS_STIFF = 1
STATUS_DIVERGED = 2
STATUS_STEP_BUDGET = 3

# Dormand-Prince 5(4) tableau.
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = np.zeros((7, 7))
_A[1, 0] = 1 / 5
_A[2, :2] = (3 / 40, 9 / 40)
_A[3, :3] = (44 / 45, -56 / 15, 32 / 9)
_A[4, :4] = (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729)
_A[5, :5] = (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656)
_A[6, :6] = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84)
# Error coefficients: 5th-order weights minus the embedded 4th-order ones.
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920,
               -17253 / 339200, 22 / 525, -1 / 40])

_HISTORY = 48          # accepted-step norm history for growth estimation
_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 5.0


@dataclass
class IntegratorStats:
    """Bookkeeping from one integration."""

    n_accepted: int
    n_rejected: int
    n_rhs: int

    def as_dict(self) -> dict:
        return {"steps_accepted": self.n_accepted,
                "steps_rejected": self.n_rejected,
                "rhs_evaluations": self.n_rhs}


def _make_core(rhs):
    """Build the integration loop around one right-hand-side function."""
    A = _A
    C = _C
    E = _E

    def core(t_grid, y0, rtol, atol, max_step, first_step, max_steps,
             sel_idx, traj_stride, args):
        n_grid = t_grid.shape[0]
        dim = y0.shape[0]
        n_sel = sel_idx.shape[0]
        n_traj = (n_grid - 1) // traj_stride + 1
        y_sel = np.empty((n_grid, n_sel), np.complex128)
        y_traj = np.empty((n_traj, dim), np.complex128)

        k = np.empty((7, dim), np.complex128)
        ytmp = np.empty(dim, np.complex128)
        y = y0.copy()
        ynew = np.empty(dim, np.complex128)

        hist_t = np.zeros(_HISTORY)
        hist_logn = np.zeros(_HISTORY)
        hist_len = 0
        hist_pos = 0

        t = t_grid[0]
        t_final = t_grid[n_grid - 1]
        span = t_final - t
        hmin = 1e-14 * span
        for j in range(n_sel):
            y_sel[0, j] = y[sel_idx[j]]
        y_traj[0, :] = y

        rhs(t, y, k[0], args)
        nfev = 1
        h = first_step if first_step > 0.0 else max_step
        if h > max_step:
            h = max_step

        idx_next = 1
        naccept = 0
        nreject = 0
        status = STATUS_OK
        t_fail = t
        growth = 0.0

        norm0 = 0.0
        for i in range(dim):
            if abs(y[i]) > norm0:
                norm0 = abs(y[i])
        hist_t[0] = t
        hist_logn[0] = np.log(norm0 + 1e-300)
        hist_pos = 1
        hist_len = 1

        h_ctrl = h
        while idx_next < n_grid:
            if naccept + nreject >= max_steps:
                status = STATUS_STEP_BUDGET
                t_fail = t
                break
            target = t_grid[idx_next]
            if h_ctrl > max_step:
                h_ctrl = max_step
            h = h_ctrl
            clipped = False
            if t + h >= target:
                h = target - t
                clipped = True
            # stages 2..7 (k7 is the FSAL evaluation at t + h)
            for s in range(1, 7):
                for i in range(dim):
                    acc = 0.0 + 0.0j
                    for m in range(s):
                        aa = A[s, m]
                        if aa != 0.0:
                            acc += aa * k[m, i]
                    ytmp[i] = y[i] + h * acc
                if s == 6:
                    for i in range(dim):
                        ynew[i] = ytmp[i]
                rhs(t + C[s] * h, ytmp, k[s], args)
            nfev += 6

            # error norm
            err = 0.0
            finite = True
            for i in range(dim):
                e_i = 0.0 + 0.0j
                for m in range(7):
                    if E[m] != 0.0:
                        e_i += E[m] * k[m, i]
                e_abs = abs(e_i) * abs(h)
                ya = abs(y[i])
                yb = abs(ynew[i])
                sc = atol + rtol * (ya if ya > yb else yb)
                q = e_abs / sc
                err += q * q
                if not np.isfinite(yb):
                    finite = False
            err = np.sqrt(err / dim)

            if not finite or not np.isfinite(err):
                # estimate the recent exponential growth rate from history
                if hist_len >= 2:
                    newest = (hist_pos - 1) % _HISTORY
                    oldest = (hist_pos - hist_len) % _HISTORY
                    dt_h = hist_t[newest] - hist_t[oldest]
                    if dt_h > 0.0:
                        growth = (hist_logn[newest] - hist_logn[oldest]) / dt_h
                status = STATUS_DIVERGED
                t_fail = t
                break

            if err <= 1.0:
                t = target if clipped else t + h
                for i in range(dim):
                    y[i] = ynew[i]
                    k[0, i] = k[6, i]
                naccept += 1
                norm = 0.0
                for i in range(dim):
                    ai = abs(y[i])
                    if ai > norm:
                        norm = ai
                if np.isfinite(norm):
                    hist_t[hist_pos] = t
                    hist_logn[hist_pos] = np.log(norm + 1e-300)
                    hist_pos = (hist_pos + 1) % _HISTORY
                    if hist_len < _HISTORY:
                        hist_len += 1
                if clipped:
                    for j in range(n_sel):
                        y_sel[idx_next, j] = y[sel_idx[j]]
                    if idx_next % traj_stride == 0:
                        y_traj[idx_next // traj_stride, :] = y
                    idx_next += 1
                factor = _SAFETY * err ** -0.2 if err > 1e-10 else _MAX_FACTOR
                if factor > _MAX_FACTOR:
                    factor = _MAX_FACTOR
                cand = h * factor
                if clipped:
                    # the step was shortened to land on the grid, not for
                    # accuracy; never let that shrink the controller step
                    if cand > h_ctrl:
                        h_ctrl = cand
                else:
                    h_ctrl = cand
            else:
                nreject += 1
                factor = _SAFETY * err ** -0.2
                if factor < _MIN_FACTOR:
                    factor = _MIN_FACTOR
                h_ctrl = h * factor
                if h_ctrl < hmin:
                    status = STATUS_STIFF
                    t_fail = t
                    break

        return status, t_fail, growth, naccept, nreject, nfev, y_sel, y_traj

    return core


def make_integrator(rhs, jit: bool = True):
    """Wrap an RHS into a grid-sampling adaptive integrator.

    rhs(t, y, out, args) must fill `out` with dy/dt. Returns a callable
    integrate(t_grid, y0, *, rtol, atol, max_step, ...) -> (y_sel, y_traj,
    stats), raising StiffnessError / DivergenceError per the error contract.
    """
    if jit and HAVE_NUMBA:
        if isinstance(rhs, numba.core.dispatcher.Dispatcher):
            rhs_c = rhs
        else:
            try:
                rhs_c = numba.njit(cache=True)(rhs)
            except RuntimeError:
                rhs_c = numba.njit(rhs)
        core = numba.njit(nogil=True)(_make_core(rhs_c))
    else:
        core = _make_core(rhs)

    def integrate(t_grid, y0, *, rtol=1e-8, atol=1e-10, max_step,
                  first_step=0.0, max_steps=80_000_000, sel_idx=None,
                  traj_stride=1, args=()):
        t_grid = np.ascontiguousarray(t_grid, float)
        y0 = np.ascontiguousarray(y0, complex)
        if sel_idx is None:
            sel_idx = np.arange(y0.shape[0], dtype=np.int64)
        else:
            sel_idx = np.ascontiguousarray(sel_idx, np.int64)
        if rtol <= 0 or atol <= 0:
            raise ValueError("rtol and atol must be positive")
        if max_step <= 0:
            raise ValueError("max_step must be positive")
        with np.errstate(all="ignore"):   # divergence is reported, not warned
            status, t_fail, growth, nacc, nrej, nfev, y_sel, y_traj = core(
                t_grid, y0, float(rtol), float(atol), float(max_step),
                float(first_step), int(max_steps), sel_idx, int(traj_stride),
                args)
        stats = IntegratorStats(int(nacc), int(nrej), int(nfev))
        if status == STATUS_STIFF:
            raise StiffnessError(t_fail, 0.0)
        if status == STATUS_DIVERGED:
            raise DivergenceError(t_fail, growth)
        if status == STATUS_STEP_BUDGET:
            raise StiffnessError(t_fail, -1.0)
        return y_sel, y_traj, stats

    return integrate
