"""Small helpers for uniform-grid integration and windowing."""

from __future__ import annotations

import numpy as np


def simpson_uniform(y: np.ndarray, dx: float) -> float:
    """Composite Simpson integral on a uniform grid.

    Needs an even interval count (odd sample count); with an even sample
    count the last interval falls back to the trapezoid rule.
    """
    y = np.asarray(y, float)
    n = y.shape[0]
    if n < 2:
        return 0.0
    if n == 2:
        return 0.5 * dx * (y[0] + y[1])
    if n % 2 == 1:
        core, tail = y, 0.0
    else:
        core = y[:-1]
        tail = 0.5 * dx * (y[-2] + y[-1])
    s = core[0] + core[-1] + 4.0 * core[1:-1:2].sum() + 2.0 * core[2:-2:2].sum()
    return dx / 3.0 * s + tail


def window_slice(t: np.ndarray, start: float | None) -> slice:
    """Index slice of samples with t >= start (everything when start is None)."""
    if start is None or start <= t[0]:
        return slice(None)
    i0 = int(np.searchsorted(t, start - 1e-18))
    return slice(i0, None)
