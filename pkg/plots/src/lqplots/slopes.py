"""Log-log slope fitting, definition-identical to the experiment harness.

The fit is OLS of log10(value) on log10(n) over a window, after thinning to
at most 1000 evenly log-spaced points.  This module deliberately depends
only on the CSV files, not on the harness package, so the two components
build independently; a golden-file test pins the shared definition.
"""

from __future__ import annotations

import numpy as np

from .errors import DegenerateFit

FIT_MAX_POINTS = 1000
DEFAULT_FIT_WINDOW = (5000, 100000)


def _thin_log_spaced(ns: np.ndarray, max_points: int) -> np.ndarray:
    """Indices of <= max_points entries of (sorted) ns, evenly log-spaced."""
    if len(ns) <= max_points:
        return np.arange(len(ns))
    logn = np.log10(ns)
    targets = np.linspace(logn[0], logn[-1], max_points)
    pos = np.searchsorted(logn, targets)
    pos = np.clip(pos, 1, len(ns) - 1)
    left = pos - 1
    choose_left = (targets - logn[left]) <= (logn[pos] - targets)
    return np.unique(np.where(choose_left, left, pos))


def loglog_slope(ns, values, window) -> tuple[float, float, float]:
    """OLS of log10(value) on log10(n) over [n_lo, n_hi]; returns
    (slope, intercept, r_squared).  Raises DegenerateFit when fewer than two
    distinct usable abscissae remain."""
    ns = np.asarray(ns, dtype=float)
    values = np.asarray(values, dtype=float)
    lo, hi = window
    mask = (ns >= lo) & (ns <= hi) & (ns > 0) & (values > 0) & np.isfinite(values)
    ns, values = ns[mask], values[mask]
    order = np.argsort(ns)
    ns, values = ns[order], values[order]
    if len(np.unique(ns)) < 2:
        raise DegenerateFit(f"need >= 2 distinct points in window {window}")
    idx = _thin_log_spaced(ns, FIT_MAX_POINTS)
    x = np.log10(ns[idx])
    y = np.log10(values[idx])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    ss_res = float(np.sum(resid ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return float(slope), float(intercept), r2
