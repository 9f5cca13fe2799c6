"""Rate and majorant fits on (t, value) curves."""
import numpy as np

from .errors import InsufficientData

MIN_POINTS = 5


def _window(t, values, window):
    t = np.asarray(t, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    if t.shape != values.shape or t.ndim != 1:
        raise ValueError("t and values must be 1-D arrays of equal length")
    if len(t) == 0:
        raise InsufficientData("empty curve")
    lo, hi = window
    t_max = t.max()
    mask = (t >= lo * t_max) & (t <= hi * t_max)
    return t[mask], values[mask]


def fit_loglog_slope(t, values, window=(0.1, 1.0)):
    """Least-squares slope of log(value) against log(t) for points with
    t in [window[0] * t_max, window[1] * t_max]."""
    tw, vw = _window(t, values, window)
    if len(tw) < MIN_POINTS:
        raise InsufficientData(f"{len(tw)} points in fit window, need {MIN_POINTS}")
    if np.any(vw <= 0):
        raise InsufficientData("log-log fit needs strictly positive values")
    slope, _ = np.polyfit(np.log(tw), np.log(vw), 1)
    return float(slope)


def fit_majorant_constant(t, values, floor, window=(0.0, 1.0)):
    """Smallest L >= 0 with L / t + floor >= value on the window."""
    tw, vw = _window(t, values, window)
    if len(tw) < MIN_POINTS:
        raise InsufficientData(f"{len(tw)} points in fit window, need {MIN_POINTS}")
    return float(max(0.0, np.max(tw * (vw - floor))))
