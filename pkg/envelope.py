import logging
from dataclasses import dataclass

import numpy as np
from scipy.signal import find_peaks
from sklearn import linear_model

from tools import QbError

"""
Decay-rate extraction from oscillating observables: the upper envelope is sampled at the local maxima
of the curve and fitted by an exponential (a straight line in log scale).
"""

logger = logging.getLogger(__name__)


class InsufficientOscillationError(QbError):
    def __init__(self, n_peaks, name=""):
        super().__init__("{} qualifying peaks found{}, at least 3 are needed".format(
            n_peaks, " in {}".format(name) if name else ""))
        self.n_peaks = n_peaks


def make_grid(t_end, n_points):
    if not t_end > 0:
        raise ValueError("t_end must be positive, got {}".format(t_end))
    if n_points < 2:
        raise ValueError("a grid needs at least 2 points, got {}".format(n_points))
    return np.linspace(0.0, float(t_end), int(n_points))


@dataclass(frozen=True)
class TimeSeries:
    """
    Real observable sampled on a uniform, strictly increasing time grid.
    """
    t: np.ndarray
    y: np.ndarray
    name: str = ""

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if t.ndim != 1 or t.shape != y.shape:
            raise ValueError("t and y must be 1-D arrays of equal length, got {} and {}".format(t.shape, y.shape))
        if len(t) >= 2:
            steps = np.diff(t)
            if np.any(steps <= 0):
                raise ValueError("time grid must be strictly increasing")
            if np.max(np.abs(steps - steps.mean())) > 1e-12 * max(1.0, t[-1] - t[0]):
                raise ValueError("time grid must be uniform")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "y", y)

    @classmethod
    def from_grid(cls, t_end, n_points, y, name=""):
        return cls(make_grid(t_end, n_points), y, name)

    @property
    def step(self):
        return float(self.t[1] - self.t[0]) if len(self.t) > 1 else 0.0

    def __len__(self):
        return len(self.t)


@dataclass(frozen=True)
class DecayFit:
    rate: float
    amplitude: float
    residual: float
    peaks_used: int

    def envelope(self, t):
        return self.amplitude * np.exp(-self.rate * np.asarray(t, dtype=float))


def _refine(t, y, i):
    # vertex of the parabola through the three samples around i
    h = t[1] - t[0]
    y0, y1, y2 = y[i - 1], y[i], y[i + 1]
    curvature = y0 - 2.0 * y1 + y2
    if curvature >= 0:
        return t[i], y1
    delta = 0.5 * (y0 - y2) / curvature
    return t[i] + delta * h, y1 - 0.25 * (y0 - y2) * delta


def _upper_envelope(peaks):
    values = peaks[:, 1]
    keep = np.ones(len(values), dtype=bool)
    keep[1:] &= values[1:] > values[:-1]
    keep[:-1] &= values[:-1] > values[1:]
    return peaks[keep]


def envelope_peaks(s, levels=1, transient_guard=True):
    """
    Strict local maxima of a series above 1e-6 max(y), refined by quadratic interpolation.

    Inputs:
        s - TimeSeries
        levels - 1 keeps every maximum; each extra level keeps only the maxima that dominate their neighbours
        transient_guard - drops the first peak when it comes earlier than one oscillation period
    Returns:
        peaks - (k, 2) array of (t, y)
    """
    if len(s) < 3:
        raise ValueError("envelope_peaks needs at least 3 samples")
    t, y = s.t, s.y
    y_max = np.max(y)
    if not y_max > 0:
        raise InsufficientOscillationError(0, s.name)

    candidates, _ = find_peaks(y, height=1e-6 * y_max)
    # find_peaks also reports plateaus; only strict maxima are kept
    strict = [i for i in candidates if y[i] > y[i - 1] and y[i] > y[i + 1]]
    peaks = np.array([_refine(t, y, i) for i in strict], dtype=float).reshape(-1, 2)

    for _ in range(levels - 1):
        peaks = _upper_envelope(peaks)

    if transient_guard and len(peaks) >= 2:
        period = np.median(np.diff(peaks[:, 0]))
        if peaks[0, 0] - t[0] < period:
            peaks = peaks[1:]

    if len(peaks) < 3:
        raise InsufficientOscillationError(len(peaks), s.name)
    logger.debug("%d envelope peaks found in %s", len(peaks), s.name or "series")
    return peaks


def fit_exponential(peaks):
    """
    Least-squares line through (t_k, ln y_k).
    Returns:
        DecayFit with rate = -slope and amplitude = exp(intercept)
    """
    peaks = np.asarray(peaks, dtype=float).reshape(-1, 2)
    if len(peaks) < 3:
        raise InsufficientOscillationError(len(peaks))
    if np.any(peaks[:, 1] <= 0):
        raise ValueError("peak values must be positive to be fitted in log scale")

    t = peaks[:, 0].reshape(-1, 1)
    log_y = np.log(peaks[:, 1])
    regression = linear_model.LinearRegression(fit_intercept=True)
    regression.fit(t, log_y)

    residual = float(np.sqrt(np.mean((regression.predict(t) - log_y) ** 2)))
    return DecayFit(rate=-float(regression.coef_[0]), amplitude=float(np.exp(regression.intercept_)),
                    residual=residual, peaks_used=len(peaks))


def fit_envelope(s, levels=1):
    return fit_exponential(envelope_peaks(s, levels=levels))


def first_maximum_time(s, min_prominence=0.25, rtol=1e-9):
    """
    Time of the first local maximum whose prominence reaches min_prominence times the range of the series.

    Ripples riding on the rise are skipped. A series without such a maximum (monotone, or peaking at the
    window edge) falls back to the earliest time of its global maximum.
    """
    y = np.asarray(s.y, dtype=float)
    y_range = float(np.ptp(y))
    if y_range > 0:
        indices, _ = find_peaks(y, prominence=min_prominence * y_range)
        if len(indices):
            return float(s.t[indices[0]])
    y_max = np.max(y)
    index = np.flatnonzero(y >= y_max - rtol * abs(y_max))[0]
    return float(s.t[index])
