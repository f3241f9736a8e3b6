import numpy as np
import pytest
from numpy.testing import assert_allclose

from envelope import (InsufficientOscillationError, TimeSeries, envelope_peaks, fit_envelope, fit_exponential,
                      first_maximum_time, make_grid)


def damped(rate, t_end=200.0, n_points=8001, t0=0.0):
    t = t0 + make_grid(t_end, n_points)
    return TimeSeries(t, np.exp(-rate * (t - t0)) * np.cos(t - t0) ** 2, "damped")


def test_time_series_validation():
    with pytest.raises(ValueError):
        TimeSeries(np.array([0.0, 1.0, 3.0]), np.zeros(3))
    with pytest.raises(ValueError):
        TimeSeries(np.array([1.0, 0.0]), np.zeros(2))
    with pytest.raises(ValueError):
        TimeSeries(np.array([0.0, 1.0]), np.zeros(3))
    s = TimeSeries.from_grid(2.0, 5, np.arange(5), "ramp")
    assert len(s) == 5
    assert s.step == pytest.approx(0.5)


def test_make_grid_errors():
    with pytest.raises(ValueError):
        make_grid(0.0, 10)
    with pytest.raises(ValueError):
        make_grid(1.0, 1)


@pytest.mark.parametrize("rate", [5e-2, 1e-2, 5e-4])
def test_recovers_the_decay_rate(rate):
    decay = fit_envelope(damped(rate))
    assert decay.rate == pytest.approx(rate, rel=1e-2)
    assert decay.amplitude == pytest.approx(1.0, rel=1e-2)
    assert decay.peaks_used >= 3


def test_invariant_under_time_shift_and_scaling():
    reference = fit_envelope(damped(0.03))
    shifted = fit_envelope(damped(0.03, t0=17.0))
    s = damped(0.03)
    scaled = fit_envelope(TimeSeries(s.t, 4.2 * s.y))
    assert shifted.rate == pytest.approx(reference.rate, rel=1e-9)
    assert scaled.rate == pytest.approx(reference.rate, rel=1e-9)


def test_halving_the_step_keeps_the_rate():
    coarse = fit_envelope(damped(0.05, n_points=4001))
    fine = fit_envelope(damped(0.05, n_points=8001))
    assert coarse.rate == pytest.approx(fine.rate, rel=1e-2)


def test_peaks_are_refined_between_samples():
    peaks = envelope_peaks(damped(0.0, t_end=20.0, n_points=201), transient_guard=False)
    assert_allclose(peaks[:, 0], np.pi * np.arange(1, len(peaks) + 1), atol=1e-3)
    assert_allclose(peaks[:, 1], 1.0, atol=1e-4)


def test_transient_guard_drops_the_first_peak():
    # first maximum after half a period
    t = make_grid(20.0, 201)
    s = TimeSeries(t, np.sin(t) ** 2)
    assert len(envelope_peaks(s, transient_guard=False)) == len(envelope_peaks(s)) + 1


def test_upper_envelope_of_two_frequencies():
    t = make_grid(200.0, 20001)
    s = TimeSeries(t, np.exp(-0.02 * t) * (2 + np.cos(t)) * (1 + np.cos(8 * t)))
    every = envelope_peaks(s, levels=1)
    upper = envelope_peaks(s, levels=2)
    assert 3 <= len(upper) < len(every)
    assert set(np.round(upper[:, 0], 9)) <= set(np.round(every[:, 0], 9))


def test_flat_series_has_no_oscillation():
    t = make_grid(10.0, 101)
    with pytest.raises(InsufficientOscillationError):
        fit_envelope(TimeSeries(t, np.zeros_like(t), "flat"))
    with pytest.raises(InsufficientOscillationError):
        fit_envelope(TimeSeries(t, np.full_like(t, 2.0), "constant"))
    with pytest.raises(InsufficientOscillationError):
        fit_envelope(TimeSeries(t, np.exp(-t), "monotone"))


def test_fit_exponential_errors():
    with pytest.raises(InsufficientOscillationError):
        fit_exponential([(0.0, 1.0), (1.0, 0.5)])
    with pytest.raises(ValueError):
        fit_exponential([(0.0, 1.0), (1.0, 0.0), (2.0, 0.2)])


def test_fit_exponential_exact_line():
    t = np.array([1.0, 2.0, 3.0, 4.0])
    decay = fit_exponential(np.stack([t, 3.0 * np.exp(-0.4 * t)], axis=1))
    assert decay.rate == pytest.approx(0.4)
    assert decay.amplitude == pytest.approx(3.0)
    assert decay.residual == pytest.approx(0.0, abs=1e-12)
    assert_allclose(decay.envelope(t), 3.0 * np.exp(-0.4 * t))


def test_first_maximum_time():
    s = TimeSeries(make_grid(10.0, 1001), np.sin(make_grid(10.0, 1001)))
    assert abs(first_maximum_time(s) - np.pi / 2) <= s.step
    plateau = TimeSeries(make_grid(4.0, 5), [0.0, 1.0, 1.0, 0.5, 1.0])
    assert first_maximum_time(plateau) == 1.0


def test_first_maximum_time_skips_ripples_on_the_rise():
    t = make_grid(12.0, 2401)
    # narrow bump near t = 1 riding on a rise that peaks at t = pi
    s = TimeSeries(t, 1.0 - np.cos(t) + 0.3 * np.exp(-(t - 1.0) ** 2 / 0.02))
    assert abs(first_maximum_time(s) - np.pi) <= 2 * s.step
    assert 0.9 < first_maximum_time(s, min_prominence=0.0) < 1.2


def test_first_maximum_time_falls_back_to_the_window_maximum():
    rising = TimeSeries(make_grid(5.0, 51), np.linspace(0.0, 1.0, 51))
    assert first_maximum_time(rising) == 5.0
    flat = TimeSeries(make_grid(5.0, 51), np.ones(51))
    assert first_maximum_time(flat) == 0.0
