import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jchsim.errors import FitError
from jchsim.fitting import fit_oscillation, lowpass, spectral_peak


@settings(max_examples=30, deadline=None)
@given(st.floats(0.5, 20.0), st.floats(0.1, 2.0), st.floats(-np.pi, np.pi), st.floats(-1, 1))
def test_recovers_clean_sinusoid(freq, amp, phase, offset):
    t = np.linspace(0, 4.0, 801)
    y = offset + amp * np.cos(2 * np.pi * freq * t + phase)
    fit = fit_oscillation(t, y)
    assert fit.frequency == pytest.approx(freq, rel=1e-6)
    assert abs(fit.amplitude) == pytest.approx(amp, rel=1e-6)
    assert fit.relative_residual < 1e-6


def test_noisy_signal_within_error_bar():
    rng = np.random.default_rng(7)
    t = np.linspace(0, 3.0, 601)
    y = 0.5 + 0.5 * np.cos(2 * np.pi * 2.3 * t) + 0.005 * rng.normal(size=t.size)
    fit = fit_oscillation(t, y)
    assert abs(fit.frequency - 2.3) < 5 * fit.frequency_error + 1e-3
    assert fit.frequency_error > 0


def test_fit_is_deterministic():
    t = np.linspace(0, 2.0, 401)
    y = np.cos(2 * np.pi * 3.1 * t) ** 2
    a = fit_oscillation(t, y)
    b = fit_oscillation(t, y)
    assert a == b


def test_constant_signal_rejected():
    t = np.linspace(0, 1, 100)
    with pytest.raises(FitError, match="constant"):
        fit_oscillation(t, np.full_like(t, 0.3))


def test_too_few_cycles_rejected():
    t = np.linspace(0, 1, 200)
    with pytest.raises(FitError, match="cycles"):
        fit_oscillation(t, np.cos(2 * np.pi * 0.3 * t))


def test_residual_gate():
    t = np.linspace(0, 4, 801)
    # two equal tones: no single sinusoid describes this
    y = np.cos(2 * np.pi * 2.0 * t) + np.cos(2 * np.pi * 3.3 * t)
    with pytest.raises(FitError, match="residual"):
        fit_oscillation(t, y)
    loose = fit_oscillation(t, y, max_relative_residual=10.0)
    assert loose.relative_residual > 0.05


def test_spectral_peak_window():
    t = np.linspace(0, 5, 2001)
    y = np.cos(2 * np.pi * 2.0 * t) + 0.5 * np.cos(2 * np.pi * 30.0 * t)
    assert spectral_peak(t, y) == pytest.approx(2.0, abs=0.02)
    assert spectral_peak(t, y, f_min=10.0) == pytest.approx(30.0, abs=0.05)
    with pytest.raises(FitError):
        spectral_peak(t, y, f_min=500.0)


def test_lowpass_removes_fast_component():
    t = np.linspace(0, 4, 4000, endpoint=False)
    slow = np.cos(2 * np.pi * 1.0 * t)
    filtered = lowpass(t, slow + 0.2 * np.cos(2 * np.pi * 200.0 * t), 50.0)
    np.testing.assert_allclose(filtered, slow, atol=1e-10)
