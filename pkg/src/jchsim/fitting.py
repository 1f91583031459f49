"""Deterministic sinusoid fitting: zero-padded spectral peak, then least-squares refinement."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from .errors import FitError


@dataclass
class OscillationFit:
    frequency: float
    amplitude: float
    phase: float
    offset: float
    residual_rms: float
    frequency_error: float

    @property
    def relative_residual(self) -> float:
        return self.residual_rms / abs(self.amplitude) if self.amplitude else np.inf

    def model(self, t: np.ndarray) -> np.ndarray:
        return self.offset + self.amplitude * np.cos(2 * np.pi * self.frequency * t + self.phase)


def lowpass(t: np.ndarray, y: np.ndarray, cutoff: float) -> np.ndarray:
    """Remove spectral components above ``cutoff`` (uniform sampling assumed)."""
    spec = np.fft.rfft(y)
    spec[np.fft.rfftfreq(len(y), float(t[1] - t[0])) > cutoff] = 0.0
    return np.fft.irfft(spec, len(y))


def spectral_peak(t: np.ndarray, y: np.ndarray, pad: int = 16, f_max: float | None = None,
                  f_min: float = 0.0) -> float:
    """Frequency of the largest peak of the zero-padded spectrum of ``y - mean(y)``."""
    dt = float(t[1] - t[0])
    n = pad * len(y)
    spec = np.abs(np.fft.rfft((y - y.mean()) * np.hanning(len(y)), n))
    freqs = np.fft.rfftfreq(n, dt)
    mask = freqs > max(f_min, 0.5 / (t[-1] - t[0]))
    if f_max is not None:
        mask &= freqs <= f_max
    if not mask.any():
        raise FitError("no frequencies in the search window")
    k = np.flatnonzero(mask)[np.argmax(spec[mask])]
    return float(freqs[k])


def fit_oscillation(t: np.ndarray, y: np.ndarray, f_max: float | None = None, f_min: float = 0.0,
                    max_relative_residual: float = 0.05, min_cycles: float = 1.0) -> OscillationFit:
    """Fit ``offset + A cos(2 pi f t + phase)``; raise FitError when the residual
    exceeds ``max_relative_residual`` of the amplitude or no oscillation is present."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if t.size < 8:
        raise FitError("too few samples for an oscillation fit")
    if np.ptp(y) < 1e-12:
        raise FitError("signal is constant; no oscillation detected")
    f0 = spectral_peak(t, y, f_max=f_max, f_min=f_min)
    if f0 * (t[-1] - t[0]) < min_cycles:
        raise FitError(f"fewer than {min_cycles} cycles in the record (peak at {f0:.4g})")
    basis = np.column_stack([np.ones_like(t), np.cos(2 * np.pi * f0 * t), np.sin(2 * np.pi * f0 * t)])
    c, *_ = np.linalg.lstsq(basis, y, rcond=None)
    amp0 = float(np.hypot(c[1], c[2]))
    phase0 = float(np.arctan2(-c[2], c[1]))

    def resid(p):
        off, amp, freq, ph = p
        return off + amp * np.cos(2 * np.pi * freq * t + ph) - y

    sol = least_squares(resid, [c[0], amp0, f0, phase0], method="lm", xtol=1e-14, ftol=1e-14)
    off, amp, freq, ph = sol.x
    if amp < 0:
        amp, ph = -amp, ph + np.pi
    rms = float(np.sqrt(np.mean(sol.fun**2)))
    try:
        jac = sol.jac
        cov = np.linalg.inv(jac.T @ jac) * rms**2 * t.size / max(1, t.size - 4)
        ferr = float(np.sqrt(abs(cov[2, 2])))
    except np.linalg.LinAlgError:
        ferr = float("nan")
    fit = OscillationFit(float(abs(freq)), float(amp), float(np.angle(np.exp(1j * ph))), float(off), rms, ferr)
    if fit.relative_residual > max_relative_residual:
        raise FitError(f"oscillation fit residual {fit.relative_residual:.3g} of the amplitude exceeds "
                       f"{max_relative_residual}")
    return fit
