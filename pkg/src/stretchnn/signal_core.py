"""Uniform-grid complex envelopes and energy-preserving time/frequency transforms.

All optical signals in the simulator are baseband complex envelopes
E(T) sampled on a uniform grid in the retarded frame (the frame moving
at the group velocity, so bulk propagation delay never appears).  |E|^2
is instantaneous power in watts, so sum(|E|^2) * dt is energy in joules.

The spectral convention is the signal-analysis one,

    E(T) = (1/2pi) * integral S(w) exp(-j w T) dw,
    S(w) =          integral E(T) exp(+j w T) dT,

with w the baseband offset from the optical carrier.  The discrete
transforms below implement exactly this pair, so Parseval holds to
machine precision: sum(|E|^2) dt == sum(|S|^2) dw / 2pi.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError

C_LIGHT = 299792458.0  # m/s


def _is_power_of_two(n: int) -> bool:
    return n >= 2 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class TimeGrid:
    """Uniform sampling grid: n_samples points spaced dt starting at t_start."""

    n_samples: int
    dt: float
    t_start: float

    def __post_init__(self):
        if not _is_power_of_two(self.n_samples):
            raise ConfigurationError(
                f"grid length must be a power of two >= 2, got {self.n_samples}"
            )
        if not self.dt > 0:
            raise ConfigurationError(f"dt must be positive, got {self.dt}")

    @classmethod
    def centered(cls, n_samples: int, span: float) -> "TimeGrid":
        """Grid of total duration `span` centered on T = 0."""
        return cls(n_samples, span / n_samples, -span / 2.0)

    @property
    def span(self) -> float:
        return self.n_samples * self.dt

    @property
    def t_center(self) -> float:
        return self.t_start + self.span / 2.0

    def times(self) -> np.ndarray:
        return self.t_start + self.dt * np.arange(self.n_samples)

    def omegas_fft(self) -> np.ndarray:
        """Baseband angular frequencies in FFT (wrapped) order."""
        return 2.0 * np.pi * np.fft.fftfreq(self.n_samples, self.dt)


@dataclass(frozen=True, eq=False)
class SampledEnvelope:
    """Complex field samples in sqrt(W) on a TimeGrid."""

    grid: TimeGrid
    samples: np.ndarray
    center_wavelength: float = 1550e-9

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.complex128)
        if samples.shape != (self.grid.n_samples,):
            raise ConfigurationError(
                f"expected {self.grid.n_samples} samples, got shape {samples.shape}"
            )
        if not np.all(np.isfinite(samples)):
            raise ConfigurationError("envelope contains non-finite samples")
        samples.flags.writeable = False
        object.__setattr__(self, "samples", samples)

    def with_samples(self, samples: np.ndarray) -> "SampledEnvelope":
        return SampledEnvelope(self.grid, samples, self.center_wavelength)

    def power(self) -> np.ndarray:
        return np.abs(self.samples) ** 2


@dataclass(frozen=True, eq=False)
class SpectrumView:
    """Baseband spectrum S(w) on an ascending frequency grid.

    Carries the originating TimeGrid so the inverse transform can restore
    the exact time window.
    """

    omega: np.ndarray
    amplitude: np.ndarray
    grid: TimeGrid
    center_wavelength: float = 1550e-9

    def __post_init__(self):
        if self.omega.shape != self.amplitude.shape:
            raise ConfigurationError("frequency and amplitude arrays differ in length")
        if not np.all(np.isfinite(self.amplitude)):
            raise ConfigurationError("spectrum contains non-finite amplitudes")


def to_spectrum(env: SampledEnvelope) -> SpectrumView:
    """Forward transform of a sampled envelope.

    S(w_k) = dt * exp(j w_k t_start) * sum_n E_n exp(2pi j k n / N),
    which is the Riemann sum of integral E exp(+j w T) dT on the grid.
    """
    grid = env.grid
    raw = np.fft.ifft(env.samples) * (grid.n_samples * grid.dt)
    omega = grid.omegas_fft()
    amplitude = raw * np.exp(1j * omega * grid.t_start)
    return SpectrumView(
        np.fft.fftshift(omega),
        np.fft.fftshift(amplitude),
        grid,
        env.center_wavelength,
    )


def from_spectrum(spec: SpectrumView) -> SampledEnvelope:
    """Inverse transform; exact inverse of :func:`to_spectrum`."""
    grid = spec.grid
    if spec.amplitude.shape != (grid.n_samples,):
        raise ConfigurationError(
            f"spectrum length {spec.amplitude.shape} does not match grid "
            f"length {grid.n_samples}"
        )
    amplitude = np.fft.ifftshift(spec.amplitude)
    omega = grid.omegas_fft()
    samples = np.fft.fft(amplitude * np.exp(-1j * omega * grid.t_start))
    samples /= grid.n_samples * grid.dt
    return SampledEnvelope(grid, samples, spec.center_wavelength)


def apply_transfer(env: SampledEnvelope, transfer_fft_order: np.ndarray) -> SampledEnvelope:
    """Multiply the spectrum by a transfer function given in FFT order.

    Equivalent to from_spectrum(H * to_spectrum(env)) but without the
    shift/offset bookkeeping; used by every spectral-domain component.
    """
    out = np.fft.fft(np.fft.ifft(env.samples) * transfer_fft_order)
    return env.with_samples(out)


def energy(env: SampledEnvelope) -> float:
    """Pulse energy in joules: sum |E|^2 dt."""
    return float(np.real(np.vdot(env.samples, env.samples))) * env.grid.dt


def spectrum_energy(spec: SpectrumView) -> float:
    """Energy evaluated in the spectral domain: (1/2pi) sum |S|^2 dw."""
    total = float(np.real(np.vdot(spec.amplitude, spec.amplitude)))
    return total / (spec.grid.n_samples * spec.grid.dt)


def energy_in_window(env: SampledEnvelope, t_lo: float, t_hi: float) -> float:
    """Energy restricted to [t_lo, t_hi); additive over disjoint windows."""
    grid = env.grid
    if not t_lo < t_hi:
        raise ValueError(f"empty window: [{t_lo}, {t_hi})")
    t_end = grid.t_start + grid.span
    if t_lo < grid.t_start - grid.dt / 2 or t_hi > t_end + grid.dt / 2:
        raise ValueError(
            f"window [{t_lo}, {t_hi}) outside grid [{grid.t_start}, {t_end})"
        )
    times = grid.times()
    lo = int(np.searchsorted(times, t_lo, side="left"))
    hi = int(np.searchsorted(times, t_hi, side="left"))
    chunk = env.samples[lo:hi]
    return float(np.real(np.vdot(chunk, chunk))) * grid.dt
