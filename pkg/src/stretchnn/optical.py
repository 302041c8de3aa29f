"""Physics models for the optical chain.

Pulse source, dispersive fibers (exact spectral propagation and the
asymptotic stretched-pulse form), waveshaper equalizer, EDFA with ASE,
optical band-pass filter, intensity modulators, and photodiode.

Sign conventions follow the envelope transforms in :mod:`signal_core`:
a fiber of second-order propagation constant beta2 and length L
multiplies the baseband spectrum by exp(+j beta2 L w^2 / 2), and then
anomalous dispersion (beta2 < 0) maps lower optical frequencies to
earlier retarded times T = w * beta2 * L.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, FarFieldWarning, FlatteningError
from .signal_core import (
    C_LIGHT,
    SampledEnvelope,
    TimeGrid,
    apply_transfer,
)

H_PLANCK = 6.62607015e-34  # J s

LN10 = np.log(10.0)
LN2 = np.log(2.0)


def beta2_from_dispersion(d_ps_nm_km: float, wavelength: float) -> float:
    """Convert a dispersion parameter D (ps/nm/km) to beta2 (s^2/m)."""
    d_si = d_ps_nm_km * 1e-6  # s/m^2
    return -d_si * wavelength**2 / (2.0 * np.pi * C_LIGHT)


def spectral_width_from_nm(bandwidth_nm: float, wavelength: float) -> float:
    """Convert an optical bandwidth in nm to angular frequency rad/s."""
    return 2.0 * np.pi * C_LIGHT * (bandwidth_nm * 1e-9) / wavelength**2


def photon_energy(wavelength: float) -> float:
    return H_PLANCK * C_LIGHT / wavelength


@dataclass(frozen=True)
class PulseSourceSpec:
    """Mode-locked source emitting sinc pulses with a rectangular spectrum."""

    spectral_width: float  # rad/s, full width of the rectangular spectrum
    center_wavelength: float = 1550e-9
    peak_power: float = 50e-3  # W
    repetition_period: float = 20e-9  # s

    def __post_init__(self):
        if self.spectral_width <= 0 or self.peak_power <= 0 or self.repetition_period <= 0:
            raise ConfigurationError("pulse source parameters must be positive")

    @property
    def main_lobe_width(self) -> float:
        """Full temporal width of the sinc main lobe, 4pi/Omega."""
        return 4.0 * np.pi / self.spectral_width

    @property
    def pulse_energy(self) -> float:
        """Closed form: peak_power * 2pi/Omega (integral of the squared sinc)."""
        return self.peak_power * 2.0 * np.pi / self.spectral_width


@dataclass(frozen=True)
class FiberSpec:
    """Linear dispersive fiber span.

    beta1 is recorded for completeness but never used: simulation runs in
    the retarded frame, so the bulk group delay beta1*L is already removed.
    """

    beta2: float  # s^2/m, sign included
    length: float  # m
    attenuation_db_km: float = 0.0
    beta1: float = 0.0

    def __post_init__(self):
        if self.length < 0 or self.attenuation_db_km < 0:
            raise ConfigurationError("fiber length and attenuation must be >= 0")

    @classmethod
    def from_dispersion(
        cls,
        d_ps_nm_km: float,
        length: float,
        attenuation_db_km: float = 0.0,
        wavelength: float = 1550e-9,
    ) -> "FiberSpec":
        return cls(beta2_from_dispersion(d_ps_nm_km, wavelength), length, attenuation_db_km)

    @property
    def total_dispersion(self) -> float:
        """Accumulated beta2 * L in s^2."""
        return self.beta2 * self.length

    @property
    def alpha(self) -> float:
        """Power attenuation coefficient in 1/m."""
        return self.attenuation_db_km * LN10 / 10.0 / 1000.0

    @property
    def loss_exponent(self) -> float:
        """alpha * L such that output power = input power * exp(-loss_exponent)."""
        return self.alpha * self.length

    @property
    def power_transmission(self) -> float:
        return float(np.exp(-self.loss_exponent))


@dataclass(frozen=True)
class EdfaSpec:
    gain_db: float
    noise_figure_db: float = 4.0

    def __post_init__(self):
        if self.gain_db < 0:
            raise ConfigurationError("amplifier gain must be >= 0 dB")

    @property
    def gain_linear(self) -> float:
        return 10.0 ** (self.gain_db / 10.0)

    @property
    def n_sp(self) -> float:
        """Spontaneous emission factor, NF_linear / 2."""
        return 10.0 ** (self.noise_figure_db / 10.0) / 2.0

    def ase_psd(self, wavelength: float) -> float:
        """One-sided ASE power spectral density per mode, n_sp (G-1) h nu, W/Hz."""
        return self.n_sp * (self.gain_linear - 1.0) * photon_energy(wavelength)


@dataclass(frozen=True)
class FilterSpec:
    """Gaussian band-pass; bandwidth_3db is the full -3 dB width in Hz."""

    center_wavelength: float = 1550e-9
    bandwidth_3db: float = 375e9
    order: int = 1

    def __post_init__(self):
        if self.bandwidth_3db <= 0 or self.order < 1:
            raise ConfigurationError("filter bandwidth must be positive, order >= 1")


@dataclass(frozen=True)
class ModulatorSpec:
    """Linear-intensity modulator: output power = input power * drive.

    electrical_bandwidth None means an ideal (unlimited) electrical path.
    """

    electrical_bandwidth: float | None = 35e9

    def __post_init__(self):
        if self.electrical_bandwidth is not None and self.electrical_bandwidth <= 0:
            raise ConfigurationError("modulator bandwidth must be positive")


@dataclass(frozen=True)
class PhotodiodeSpec:
    responsivity: float = 0.9  # A/W
    electrical_bandwidth: float = 200e6  # Hz
    thermal_noise_psd: float = 1e-22  # one-sided current PSD, A^2/Hz

    def __post_init__(self):
        if not 0 < self.responsivity <= 2:
            raise ConfigurationError("responsivity must be in (0, 2] A/W")
        if self.electrical_bandwidth <= 0 or self.thermal_noise_psd < 0:
            raise ConfigurationError("photodiode bandwidth/noise out of range")


def gaussian_lowpass_gain(freq: np.ndarray, f_3db: float, order: int = 1) -> np.ndarray:
    """Gaussian magnitude response, -3 dB at f_3db, zero phase."""
    return np.exp(-LN2 / 2.0 * np.abs(freq / f_3db) ** (2 * order))


def lowpass_real(signal: np.ndarray, dt: float, f_3db: float, order: int = 1) -> np.ndarray:
    """Apply the Gaussian low-pass to a real waveform (unit DC gain)."""
    spectrum = np.fft.rfft(signal)
    freq = np.fft.rfftfreq(signal.shape[-1], dt)
    spectrum *= gaussian_lowpass_gain(freq, f_3db, order)
    return np.fft.irfft(spectrum, n=signal.shape[-1])


def generate_pulse(spec: PulseSourceSpec, grid: TimeGrid) -> SampledEnvelope:
    """Transform-limited sinc pulse peaking at the slot center.

    |E| = sqrt(peak_power) * Sa(Omega T / 2); the magnitude spectrum is
    rectangular with full width Omega.
    """
    max_dt = np.pi / (4.0 * spec.spectral_width)
    if grid.dt > max_dt:
        raise ConfigurationError(
            f"grid dt {grid.dt:.3e} s under-resolves the pulse; need <= {max_dt:.3e} s"
        )
    t = grid.times() - grid.t_center
    # np.sinc(x) = sin(pi x)/(pi x), so Sa(y) = np.sinc(y / pi)
    field = np.sqrt(spec.peak_power) * np.sinc(spec.spectral_width * t / (2.0 * np.pi))
    return SampledEnvelope(grid, field.astype(np.complex128), spec.center_wavelength)


def fiber_transfer(grid: TimeGrid, fiber: FiberSpec) -> np.ndarray:
    """Spectral transfer of a fiber span, FFT order."""
    omega = grid.omegas_fft()
    phase = 0.5 * fiber.total_dispersion * omega**2
    return np.exp(1j * phase) * np.exp(-fiber.loss_exponent / 2.0)


def propagate_fiber_exact(env: SampledEnvelope, fiber: FiberSpec) -> SampledEnvelope:
    """Exact linear propagation: quadratic spectral phase plus flat loss.

    The amplitude spectrum shape is untouched, so energy scales by exactly
    exp(-alpha L) regardless of the accumulated dispersion.
    """
    if fiber.length == 0:
        return env
    return apply_transfer(env, fiber_transfer(env.grid, fiber))


def stretch_analytic(
    spec: PulseSourceSpec, fiber: FiberSpec, grid: TimeGrid
) -> SampledEnvelope:
    """Closed-form stretched pulse from the stationary-phase asymptotics.

    Large dispersion maps the rectangular source spectrum onto time:
    |E(T)| = |S(T / (beta2 L))| / sqrt(2 pi |beta2 L|), a flat-top of
    width Omega |beta2 L|, carrying the residual quadratic phase
    -T^2 / (2 beta2 L) + pi/4 * sign(beta2 L).  This prefactor conserves
    energy (exact propagation is unitary up to loss), which is what the
    full-field comparison below requires.

    Valid in the far field Omega^2 |beta2 L| >> 1; a FarFieldWarning is
    emitted otherwise.
    """
    disp = fiber.total_dispersion
    omega_width = spec.spectral_width
    if omega_width**2 * abs(disp) < 100.0:
        warnings.warn(
            f"far-field condition weak: Omega^2 |beta2 L| = "
            f"{omega_width**2 * abs(disp):.1f}",
            FarFieldWarning,
            stacklevel=2,
        )
    t = grid.times() - grid.t_center
    omega_mapped = t / disp
    in_band = np.abs(omega_mapped) <= omega_width / 2.0
    spectral_height = np.sqrt(spec.peak_power) * 2.0 * np.pi / omega_width
    magnitude = np.where(in_band, spectral_height / np.sqrt(2.0 * np.pi * abs(disp)), 0.0)
    phase = -(t**2) / (2.0 * disp) + np.pi / 4.0 * np.sign(disp)
    field = magnitude * np.exp(1j * phase) * np.exp(-fiber.loss_exponent / 2.0)
    return SampledEnvelope(grid, field, spec.center_wavelength)


def flat_top_width(spec: PulseSourceSpec, fiber: FiberSpec) -> float:
    """Temporal width Omega |beta2 L| of the stretched flat-top."""
    return spec.spectral_width * abs(fiber.total_dispersion)


def flatten_waveshaper(
    env: SampledEnvelope,
    target_width: float,
    target_power: float,
    reference: SampledEnvelope | None = None,
    floor_ratio: float = 0.05,
) -> SampledEnvelope:
    """Ideal programmable equalizer: force |E|^2 = target_power on a window.

    The gain mask is computed from `reference` (the noiseless profile the
    instrument was programmed against; defaults to the input itself) and
    applied to `env`: gain = sqrt(target_power)/|ref| where the reference
    is above floor_ratio * max|ref| inside the centered window of width
    target_width, zero elsewhere.  Phase is preserved.  Noise riding on
    `env` therefore survives as flat-top ripple.
    """
    ref = env if reference is None else reference
    if ref.grid != env.grid:
        raise ConfigurationError("reference grid does not match input grid")
    mag = np.abs(ref.samples)
    floor = floor_ratio * float(mag.max(initial=0.0))
    if floor <= 0.0:
        raise FlatteningError("reference envelope is identically zero", 0.0)
    t = env.grid.times() - env.grid.t_center
    window = np.abs(t) <= target_width / 2.0
    above = mag > floor
    if not np.all(above[window]):
        run = _longest_true_run(above)
        achievable = run * env.grid.dt
        raise FlatteningError(
            f"stretched pulse supports only {achievable * 1e9:.3f} ns above the "
            f"power floor, narrower than the requested {target_width * 1e9:.3f} ns",
            achievable,
        )
    gain = np.zeros_like(mag)
    gain[window] = np.sqrt(target_power) / mag[window]
    return env.with_samples(env.samples * gain)


def _longest_true_run(mask: np.ndarray) -> int:
    best = run = 0
    for v in mask:
        run = run + 1 if v else 0
        best = max(best, run)
    return best


def amplify_edfa(
    env: SampledEnvelope, spec: EdfaSpec, noise_seed=None
) -> SampledEnvelope:
    """Flat gain sqrt(G) on the field plus white circular-Gaussian ASE.

    The one-sided ASE PSD n_sp (G-1) h nu is spread uniformly over the
    simulated baseband (width 1/dt), giving a per-sample complex variance
    of psd/dt.  noise_seed None adds the deterministic gain only.
    """
    out = env.samples * np.sqrt(spec.gain_linear)
    psd = spec.ase_psd(env.center_wavelength)
    if psd > 0.0 and noise_seed is not None:
        rng = np.random.default_rng(noise_seed)
        sigma = np.sqrt(psd / env.grid.dt / 2.0)
        noise = rng.normal(0.0, sigma, env.grid.n_samples) + 1j * rng.normal(
            0.0, sigma, env.grid.n_samples
        )
        out = out + noise
    return env.with_samples(out)


def bandpass_filter(env: SampledEnvelope, spec: FilterSpec) -> SampledEnvelope:
    """Gaussian optical band-pass around the filter center wavelength."""
    nu = env.grid.omegas_fft() / (2.0 * np.pi)
    detune = C_LIGHT / spec.center_wavelength - C_LIGHT / env.center_wavelength
    gain = gaussian_lowpass_gain(nu - detune, spec.bandwidth_3db / 2.0, spec.order)
    return apply_transfer(env, gain)


def modulate_intensity(
    env: SampledEnvelope, drive, spec: ModulatorSpec
) -> SampledEnvelope:
    """Multiply optical power by the (band-limited) drive waveform.

    The drive is rendered onto the envelope grid, passed through the
    modulator's Gaussian electrical response, clamped to [0, 1], and
    applied to the field as sqrt(drive).
    """
    from .encoding import render_drive  # local import; encoding owns waveform layout

    v = render_drive(drive, env.grid.times())
    if spec.electrical_bandwidth is not None:
        v = lowpass_real(v, env.grid.dt, spec.electrical_bandwidth)
    np.clip(v, 0.0, 1.0, out=v)
    return env.with_samples(env.samples * np.sqrt(v))


def photodetect(
    env: SampledEnvelope, pd: PhotodiodeSpec, noise_seed=None
) -> np.ndarray:
    """Photocurrent R |E|^2 plus thermal noise, band-limited by the PD.

    Returns current samples in A on the envelope grid.  Thermal noise is
    white Gaussian with the configured one-sided PSD (per-sample variance
    psd / (2 dt)); the Gaussian electrical response has unit DC gain, so
    the current integral equals R times the optical pulse energy.
    """
    current = pd.responsivity * env.power()
    if pd.thermal_noise_psd > 0.0 and noise_seed is not None:
        rng = np.random.default_rng(noise_seed)
        sigma = np.sqrt(pd.thermal_noise_psd / (2.0 * env.grid.dt))
        current = current + rng.normal(0.0, sigma, env.grid.n_samples)
    return lowpass_real(current, env.grid.dt, pd.electrical_bandwidth)
