"""Run configuration: every chain parameter with its catalog default.

Configuration files are flat `key = value` text; unknown keys are
rejected so typos cannot silently fall back to defaults.  Impairment
toggles are independent on/off switches so each analog effect can be
studied in isolation.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

from .errors import ValidationError

MODES = ("analytic", "full_field")

_TRUE = {"on", "true", "1", "yes"}
_FALSE = {"off", "false", "0", "no"}


@dataclass(frozen=True)
class SimulationConfig:
    # Pulse source
    pulse_bandwidth_nm: float = 2.3
    center_wavelength_nm: float = 1550.0
    pulse_period_ns: float = 20.0
    pulse_peak_power_mw: float = 50.0
    # Stretch stage (single-mode fiber in amplified spans)
    smf_length_km: float = 170.0
    smf_dispersion_ps_nm_km: float = 17.0
    smf_attenuation_db_km: float = 0.2
    smf_spans: int = 3
    edfa_noise_figure_db: float = 4.0
    bpf_bandwidth_nm: float = 3.0
    # Waveshaper
    flat_top_fraction: float = 0.9
    # Drive electronics
    awg_sample_rate_gsa: float = 120.0
    awg_bandwidth_ghz: float = 45.0
    awg_resolution_bits: int = 8
    modulator_bandwidth_ghz: float = 35.0
    # Compression stage (dispersion-compensating fiber)
    dcf_length_km: float = 28.5
    dcf_dispersion_ps_nm_km: float = -100.0
    dcf_attenuation_db_km: float = 0.5
    # Receiver
    pd_responsivity: float = 0.9
    pd_bandwidth_mhz: float = 200.0
    pd_thermal_noise_a2_hz: float = 1e-22
    # Simulation control
    mode: str = "analytic"
    grid_samples: int = 1 << 18
    reference_repeats: int = 1
    seed: int = 42
    subset_seed: int = 4
    subset_per_class: int = 10
    # Impairment toggles
    quantization: bool = True
    awg_bandwidth_limit: bool = True
    modulator_bandwidth_limit: bool = True
    edfa_noise: bool = True
    pd_noise: bool = True

    def replace(self, **updates) -> "SimulationConfig":
        return dataclasses.replace(self, **updates)

    def with_all_impairments(self, enabled: bool) -> "SimulationConfig":
        return self.replace(
            quantization=enabled,
            awg_bandwidth_limit=enabled,
            modulator_bandwidth_limit=enabled,
            edfa_noise=enabled,
            pd_noise=enabled,
        )

    def with_noise(self, enabled: bool) -> "SimulationConfig":
        return self.replace(edfa_noise=enabled, pd_noise=enabled)

    def as_text(self) -> str:
        """Canonical key=value snapshot, reparseable and byte-stable."""
        lines = []
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if isinstance(value, bool):
                value = "on" if value else "off"
            lines.append(f"{f.name} = {value}")
        return "\n".join(lines) + "\n"


def _coerce(name: str, raw: str, target_type):
    raw = raw.strip()
    if target_type is bool:
        lowered = raw.lower()
        if lowered in _TRUE:
            return True
        if lowered in _FALSE:
            return False
        raise ValidationError(f"{name}: expected on/off, got {raw!r}")
    if target_type is int:
        try:
            return int(raw)
        except ValueError:
            raise ValidationError(f"{name}: expected integer, got {raw!r}") from None
    if target_type is float:
        try:
            return float(raw)
        except ValueError:
            raise ValidationError(f"{name}: expected number, got {raw!r}") from None
    return raw


def parse_config_text(text: str) -> SimulationConfig:
    fields = {f.name: f.type for f in dataclasses.fields(SimulationConfig)}
    types = {
        name: type(getattr(SimulationConfig(), name)) for name in fields
    }
    updates = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ValidationError(f"line {lineno}: expected 'key = value'")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if key not in fields:
            raise ValidationError(f"line {lineno}: unknown key {key!r}")
        updates[key] = _coerce(key, raw, types[key])
    config = SimulationConfig(**updates)
    validate_config(config)
    return config


def load_config(path) -> SimulationConfig:
    return parse_config_text(Path(path).read_text())


def validate_config(config: SimulationConfig) -> None:
    """Static sanity checks; raises ValidationError with every problem found."""
    problems = []
    if config.mode not in MODES:
        problems.append(f"mode must be one of {MODES}, got {config.mode!r}")
    positive = (
        "pulse_bandwidth_nm",
        "center_wavelength_nm",
        "pulse_period_ns",
        "pulse_peak_power_mw",
        "smf_length_km",
        "awg_sample_rate_gsa",
        "awg_bandwidth_ghz",
        "modulator_bandwidth_ghz",
        "dcf_length_km",
        "pd_responsivity",
        "pd_bandwidth_mhz",
        "bpf_bandwidth_nm",
    )
    for name in positive:
        if getattr(config, name) <= 0:
            problems.append(f"{name} must be positive")
    if not 0 < config.flat_top_fraction <= 1:
        problems.append("flat_top_fraction must be in (0, 1]")
    if config.smf_spans < 1:
        problems.append("smf_spans must be >= 1")
    if not 1 <= config.awg_resolution_bits <= 16:
        problems.append("awg_resolution_bits must be in [1, 16]")
    if config.grid_samples < 2 or config.grid_samples & (config.grid_samples - 1):
        problems.append("grid_samples must be a power of two >= 2")
    if config.reference_repeats < 1:
        problems.append("reference_repeats must be >= 1")
    if config.subset_per_class < 1:
        problems.append("subset_per_class must be >= 1")
    if config.pd_thermal_noise_a2_hz < 0:
        problems.append("pd_thermal_noise_a2_hz must be >= 0")
    if config.smf_dispersion_ps_nm_km * config.dcf_dispersion_ps_nm_km > 0:
        problems.append("compression fiber must have opposite-sign dispersion")
    if problems:
        raise ValidationError("; ".join(problems))
