"""Mapping trained weights and activations onto pulse-slot drive waveforms.

A signed weight matrix rides two intensity (hence non-negative) channels:
it is split elementwise into W+ = max(W, 0) and W- = max(-W, 0), each row
normalized by the global weight scale w_max, quantized to the DAC's
vertical resolution, and emitted as a staircase drive whose N slices tile
the usable flat-top of the stretched carrier.  A reference slot driven at
full scale (all slices = 1) calibrates out the unknown chain gain.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import EncodingError, SliceTimingWarning
from .optical import lowpass_real


def split_weights(w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Elementwise non-negative split with w_plus - w_minus == w exactly."""
    w = np.asarray(w, dtype=np.float64)
    if not np.all(np.isfinite(w)):
        raise EncodingError("weight matrix contains non-finite entries")
    return np.maximum(w, 0.0), np.maximum(-w, 0.0)


def quantize(
    values: np.ndarray, bits: int, scale: float
) -> tuple[np.ndarray, np.ndarray]:
    """Uniform quantization of values in [0, scale] to 2^bits levels.

    Returns (integer levels, dequantized values); the dequantization error
    is at most scale / (2 (2^bits - 1)) per element.
    """
    values = np.asarray(values, dtype=np.float64)
    if scale <= 0:
        raise EncodingError(f"quantizer scale must be positive, got {scale}")
    if np.any(values < 0) or np.any(values > scale * (1 + 1e-12)):
        raise EncodingError("values outside [0, scale]; scale must be the global max")
    q = (1 << bits) - 1
    levels = np.rint(values / scale * q).astype(np.int64)
    return levels, levels * (scale / q)


@dataclass(frozen=True, eq=False)
class QuantizedLayer:
    """A signed layer stored as quantized non-negative halves.

    w_plus/w_minus hold the dequantized values in original weight units;
    plus_levels/minus_levels the integer DAC codes (None when built with
    bits=None, i.e. quantization disabled).  w_max is the global scale
    shared by every layer of the network.
    """

    w_plus: np.ndarray
    w_minus: np.ndarray
    w_max: float
    bits: int | None = 8
    plus_levels: np.ndarray | None = None
    minus_levels: np.ndarray | None = None

    def __post_init__(self):
        if self.w_max <= 0:
            raise EncodingError("w_max must be positive")
        if self.w_plus.shape != self.w_minus.shape:
            raise EncodingError("w_plus and w_minus shapes differ")
        if np.any(self.w_plus < 0) or np.any(self.w_minus < 0):
            raise EncodingError("split halves must be non-negative")

    @classmethod
    def from_weights(
        cls, w: np.ndarray, w_max: float, bits: int | None = 8
    ) -> "QuantizedLayer":
        w_plus, w_minus = split_weights(w)
        if np.max(np.abs(w), initial=0.0) > w_max * (1 + 1e-12):
            raise EncodingError("w_max smaller than a weight magnitude")
        if bits is None:
            return cls(w_plus, w_minus, w_max, None)
        plus_levels, w_plus_q = quantize(w_plus / w_max, bits, 1.0)
        minus_levels, w_minus_q = quantize(w_minus / w_max, bits, 1.0)
        return cls(
            w_plus_q * w_max,
            w_minus_q * w_max,
            w_max,
            bits,
            plus_levels,
            minus_levels,
        )

    @property
    def rows(self) -> int:
        return self.w_plus.shape[0]

    @property
    def cols(self) -> int:
        return self.w_plus.shape[1]

    def signed(self) -> np.ndarray:
        """Reconstructed signed matrix, within one quantization step of the original."""
        return self.w_plus - self.w_minus

    def row_drive(self, row: int, sign: int) -> np.ndarray:
        """Per-slice drive values in [0, 1] for one row of one half."""
        half = self.w_plus if sign > 0 else self.w_minus
        return half[row] / self.w_max


class SlotKind(enum.Enum):
    ROW_PLUS = "row_plus"
    ROW_MINUS = "row_minus"
    REFERENCE = "reference"


@dataclass(frozen=True)
class SlotDescriptor:
    kind: SlotKind
    layer: int
    row: int  # -1 for reference slots
    slot_index: int
    time: float

    def label(self) -> str:
        if self.kind is SlotKind.REFERENCE:
            return f"L{self.layer}:ref:{self.slot_index}"
        sign = "+" if self.kind is SlotKind.ROW_PLUS else "-"
        return f"L{self.layer}:r{self.row}{sign}"


@dataclass(frozen=True)
class PulseSlotPlan:
    """Ordered pulse-slot schedule for one layer and one input vector."""

    layer: int
    slots: tuple[SlotDescriptor, ...]
    repetition_period: float

    def row_slots(self, row: int) -> tuple[SlotDescriptor, SlotDescriptor]:
        plus = minus = None
        for s in self.slots:
            if s.row == row:
                if s.kind is SlotKind.ROW_PLUS:
                    plus = s
                elif s.kind is SlotKind.ROW_MINUS:
                    minus = s
        if plus is None or minus is None:
            raise EncodingError(f"row {row} missing from plan")
        return plus, minus

    def reference_slots(self) -> tuple[SlotDescriptor, ...]:
        return tuple(s for s in self.slots if s.kind is SlotKind.REFERENCE)


def schedule_layer(
    layer: QuantizedLayer,
    x_dim: int,
    repetition_period: float = 20e-9,
    layer_index: int = 0,
    first_slot: int = 0,
    reference_repeats: int = 1,
) -> PulseSlotPlan:
    """Plan 2R + reference slots: (row+ then row- adjacent) for each row.

    Slot times are absolute multiples of the repetition period.
    """
    if x_dim != layer.cols:
        raise EncodingError(
            f"input dimension {x_dim} does not match layer columns {layer.cols}"
        )
    if reference_repeats < 1:
        raise EncodingError("at least one reference slot is required")
    slots = []
    idx = first_slot
    for row in range(layer.rows):
        for kind in (SlotKind.ROW_PLUS, SlotKind.ROW_MINUS):
            slots.append(
                SlotDescriptor(kind, layer_index, row, idx, idx * repetition_period)
            )
            idx += 1
    for _ in range(reference_repeats):
        slots.append(
            SlotDescriptor(SlotKind.REFERENCE, layer_index, -1, idx, idx * repetition_period)
        )
        idx += 1
    return PulseSlotPlan(layer_index, tuple(slots), repetition_period)


@dataclass(frozen=True)
class AwgSpec:
    """Arbitrary-waveform-generator front end feeding a modulator.

    bandwidth None models an ideal DAC (exact slice boundaries, no analog
    filtering); bits None disables vertical quantization.
    """

    sample_rate: float = 120e9
    bandwidth: float | None = 45e9
    bits: int | None = 8

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise EncodingError("AWG sample rate must be positive")
        if self.bandwidth is not None and self.bandwidth <= 0:
            raise EncodingError("AWG bandwidth must be positive")


@dataclass(frozen=True, eq=False)
class DriveWaveform:
    """One slot's electrical drive: N slices tiling [t_start, t_start + N tau).

    slice_values are the (already quantized) per-slice levels in [0, 1].
    `values` holds a rendered copy at `sample_rate` for inspection and
    dumps; the modulator re-renders from the recipe onto its own grid so
    no resampling error is baked in here.
    """

    slice_values: np.ndarray
    t_start: float
    slice_duration: float
    awg: AwgSpec
    sample_rate: float
    values: np.ndarray
    warn_short_slices: bool = False

    @property
    def slice_count(self) -> int:
        return int(self.slice_values.shape[0])

    @property
    def slot_offset(self) -> float:
        return self.t_start

    def sample_times(self) -> np.ndarray:
        n = self.values.shape[0]
        pad = _render_pad(self)
        return self.t_start - pad + np.arange(n) / self.sample_rate


def _render_pad(drive: DriveWaveform) -> float:
    # Margin so the rendered copy shows filter tails beyond the slice region.
    if drive.awg.bandwidth is None:
        return 0.0
    return 16.0 / drive.awg.bandwidth


def build_slice_drive(
    slice_values: np.ndarray,
    flat_top_width: float,
    awg: AwgSpec,
    guard: float = 0.0,
    oversample: int = 16,
) -> DriveWaveform:
    """Staircase drive for one slot: quantize, then model the DAC output.

    The N slices tile flat_top_width minus a guard interval at each end,
    centered on the slot.  Each slice must span at least one DAC sample;
    below two samples per slice a SliceTimingWarning is emitted.
    """
    slice_values = np.asarray(slice_values, dtype=np.float64)
    if slice_values.ndim != 1 or slice_values.size < 1:
        raise EncodingError("slice_values must be a non-empty 1-D array")
    if np.any(slice_values < 0) or np.any(slice_values > 1 + 1e-12):
        raise EncodingError("drive slice values must lie in [0, 1]")
    n = slice_values.size
    usable = flat_top_width - 2.0 * guard
    dt_awg = 1.0 / awg.sample_rate
    max_n = int(np.floor(usable / dt_awg))
    if usable <= 0 or n > max_n:
        raise EncodingError(
            f"{n} slices do not fit the {usable * 1e9:.3f} ns usable flat-top at "
            f"{awg.sample_rate / 1e9:.0f} GSa/s; at most {max(max_n, 0)} slices fit"
        )
    tau = usable / n
    warn_short = tau < 2.0 * dt_awg
    if warn_short:
        warnings.warn(
            f"slices of {tau * 1e12:.1f} ps span under two DAC samples "
            f"({tau * awg.sample_rate:.2f})",
            SliceTimingWarning,
            stacklevel=2,
        )
    if awg.bits is not None:
        _, slice_values = quantize(np.clip(slice_values, 0.0, 1.0), awg.bits, 1.0)
    t_start = -usable / 2.0

    stub = DriveWaveform(
        slice_values, t_start, tau, awg, 0.0, np.empty(0), warn_short
    )
    rate = awg.sample_rate * (oversample if awg.bandwidth is not None else 1)
    pad = _render_pad(stub)
    n_render = int(np.ceil((usable + 2 * pad) * rate)) + 1
    times = t_start - pad + np.arange(n_render) / rate
    rendered = render_drive(stub, times)
    return DriveWaveform(slice_values, t_start, tau, awg, rate, rendered, warn_short)


def dac_codes(drive: DriveWaveform) -> np.ndarray:
    """The sample codes the DAC plays for this slot.

    Each code is the area-average of the ideal staircase over its hold
    interval (slices are shorter than two DAC samples here, so naive
    point-sampling would randomly halve or double slice durations; the
    averaging resampler keeps every slice's integral exact).  Codes are
    re-quantized to the DAC's vertical resolution.
    """
    n = drive.slice_count
    tau = drive.slice_duration
    dt_awg = 1.0 / drive.awg.sample_rate
    n_codes = int(np.round(n * tau / dt_awg))
    # Integral of the staircase is piecewise linear with knots at slice edges.
    knots = tau * np.arange(n + 1)
    integral = np.concatenate([[0.0], np.cumsum(drive.slice_values) * tau])
    edges = dt_awg * np.arange(n_codes + 1)
    codes = np.diff(np.interp(edges, knots, integral)) / dt_awg
    if drive.awg.bits is not None:
        _, codes = quantize(np.clip(codes, 0.0, 1.0), drive.awg.bits, 1.0)
    return codes


def _staircase_on_grid(
    levels: np.ndarray, step: float, t_start: float, times: np.ndarray
) -> np.ndarray:
    """Area-exact sampling of a staircase onto a uniform grid.

    Each output sample is the staircase average over its grid cell, so the
    rendered integral equals the staircase integral no matter how the grid
    and step edges interleave (point sampling would jitter every step
    duration by up to one grid cell).
    """
    dt = float(times[1] - times[0]) if times.size > 1 else step
    knots = t_start + step * np.arange(levels.shape[0] + 1)
    integral = np.concatenate([[0.0], np.cumsum(levels) * step])
    cell_edges = np.concatenate([times, [times[-1] + dt]])
    return np.diff(np.interp(cell_edges, knots, integral)) / dt


def render_drive(drive: DriveWaveform, times: np.ndarray) -> np.ndarray:
    """Render the drive recipe onto an arbitrary uniform time grid.

    Ideal DAC (bandwidth None): the exact staircase.  Physical DAC:
    zero-order hold of the DAC codes followed by the DAC's Gaussian
    analog response, clamped to [0, 1].
    """
    times = np.asarray(times)
    if drive.awg.bandwidth is None:
        return _staircase_on_grid(
            drive.slice_values, drive.slice_duration, drive.t_start, times
        )
    codes = dac_codes(drive)
    out = _staircase_on_grid(codes, 1.0 / drive.awg.sample_rate, drive.t_start, times)
    dt = float(times[1] - times[0]) if times.size > 1 else 1.0 / drive.awg.sample_rate
    out = lowpass_real(out, dt, drive.awg.bandwidth)
    np.clip(out, 0.0, 1.0, out=out)
    return out


@dataclass(frozen=True)
class SliceGeometry:
    """Shared slot timing: where the slices of each layer sit in the flat-top."""

    flat_top_width: float
    guard: float
    slice_counts: tuple[int, ...]

    @property
    def usable_width(self) -> float:
        return self.flat_top_width - 2.0 * self.guard

    def slice_duration(self, n_slices: int) -> float:
        return self.usable_width / n_slices


def drives_for_slot(
    slot: SlotDescriptor,
    layer: QuantizedLayer,
    x: np.ndarray,
    flat_top_width: float,
    awg: AwgSpec,
    guard: float = 0.0,
) -> tuple[DriveWaveform, DriveWaveform]:
    """Build the (weight-row, input-vector) drive pair for one slot.

    Modulator 1 carries the row of W+/W- normalized by w_max (all ones for
    a reference slot); modulator 2 carries x.  The power-domain product of
    slice n is then (w_n / w_max) x_n.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (layer.cols,):
        raise EncodingError(
            f"activation length {x.shape} does not match layer columns {layer.cols}"
        )
    if np.any(x < 0) or np.any(x > 1 + 1e-12):
        raise EncodingError("activations must be quantized into [0, 1]")
    if slot.kind is SlotKind.REFERENCE:
        row_values = np.ones(layer.cols)
    else:
        row_values = layer.row_drive(slot.row, +1 if slot.kind is SlotKind.ROW_PLUS else -1)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SliceTimingWarning)
        d_row = build_slice_drive(row_values, flat_top_width, awg, guard)
        d_x = build_slice_drive(x, flat_top_width, awg, guard)
    return d_row, d_x
