"""Digital post-processing: slot energies back into numbers.

The photodiode's narrow electrical bandwidth makes it an energy
integrator: the accumulated current of one slot is proportional to the
optical pulse energy, which in turn is proportional to sum(w_n x_n) over
the slices.  Subtracting the W+/W- slot pair and normalizing by the
full-scale reference slot cancels the unknown chain gain exactly, so the
recovered value needs no absolute calibration.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .encoding import PulseSlotPlan, QuantizedLayer, SlotDescriptor
from .errors import CalibrationError, IncompleteRecordError, IntegrationWarning
from .signal_core import TimeGrid

EnergyRecord = dict[SlotDescriptor, float]


def accumulate_slot_energy(
    current: np.ndarray,
    grid: TimeGrid,
    t_lo: float | None = None,
    t_hi: float | None = None,
    clip_ratio: float = 1e-2,
) -> float:
    """Integrate the photocurrent over a slot window: readout in A*s.

    Warns when the waveform has not decayed at the window edges, which
    means energy is leaking out of (or into) the slot.
    """
    current = np.asarray(current, dtype=np.float64)
    times = grid.times()
    lo = 0 if t_lo is None else int(np.searchsorted(times, t_lo, side="left"))
    hi = grid.n_samples if t_hi is None else int(np.searchsorted(times, t_hi, side="left"))
    if hi <= lo:
        raise ValueError("empty integration window")
    window = current[lo:hi]
    peak = float(np.max(np.abs(window), initial=0.0))
    if peak > 0.0:
        edge = max(abs(window[0]), abs(window[-1]))
        if edge > clip_ratio * peak:
            warnings.warn(
                f"waveform at window edge is {edge / peak:.2e} of peak; "
                "slot integration may be clipped",
                IntegrationWarning,
                stacklevel=2,
            )
    return float(np.sum(window)) * grid.dt


@dataclass(frozen=True)
class GammaModel:
    """Closed-form chain gain between sum(w_n x_n) and the slot readout.

    kappa is the readout coefficient (A*s per J: the PD responsivity,
    since the readout integrates current over the slot); the attenuation
    exponents are net power-loss exponents alpha*L of the stretch and
    compression stages.
    """

    kappa: float
    omega: float
    n_slices: int
    alpha_a_la: float = 0.0
    alpha_b_lb: float = 0.0

    def __post_init__(self):
        if self.kappa <= 0 or self.omega <= 0 or self.n_slices < 1:
            raise CalibrationError("gamma model parameters out of range")


def gamma_theoretical(model: GammaModel) -> float:
    """gamma = 32 pi^3 kappa exp(-(alpha_a l_a + alpha_b l_b)) / (N Omega)."""
    loss = np.exp(-(model.alpha_a_la + model.alpha_b_lb))
    return 32.0 * np.pi**3 * model.kappa * loss / (model.n_slices * model.omega)


def recover_dot(
    e_plus: float, e_minus: float, e_ref: float, w_max: float, sum_x: float
) -> float:
    """Reference-normalized dot product: ((E+ - E-) / E_ref) w_max sum(x).

    Any common positive scale on the three readouts (chain gain, losses,
    PD coefficient) cancels; sum_x is computed digitally from the known
    transmitted x.
    """
    if e_ref <= 0.0:
        raise CalibrationError(f"reference readout must be positive, got {e_ref}")
    return (e_plus - e_minus) / e_ref * w_max * sum_x


def layer_matvec(
    plan: PulseSlotPlan,
    energies: EnergyRecord,
    layer: QuantizedLayer,
    x: np.ndarray,
) -> np.ndarray:
    """Recover the full pre-activation vector W x from recorded slot energies."""
    x = np.asarray(x, dtype=np.float64)
    refs = plan.reference_slots()
    try:
        e_ref = float(np.mean([energies[s] for s in refs]))
        sum_x = float(np.sum(x))
        out = np.empty(layer.rows)
        for row in range(layer.rows):
            plus, minus = plan.row_slots(row)
            out[row] = recover_dot(
                energies[plus], energies[minus], e_ref, layer.w_max, sum_x
            )
    except KeyError as missing:
        raise IncompleteRecordError(
            f"no readout recorded for slot {missing.args[0]}"
        ) from None
    return out


def sigmoid(z: np.ndarray) -> np.ndarray:
    """Logistic function, numerically safe for large |z|."""
    return 1.0 / (1.0 + np.exp(-np.clip(z, -500.0, 500.0)))


def output_distribution(z: np.ndarray) -> np.ndarray:
    """Sigmoid followed by sum-normalization; preserves the argmax of z."""
    s = sigmoid(np.asarray(z, dtype=np.float64))
    return s / np.sum(s)
