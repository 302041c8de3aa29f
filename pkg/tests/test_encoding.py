import numpy as np
import pytest

from stretchnn.encoding import (
    AwgSpec,
    QuantizedLayer,
    SlotKind,
    build_slice_drive,
    dac_codes,
    drives_for_slot,
    quantize,
    render_drive,
    schedule_layer,
    split_weights,
)
from stretchnn.errors import EncodingError, SliceTimingWarning

AWG = AwgSpec(120e9, 45e9, 8)
AWG_IDEAL = AwgSpec(120e9, None, None)
FLAT = 6e-9
GUARD = 13.6e-12


class TestSplitWeights:
    def test_basic_example(self):
        plus, minus = split_weights(np.array([2.0, -3.0, 0.0]))
        assert np.array_equal(plus, [2.0, 0.0, 0.0])
        assert np.array_equal(minus, [0.0, 3.0, 0.0])

    def test_all_negative_gives_zero_plus(self):
        plus, minus = split_weights(np.array([[-1.0, -2.5], [-0.1, -4.0]]))
        assert np.all(plus == 0.0)
        assert np.all(minus > 0.0)

    def test_reconstruction_exact(self):
        rng = np.random.default_rng(0)
        w = rng.normal(size=(23, 401))
        plus, minus = split_weights(w)
        assert np.array_equal(plus - minus, w)
        assert np.all(plus >= 0) and np.all(minus >= 0)

    def test_non_finite_rejected(self):
        with pytest.raises(EncodingError):
            split_weights(np.array([1.0, np.nan]))


class TestQuantize:
    def test_zero_maps_to_level_zero(self):
        levels, deq = quantize(np.array([0.0]), 8, 1.0)
        assert levels[0] == 0 and deq[0] == 0.0

    def test_full_scale_maps_to_max_level(self):
        levels, _ = quantize(np.array([1.0]), 8, 1.0)
        assert levels[0] == 255

    def test_midpoint_example(self):
        levels, deq = quantize(np.array([0.5]), 8, 1.0)
        assert levels[0] == 128
        assert deq[0] == pytest.approx(128 / 255)  # ~0.50196

    def test_error_bound_half_step(self):
        rng = np.random.default_rng(1)
        values = rng.uniform(0, 2.0, 1000)
        _, deq = quantize(values, 8, 2.0)
        assert np.max(np.abs(deq - values)) <= 2.0 / (2 * 255) + 1e-12

    def test_above_scale_rejected(self):
        with pytest.raises(EncodingError):
            quantize(np.array([1.5]), 8, 1.0)


class TestQuantizedLayer:
    def test_sign_reconstruction_within_one_step(self):
        rng = np.random.default_rng(2)
        w = rng.normal(size=(23, 401)) * 3.0
        w_max = float(np.abs(w).max())
        layer = QuantizedLayer.from_weights(w, w_max, 8)
        assert np.max(np.abs(layer.signed() - w)) <= w_max / 255
        assert np.all(layer.w_plus >= 0) and np.all(layer.w_minus >= 0)

    def test_unquantized_mode(self):
        w = np.array([[0.123456, -0.654321]])
        layer = QuantizedLayer.from_weights(w, 1.0, None)
        assert np.array_equal(layer.signed(), w)
        assert layer.plus_levels is None

    def test_row_drive_in_unit_range(self):
        rng = np.random.default_rng(3)
        w = rng.normal(size=(5, 24))
        layer = QuantizedLayer.from_weights(w, float(np.abs(w).max()), 8)
        for row in range(5):
            for sign in (+1, -1):
                drive = layer.row_drive(row, sign)
                assert np.all(drive >= 0) and np.all(drive <= 1)

    def test_w_max_smaller_than_weights_rejected(self):
        with pytest.raises(EncodingError):
            QuantizedLayer.from_weights(np.array([[2.0]]), 1.0, 8)


class TestSchedule:
    def test_23_row_layer_has_47_slots(self):
        layer = QuantizedLayer.from_weights(np.zeros((23, 401)) + 0.1, 1.0, 8)
        plan = schedule_layer(layer, 401)
        assert len(plan.slots) == 47

    def test_10_row_layer_has_21_slots(self):
        layer = QuantizedLayer.from_weights(np.zeros((10, 24)) + 0.1, 1.0, 8)
        plan = schedule_layer(layer, 24)
        assert len(plan.slots) == 21

    def test_two_layer_total_is_68(self):
        l1 = QuantizedLayer.from_weights(np.zeros((23, 401)) + 0.1, 1.0, 8)
        l2 = QuantizedLayer.from_weights(np.zeros((10, 24)) + 0.1, 1.0, 8)
        p1 = schedule_layer(l1, 401, layer_index=0)
        p2 = schedule_layer(l2, 24, layer_index=1, first_slot=47)
        assert len(p1.slots) + len(p2.slots) == 68

    def test_plus_minus_adjacent_and_complete(self):
        layer = QuantizedLayer.from_weights(np.ones((7, 12)) * 0.2, 1.0, 8)
        plan = schedule_layer(layer, 12)
        seen = set()
        for a, b in zip(plan.slots[0:14:2], plan.slots[1:14:2]):
            assert a.kind is SlotKind.ROW_PLUS and b.kind is SlotKind.ROW_MINUS
            assert a.row == b.row and b.slot_index == a.slot_index + 1
            seen.add(a.row)
        assert seen == set(range(7))
        assert len(plan.reference_slots()) == 1

    def test_slot_times_are_period_multiples(self):
        layer = QuantizedLayer.from_weights(np.ones((3, 4)) * 0.2, 1.0, 8)
        plan = schedule_layer(layer, 4, repetition_period=20e-9)
        for slot in plan.slots:
            assert slot.time == pytest.approx(slot.slot_index * 20e-9)

    def test_dimension_mismatch_rejected(self):
        layer = QuantizedLayer.from_weights(np.ones((3, 4)) * 0.2, 1.0, 8)
        with pytest.raises(EncodingError):
            schedule_layer(layer, 5)


class TestBuildSliceDrive:
    def test_single_slice_constant(self):
        drive = build_slice_drive(np.array([0.6]), FLAT, AWG_IDEAL, guard=GUARD)
        assert drive.slice_count == 1
        t = drive.t_start + drive.slice_duration * np.array([0.1, 0.5, 0.9])
        assert np.allclose(render_drive(drive, t), 0.6)

    def test_equal_slices_interior_ripple_below_a_tenth_percent(self):
        drive = build_slice_drive(np.full(64, 0.7), FLAT, AWG, guard=GUARD)
        times = drive.sample_times()
        usable = drive.slice_count * drive.slice_duration
        interior = (times > drive.t_start + 0.1 * usable) & (
            times < drive.t_start + 0.9 * usable
        )
        values = drive.values[interior]
        assert (values.max() - values.min()) / 0.7 < 1e-3

    def test_too_many_slices_reports_maximum(self):
        with pytest.raises(EncodingError, match="at most"):
            build_slice_drive(np.full(2000, 0.5), FLAT, AWG, guard=GUARD)

    def test_401_slices_on_achievable_flat_top_warns(self):
        # ~14.9 ps per slice is under two DAC samples at 120 GSa/s.
        with pytest.warns(SliceTimingWarning):
            build_slice_drive(np.full(401, 0.5), FLAT, AWG, guard=GUARD)

    def test_quantization_snaps_levels(self):
        drive = build_slice_drive(np.array([0.5, 0.25]), FLAT, AWG, guard=GUARD)
        assert np.allclose(drive.slice_values * 255, np.round(drive.slice_values * 255))

    def test_rendered_values_stay_in_unit_range(self):
        rng = np.random.default_rng(4)
        drive = build_slice_drive(rng.uniform(0, 1, 48), FLAT, AWG, guard=GUARD)
        assert drive.values.min() >= 0.0 and drive.values.max() <= 1.0

    def test_out_of_range_values_rejected(self):
        with pytest.raises(EncodingError):
            build_slice_drive(np.array([-0.1, 0.5]), FLAT, AWG, guard=GUARD)


class TestRenderDrive:
    def test_ideal_staircase_integral_exact(self):
        rng = np.random.default_rng(5)
        values = rng.uniform(0, 1, 401)
        drive = build_slice_drive(values, FLAT, AWG_IDEAL, guard=GUARD)
        t = np.arange(-4e-9, 4e-9, 0.7e-12)
        rendered = render_drive(drive, t)
        integral = rendered.sum() * 0.7e-12
        assert integral == pytest.approx(values.sum() * drive.slice_duration, rel=1e-9)

    def test_physical_codes_preserve_slice_areas(self):
        rng = np.random.default_rng(6)
        values = rng.uniform(0, 1, 401)
        drive = build_slice_drive(values, FLAT, AwgSpec(120e9, 45e9, None), guard=GUARD)
        codes = dac_codes(drive)
        dt_awg = 1.0 / drive.awg.sample_rate
        assert codes.sum() * dt_awg == pytest.approx(
            drive.slice_values.sum() * drive.slice_duration, rel=1e-9
        )

    def test_render_grid_independent(self):
        values = np.linspace(0.1, 0.9, 24)
        drive = build_slice_drive(values, FLAT, AwgSpec(120e9, 45e9, None), guard=GUARD)
        for step in (1e-12, 0.25e-12):
            t = np.arange(-3.2e-9, 3.2e-9, step)
            total = render_drive(drive, t).sum() * step
            assert total == pytest.approx(
                values.sum() * drive.slice_duration, rel=1e-3
            )


class TestDrivesForSlot:
    def _layer(self):
        rng = np.random.default_rng(7)
        w = rng.normal(size=(3, 24))
        return QuantizedLayer.from_weights(w, float(np.abs(w).max()), 8)

    def test_reference_slot_is_all_ones(self):
        layer = self._layer()
        plan = schedule_layer(layer, 24)
        ref = plan.reference_slots()[0]
        d_row, _ = drives_for_slot(ref, layer, np.full(24, 0.5), FLAT, AWG, GUARD)
        assert np.all(d_row.slice_values == 1.0)

    def test_zero_row_gives_zero_drive(self):
        layer = QuantizedLayer.from_weights(
            np.vstack([np.zeros(24), np.ones(24)]), 1.0, 8
        )
        plan = schedule_layer(layer, 24)
        plus, _ = plan.row_slots(0)
        d_row, _ = drives_for_slot(plus, layer, np.full(24, 0.5), FLAT, AWG, GUARD)
        assert np.all(d_row.slice_values == 0.0)

    def test_unit_row_times_unit_x(self):
        w = np.zeros((1, 24))
        w[0, 0] = 2.0
        layer = QuantizedLayer.from_weights(w, 2.0, 8)
        plan = schedule_layer(layer, 24)
        plus, _ = plan.row_slots(0)
        d_row, d_x = drives_for_slot(plus, layer, np.ones(24), FLAT, AWG, GUARD)
        product = d_row.slice_values * d_x.slice_values
        assert product[0] == pytest.approx(1.0)
        assert np.all(product[1:] == 0.0)

    def test_dimension_mismatch_rejected(self):
        layer = self._layer()
        plan = schedule_layer(layer, 24)
        with pytest.raises(EncodingError):
            drives_for_slot(plan.slots[0], layer, np.ones(7), FLAT, AWG, GUARD)

    def test_unquantized_activations_rejected(self):
        layer = self._layer()
        plan = schedule_layer(layer, 24)
        with pytest.raises(EncodingError):
            drives_for_slot(plan.slots[0], layer, np.full(24, 1.2), FLAT, AWG, GUARD)
