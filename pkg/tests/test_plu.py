"""Piecewise-linear table quality: knot exactness, refinement, asymptotes,
and the binary table format."""

import math

import numpy as np
import pytest

from xamba import plu
from xamba.errors import FormatError, NumericError, ParameterError
from xamba.tensor import Tensor, activation

# Regression constants measured on the 10^6-point oracle grid for the
# shipped S=64 tables over [-8, 8].
SILU_S64_MAX_ERR = 3.870924e-03
SOFTPLUS_S64_MAX_ERR = 1.944299e-03


def exact(func, xs, beta=1.0):
    t = Tensor(np.asarray(xs, dtype=np.float32).reshape(1, -1))
    return activation(t, func, beta).flat().astype(np.float64)


class TestFit:
    def test_two_segment_silu_passes_through_origin(self):
        t = plu.fit_uniform("silu", 1.0, -8, 8, 2)
        assert t.breakpoints.tolist() == [-8.0, 0.0, 8.0]
        assert abs(plu.eval(t, 0.0)) <= 1e-6
        # interpolation: exact at every knot
        for x in (-8.0, 0.0, 8.0):
            assert plu.eval(t, x) == pytest.approx(float(exact("silu", [x])[0]), abs=1e-6)

    def test_softplus_value_at_zero_within_table_error(self):
        for segments in (4, 16, 64):
            t = plu.fit_uniform("softplus", 1.0, -8, 8, segments)
            err, _ = plu.max_error(t, 200_001)
            assert abs(plu.eval(t, 0.0) - math.log(2)) <= err + 1e-9

    def test_parameter_validation(self):
        with pytest.raises(ParameterError):
            plu.fit_uniform("silu", 1.0, 8, -8, 4)
        with pytest.raises(ParameterError):
            plu.fit_uniform("silu", 1.0, -8, 8, 0)
        with pytest.raises(ParameterError):
            plu.fit_uniform("silu", -1.0, -8, 8, 4)
        with pytest.raises(ParameterError):
            plu.fit_uniform("tanh", 1.0, -8, 8, 4)

    def test_continuity_at_interior_breakpoints(self):
        for func in plu.PLU_FUNCS:
            t = plu.fit_uniform(func, 1.0, -8, 8, 32)
            for xk in t.breakpoints[1:-1].astype(np.float64):
                left = plu.eval(t, xk - 1e-6)
                right = plu.eval(t, xk + 1e-6)
                assert abs(left - right) <= 1e-5

    def test_knot_exactness(self):
        for func in plu.PLU_FUNCS:
            t = plu.fit_uniform(func, 1.0, -8, 8, 64)
            ev = plu.eval(t, t.breakpoints.astype(np.float64))
            ex = exact(func, t.breakpoints)
            assert np.max(np.abs(ev - ex)) <= 1e-6


class TestEval:
    def test_asymptotes_far_out(self):
        t = plu.fit_uniform("silu", 1.0, -8, 8, 64)
        assert plu.eval(t, 100.0) == 100.0
        assert plu.eval(t, -100.0) == 0.0

    def test_tie_resolves_to_right_segment(self):
        t = plu.fit_uniform("silu", 1.0, -8, 8, 4)
        k = 2  # breakpoint 0.0; right segment has index 2
        x = float(t.breakpoints[k])
        expect = float(t.slopes[k]) * x + float(t.intercepts[k])
        assert plu.eval(t, x) == pytest.approx(expect, abs=1e-9)

    def test_non_finite_rejected(self):
        t = plu.fit_uniform("silu", 1.0, -8, 8, 4)
        with pytest.raises(NumericError):
            plu.eval(t, float("nan"))
        with pytest.raises(NumericError):
            plu.eval(t, np.array([1.0, float("inf")]))

    def test_asymptote_error_beyond_twelve(self):
        xs = np.concatenate([np.linspace(-20, -12, 2001), np.linspace(12, 20, 2001)])
        for func in plu.PLU_FUNCS:
            t = plu.fit_uniform(func, 1.0, -8, 8, 64)
            err = np.abs(plu.eval(t, xs) - exact(func, xs))
            assert err.max() <= 2e-3


class TestMaxError:
    def test_refinement_nonincreasing(self):
        for func in plu.PLU_FUNCS:
            errs = []
            for segments in (4, 8, 16, 32, 64):
                t = plu.fit_uniform(func, 1.0, -8, 8, segments)
                errs.append(plu.max_error(t, 200_001)[0])
            assert all(b <= a for a, b in zip(errs, errs[1:]))

    def test_single_chord_is_bad(self):
        t = plu.fit_uniform("silu", 1.0, -8, 8, 1)
        err, _ = plu.max_error(t, 100_001)
        assert err > 0.5

    def test_shipped_quality_regression(self):
        silu_err, _ = plu.max_error(plu.fit_uniform("silu", 1.0, -8, 8, 64), 1_000_000)
        soft_err, _ = plu.max_error(plu.fit_uniform("softplus", 1.0, -8, 8, 64), 1_000_000)
        assert silu_err <= 1e-2 and soft_err <= 1e-2
        assert silu_err == pytest.approx(SILU_S64_MAX_ERR, abs=5e-6)
        assert soft_err == pytest.approx(SOFTPLUS_S64_MAX_ERR, abs=5e-6)

    def test_grid_validation(self):
        t = plu.fit_uniform("silu", 1.0, -8, 8, 4)
        with pytest.raises(ParameterError):
            plu.max_error(t, 1)


class TestSerialization:
    def test_roundtrip_field_identical(self):
        for func in plu.PLU_FUNCS:
            t = plu.fit_uniform(func, 1.0, -6, 6, 48)
            back = plu.deserialize(plu.serialize(t))
            assert back.func == t.func
            assert back.beta == t.beta
            assert np.array_equal(back.breakpoints, t.breakpoints)
            assert np.array_equal(back.slopes, t.slopes)
            assert np.array_equal(back.intercepts, t.intercepts)
            assert back.left_ext == t.left_ext and back.right_ext == t.right_ext

    def test_size_formula(self):
        for segments in (1, 7, 64):
            t = plu.fit_uniform("silu", 1.0, -8, 8, segments)
            raw = plu.serialize(t)
            assert len(raw) == 16 + 4 * (segments + 1 + 2 * segments + 4)

    def test_truncated_and_bad_magic(self):
        t = plu.fit_uniform("softplus", 2.0, -8, 8, 8)
        raw = plu.serialize(t)
        with pytest.raises(FormatError):
            plu.deserialize(raw[:-4])
        with pytest.raises(FormatError):
            plu.deserialize(b"XLUT" + raw[4:])

    def test_monotonicity_enforced_on_decode(self):
        t = plu.fit_uniform("silu", 1.0, -8, 8, 4)
        raw = bytearray(plu.serialize(t))
        # swap the first two breakpoints
        raw[16:20], raw[20:24] = raw[20:24], raw[16:20]
        with pytest.raises(FormatError):
            plu.deserialize(bytes(raw))

    def test_file_roundtrip(self, tmp_path):
        t = plu.fit_uniform("silu", 1.0, -8, 8, 16)
        path = tmp_path / "t.clut"
        plu.save_table(path, t)
        assert plu.load_table(path).segments == 16
