import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from thztds.errors import DimensionError, FormatError
from thztds.signal import (
    C_MM_PER_PS,
    PulseTrace,
    Spectrum,
    Window,
    apply_window,
    forward_transform,
    inverse_transform,
    next_pow2,
    trace_from_csv,
    trace_to_csv,
    unwrap_phase,
)

TWO_PI = 2.0 * math.pi


def brute_force_dft(samples, n=None):
    """O(n^2) DFT oracle: non-negative bins of sum x[k] exp(-2i pi k j / n)."""
    x = np.asarray(samples, dtype=np.float64)
    if n is None:
        n = x.size
    padded = np.zeros(n)
    padded[: x.size] = x
    nf = n // 2 + 1
    out = np.zeros(nf, dtype=np.complex128)
    for j in range(nf):
        acc = 0.0 + 0.0j
        for k in range(n):
            acc += padded[k] * np.exp(-2j * np.pi * j * k / n)
        out[j] = acc
    return out


def make_trace(samples, dt=1.0, t0=0.0):
    return PulseTrace(dt=dt, t0=t0, samples=np.asarray(samples, dtype=np.float64))


class TestForwardTransform:
    def test_zero_trace_gives_zero_bins(self):
        spec = forward_transform(make_trace(np.zeros(8)))
        assert np.all(spec.bins == 0)
        assert spec.nf == 5

    def test_impulse_has_flat_spectrum(self):
        x = np.zeros(8)
        x[0] = 1.0
        spec = forward_transform(make_trace(x))
        assert np.allclose(spec.bins, 1.0 + 0.0j, atol=1e-15)

    def test_cosine_against_brute_force_dft(self):
        nt, dt = 64, 0.125
        t = np.arange(nt) * dt
        x = np.cos(2 * np.pi * 1.0 * t)  # 1 THz
        spec = forward_transform(make_trace(x, dt=dt))
        oracle = brute_force_dft(x, n=64)
        assert spec.nt == 64  # already a power of two
        np.testing.assert_allclose(spec.bins, oracle, atol=1e-10)
        k = int(np.argmax(np.abs(spec.bins)))
        assert k == 8
        assert spec.frequencies[k] == pytest.approx(1.0)
        assert abs(spec.bins[k]) == pytest.approx(nt / 2, rel=1e-12)

    def test_default_padding_to_next_pow2(self):
        spec = forward_transform(make_trace(np.ones(12)))
        assert spec.nt == 16
        assert spec.df == pytest.approx(1.0 / 16.0)

    def test_exact_length_transform(self):
        x = np.random.default_rng(0).normal(size=12)
        spec = forward_transform(make_trace(x), pad_to=12)
        np.testing.assert_allclose(spec.bins, brute_force_dft(x), atol=1e-10)

    def test_pad_to_smaller_rejected(self):
        with pytest.raises(DimensionError):
            forward_transform(make_trace(np.ones(8)), pad_to=4)

    def test_non_finite_rejected(self):
        with pytest.raises(FormatError):
            make_trace([0.0, np.nan, 1.0])

    def test_linearity(self):
        rng = np.random.default_rng(42)
        x, y = rng.normal(size=32), rng.normal(size=32)
        a, b = 2.5, -1.25
        lhs = forward_transform(make_trace(a * x + b * y)).bins
        rhs = a * forward_transform(make_trace(x)).bins + b * forward_transform(make_trace(y)).bins
        np.testing.assert_allclose(lhs, rhs, atol=1e-10)


class TestInverseTransform:
    def test_impulse_round_trip(self):
        x = np.zeros(8)
        x[0] = 1.0
        trace = make_trace(x)
        back = inverse_transform(forward_transform(trace), nt=8)
        np.testing.assert_allclose(back.samples, x, atol=1e-12)
        assert back.dt == trace.dt

    def test_random_round_trips_nt_3072(self):
        rng = np.random.default_rng(7)
        worst = 0.0
        for _ in range(100):
            x = rng.normal(size=3072)
            trace = make_trace(x, dt=0.083)
            back = inverse_transform(forward_transform(trace), nt=3072)
            worst = max(worst, np.max(np.abs(back.samples - x)))
        assert worst < 1e-10

    def test_zero_spectrum_gives_zero_trace(self):
        spec = Spectrum(df=0.125, bins=np.zeros(5, dtype=complex), nt=8)
        assert np.all(inverse_transform(spec, nt=8).samples == 0)

    def test_inconsistent_pairing_rejected(self):
        spec = forward_transform(make_trace(np.ones(8)))
        with pytest.raises(DimensionError):
            inverse_transform(spec, nt=9)
        with pytest.raises(DimensionError):
            Spectrum(df=0.1, bins=np.zeros(5, dtype=complex), nt=12)

    def test_parseval(self):
        rng = np.random.default_rng(3)
        x = rng.normal(size=300)
        spec = forward_transform(make_trace(x))  # pads to 512
        n = spec.nt
        # Hermitian completion: interior bins count twice.
        weights = np.full(spec.nf, 2.0)
        weights[0] = 1.0
        if n % 2 == 0:
            weights[-1] = 1.0
        spectral = np.sum(weights * np.abs(spec.bins) ** 2) / n
        time = np.sum(x**2)
        assert abs(spectral - time) < 1e-10 * time


class TestWindows:
    def test_rectangular_full_range_is_identity(self):
        x = np.arange(6, dtype=float)
        out = apply_window(make_trace(x), Window("rectangular", 0, 6))
        np.testing.assert_array_equal(out.samples, x)

    def test_hann_nt4_hand_values(self):
        # 0.5*(1 - cos(2*pi*k/3)) for k = 0..3
        out = apply_window(make_trace(np.ones(4)), Window("hann", 0, 4))
        np.testing.assert_allclose(out.samples, [0.0, 0.75, 0.75, 0.0], atol=1e-15)

    def test_tukey_zero_taper_is_rectangular(self):
        out = apply_window(make_trace(np.ones(8)), Window("tukey", 0, 8, taper=0.0))
        np.testing.assert_array_equal(out.samples, np.ones(8))

    def test_tukey_full_taper_is_hann(self):
        w_tukey = Window("tukey", 0, 16, taper=1.0).weights()
        w_hann = Window("hann", 0, 16).weights()
        np.testing.assert_allclose(w_tukey, w_hann, atol=1e-12)

    def test_samples_outside_range_zeroed(self):
        x = np.ones(8)
        out = apply_window(make_trace(x), Window("rectangular", 2, 5))
        np.testing.assert_array_equal(out.samples, [0, 0, 1, 1, 1, 0, 0, 0])

    def test_weights_bounded(self):
        for taper in (0.1, 0.5, 0.9):
            w = Window("tukey", 0, 33, taper=taper).weights()
            assert np.all(w >= 0) and np.all(w <= 1)

    def test_range_validation(self):
        with pytest.raises(DimensionError):
            Window("hann", 3, 3)
        with pytest.raises(DimensionError):
            apply_window(make_trace(np.ones(4)), Window("hann", 0, 5))


class TestUnwrapPhase:
    def test_no_jumps_unchanged(self):
        out = unwrap_phase([0.0, 0.1, 0.2])
        np.testing.assert_allclose(out, [0.0, 0.1, 0.2], atol=1e-15)

    def test_single_jump_correction(self):
        out = unwrap_phase([0.0, 3.0, -3.0])
        np.testing.assert_allclose(out, [0.0, 3.0, TWO_PI - 3.0], atol=1e-12)

    def test_recovers_linear_phase_after_anchor(self):
        # phi(f) = 2*pi*f*(n-1)*d/c for n = 2, d = 0.5 mm over 0.1..2.0 THz
        n, d = 2.0, 0.5
        f = np.linspace(0.1, 2.0, 96)
        phi = TWO_PI * f * (n - 1.0) * d / C_MM_PER_PS
        wrapped = np.angle(np.exp(1j * phi))
        out = unwrap_phase(wrapped, anchor="zero_dc_extrapolation", freqs=f)
        np.testing.assert_allclose(out, phi, atol=1e-9)

    def test_anchor_removes_global_branch_offset(self):
        f = np.linspace(0.5, 2.0, 64)
        phi = 9.0 * f  # extrapolates to 0 at DC
        wrapped = np.angle(np.exp(1j * phi))  # first value already wrapped
        out = unwrap_phase(wrapped, anchor="zero_dc_extrapolation", freqs=f)
        np.testing.assert_allclose(out, phi, atol=1e-9)

    def test_non_finite_rejected(self):
        with pytest.raises(FormatError):
            unwrap_phase([0.0, np.inf])

    @settings(max_examples=100, deadline=None)
    @given(st.integers(min_value=0, max_value=2**32 - 1))
    def test_unwrap_laws(self, seed):
        rng = np.random.default_rng(seed)
        wrapped = rng.uniform(-np.pi, np.pi, size=rng.integers(2, 200))
        out = unwrap_phase(wrapped)
        # mod-2pi preservation
        k = (out - wrapped) / TWO_PI
        assert np.max(np.abs(k - np.round(k))) <= 1e-9
        # jump bound
        assert np.max(np.abs(np.diff(out))) <= np.pi + 1e-9
        # idempotence
        np.testing.assert_allclose(unwrap_phase(out), out, atol=1e-12)

    def test_anchored_idempotence(self):
        rng = np.random.default_rng(5)
        wrapped = rng.uniform(-np.pi, np.pi, size=50)
        f = np.linspace(0.2, 2.0, 50)
        once = unwrap_phase(wrapped, anchor="zero_dc_extrapolation", freqs=f)
        twice = unwrap_phase(once, anchor="zero_dc_extrapolation", freqs=f)
        np.testing.assert_allclose(once, twice, atol=1e-12)


class TestTraceCsv:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(11)
        trace = make_trace(rng.normal(size=64) * 1e-6, dt=0.0830078125, t0=1.5)
        path = tmp_path / "trace.csv"
        trace_to_csv(trace, path)
        back = trace_from_csv(path)
        np.testing.assert_array_equal(back.samples, trace.samples)
        assert back.dt == pytest.approx(trace.dt, rel=1e-12)
        assert back.t0 == pytest.approx(trace.t0, rel=1e-12)

    def test_header_enforced(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("time,amp\n0,1\n1,2\n")
        with pytest.raises(FormatError):
            trace_from_csv(path)

    def test_nonuniform_time_axis_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("time_ps,amplitude\n0,1\n1,2\n3,4\n")
        with pytest.raises(FormatError):
            trace_from_csv(path)


def test_next_pow2():
    assert [next_pow2(n) for n in (1, 2, 3, 8, 9, 3072)] == [1, 2, 4, 8, 16, 4096]
