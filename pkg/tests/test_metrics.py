"""Stability metrics, SSIM, histograms and rank correlation.

SSIM is checked against a naive per-window brute-force oracle; stability
scores against frozen closed forms computed from the definition.
"""

import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from relitkit import metrics
from relitkit.metrics import (
    SsimParams,
    StabilityParams,
    TimeSeries,
    bright_signals,
    brightness_histogram,
    derivative_series,
    light_stability_score,
    smoothness_score,
    spearman_rho,
    ssim,
    ssim_video,
    tau_sensitivity,
    tau_sweep_table,
)

# ---------------------------------------------------------------------------
# oracles
# ---------------------------------------------------------------------------


def naive_ssim(a, b, window=11, sigma=1.5, dynamic_range=1.0):
    """Per-window brute-force SSIM, independent of the library internals."""
    weights = np.array([0.299, 0.587, 0.114])
    ga = np.clip(np.asarray(a, float) @ weights, 0, 1)
    gb = np.clip(np.asarray(b, float) @ weights, 0, 1)
    r = window // 2
    x = np.arange(-r, r + 1, dtype=float)
    taps = np.exp(-(x**2) / (2 * sigma**2))
    taps /= taps.sum()
    w2 = np.outer(taps, taps)
    c1 = (0.01 * dynamic_range) ** 2
    c2 = (0.03 * dynamic_range) ** 2
    c3 = c2 / 2
    h, w = ga.shape
    qs = []
    for y in range(r, h - r):
        for x_ in range(r, w - r):
            wa = ga[y - r : y + r + 1, x_ - r : x_ + r + 1]
            wb = gb[y - r : y + r + 1, x_ - r : x_ + r + 1]
            mu1 = float((w2 * wa).sum())
            mu2 = float((w2 * wb).sum())
            var1 = float((w2 * wa * wa).sum()) - mu1 * mu1
            var2 = float((w2 * wb * wb).sum()) - mu2 * mu2
            cov = float((w2 * wa * wb).sum()) - mu1 * mu2
            s1 = math.sqrt(max(var1, 0.0))
            s2 = math.sqrt(max(var2, 0.0))
            lum = (2 * mu1 * mu2 + c1) / (mu1 * mu1 + mu2 * mu2 + c1)
            con = (2 * s1 * s2 + c2) / (var1 + var2 + c2)
            struct = (cov + c3) / (s1 * s2 + c3)
            qs.append(lum * con * struct)
    return float(np.mean(qs))


def flat_gray(value_8bit, shape=(8, 10)):
    return np.full(shape, value_8bit / 255.0)


def flat_rgb(value, shape=(16, 16)):
    return np.full(shape + (3,), value)


# ---------------------------------------------------------------------------
# bright signals and derivatives
# ---------------------------------------------------------------------------


class TestBrightSignals:
    def test_all_black(self):
        i_t, c_t = bright_signals([flat_gray(0)] * 3, 125)
        assert np.array_equal(i_t.values, [0.0, 0.0, 0.0])
        assert np.array_equal(c_t.values, [0.0, 0.0, 0.0])

    def test_all_white(self):
        i_t, c_t = bright_signals([flat_gray(255, (4, 5))] * 2, 125)
        assert np.array_equal(i_t.values, [255.0, 255.0])
        assert np.array_equal(c_t.values, [20.0, 20.0])

    def test_half_bright(self):
        frame = np.zeros((4, 4))
        frame[:2] = 200 / 255.0
        frame[2:] = 50 / 255.0
        i_t, c_t = bright_signals([frame], 125)
        assert i_t.values[0] == 200.0
        assert c_t.values[0] == 8.0

    def test_threshold_inclusive(self):
        i_t, c_t = bright_signals([flat_gray(125)], 125)
        assert c_t.values[0] == 80.0
        assert i_t.values[0] == 125.0

    def test_empty_sequence_rejected(self):
        with pytest.raises(ValueError):
            bright_signals([], 125)


class TestDerivative:
    def test_first_differences(self):
        out = derivative_series(TimeSeries(np.array([0.0, 1.0, 3.0]), "I_t"))
        assert np.array_equal(out.values, [1.0, 2.0])
        assert out.label == "dI_t"

    def test_constant_gives_zero(self):
        out = derivative_series(TimeSeries(np.full(5, 7.0)))
        assert np.array_equal(out.values, np.zeros(4))

    def test_too_short(self):
        with pytest.raises(ValueError):
            derivative_series(TimeSeries(np.array([1.0])))


# ---------------------------------------------------------------------------
# smoothness and the composite score
# ---------------------------------------------------------------------------


class TestSmoothness:
    def test_constant_scores_one(self):
        score, u = smoothness_score(TimeSeries(np.full(10, 3.3)), 20.0)
        assert score == 1.0
        assert u == 0.0

    def test_alternating_closed_form(self):
        series = TimeSeries(np.array([0.0, 1.0] * 8))
        score, u = smoothness_score(series, 20.0)
        assert u == 1.0
        assert abs(score - math.exp(-20.0)) < 1e-12

    def test_ramp_closed_form(self):
        score, u = smoothness_score(TimeSeries(np.arange(21.0)), 20.0)
        assert abs(u - 0.05) < 1e-15
        assert abs(score - math.exp(-1.0)) < 1e-9

    def test_rejects_short_series(self):
        with pytest.raises(ValueError):
            smoothness_score(TimeSeries(np.array([1.0])), 20.0)

    def test_rejects_bad_k(self):
        with pytest.raises(ValueError):
            smoothness_score(TimeSeries(np.arange(4.0)), 0.0)

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 2**20), k=st.floats(0.5, 40.0))
    def test_score_in_unit_interval(self, seed, k):
        values = np.random.default_rng(seed).random(12)
        score, u = smoothness_score(TimeSeries(values), k)
        assert 0.0 < score <= 1.0
        assert (score == 1.0) == (u == 0.0)

    @settings(max_examples=30, deadline=None)
    @given(
        seed=st.integers(0, 2**20),
        c=st.floats(0.25, 4.0),
        d=st.floats(-10.0, 10.0),
        flip=st.booleans(),
    )
    def test_affine_invariance(self, seed, c, d, flip):
        values = np.random.default_rng(seed).random(10)
        if flip:
            c = -c
        base, _ = smoothness_score(TimeSeries(values), 20.0)
        scaled, _ = smoothness_score(TimeSeries(c * values + d), 20.0)
        assert scaled == pytest.approx(base, rel=1e-9)

    def test_shuffling_a_ramp_lowers_the_score(self):
        ramp = np.arange(16.0)
        shuffled = ramp.copy()
        np.random.default_rng(7).shuffle(shuffled)
        s_ramp, _ = smoothness_score(TimeSeries(ramp), 20.0)
        s_shuf, _ = smoothness_score(TimeSeries(shuffled), 20.0)
        assert s_shuf < s_ramp


class TestStabilityScore:
    def test_composition_exact(self, rng):
        frames = [rng.random((8, 8)) for _ in range(6)]
        report = light_stability_score(frames)
        assert report.s_ls == (report.s_i + report.s_c + report.s_di) / 3.0

    def test_constant_video_scores_one(self):
        report = light_stability_score([flat_gray(200)] * 5)
        assert report.s_ls == 1.0
        assert (report.s_i, report.s_c, report.s_di) == (1.0, 1.0, 1.0)

    def test_toggle_closed_form(self):
        frames = [flat_gray(130) if t % 2 == 0 else flat_gray(180) for t in range(8)]
        report = light_stability_score(frames)
        assert abs(report.s_i - math.exp(-20.0)) < 1e-12
        assert report.s_c == 1.0
        assert abs(report.s_di - math.exp(-5.0)) < 1e-12
        expected = (math.exp(-20.0) + 1.0 + math.exp(-5.0)) / 3.0
        assert abs(report.s_ls - expected) < 1e-12

    def test_needs_three_frames(self):
        with pytest.raises(ValueError):
            light_stability_score([flat_gray(200)] * 2)

    def test_params_validation(self):
        with pytest.raises(ValueError):
            StabilityParams(tau=300)
        with pytest.raises(ValueError):
            StabilityParams(k_i=0)


class TestTauSensitivity:
    def test_constant_video_all_ones(self):
        result = tau_sensitivity([flat_gray(200)] * 4, metrics.DEFAULT_TAU_SWEEP)
        assert [s for _, s in result] == [1.0] * 5

    def test_stable_ranks_first_at_every_tau(self):
        stable = [flat_gray(200)] * 10
        flicker = [flat_gray(160 + (25 if t % 2 == 0 else -25)) for t in range(10)]
        scores, rankings = tau_sweep_table(
            {"stable": stable, "flicker": flicker}, metrics.DEFAULT_TAU_SWEEP
        )
        for tau in rankings:
            assert rankings[tau][0] == "stable"
        assert all(s == 1.0 for s in scores["stable"])


# ---------------------------------------------------------------------------
# SSIM
# ---------------------------------------------------------------------------


class TestSsim:
    def test_self_similarity(self, rng):
        frame = rng.random((24, 24, 3))
        assert ssim(frame, frame) == pytest.approx(1.0, abs=1e-9)

    def test_symmetry(self, rng):
        a = rng.random((20, 20, 3))
        b = rng.random((20, 20, 3))
        assert ssim(a, b) == ssim(b, a)

    def test_matches_brute_force_oracle(self, rng):
        for _ in range(3):
            a = rng.random((32, 32, 3))
            b = rng.random((32, 32, 3))
            assert ssim(a, b) == pytest.approx(naive_ssim(a, b), abs=1e-6)

    def test_constant_shift_keeps_structure(self, rng):
        a = np.repeat(rng.random((20, 20))[..., None] * 0.8, 3, axis=2)
        b = np.clip(a + 0.1, 0, 1)
        value = ssim(a, b)
        assert value < 1.0
        assert value == pytest.approx(naive_ssim(a, b), abs=1e-6)

    def test_inverted_checkerboard_negative(self):
        board = np.indices((24, 24)).sum(axis=0) % 2
        a = np.repeat(board[..., None].astype(float), 3, axis=2)
        b = 1.0 - a
        assert ssim(a, b) < 0.0

    def test_rejects_mismatched_dims(self, rng):
        with pytest.raises(ValueError):
            ssim(rng.random((16, 16, 3)), rng.random((16, 18, 3)))

    def test_rejects_frames_below_window(self, rng):
        with pytest.raises(ValueError):
            ssim(rng.random((8, 8, 3)), rng.random((8, 8, 3)))

    def test_params_validation(self):
        with pytest.raises(ValueError):
            SsimParams(window=10)
        with pytest.raises(ValueError):
            SsimParams(window_sigma=0)

    def test_video_mean(self, rng):
        a = [rng.random((16, 16, 3)) for _ in range(3)]
        b = [rng.random((16, 16, 3)) for _ in range(3)]
        per_frame = [ssim(x, y) for x, y in zip(a, b)]
        assert ssim_video(a, b) == pytest.approx(np.mean(per_frame), abs=1e-15)
        assert ssim_video(a, a) == pytest.approx(1.0, abs=1e-9)

    def test_video_threads_match_serial(self, rng):
        a = [rng.random((16, 16, 3)) for _ in range(4)]
        b = [rng.random((16, 16, 3)) for _ in range(4)]
        assert ssim_video(a, b, threads=2) == ssim_video(a, b, threads=1)

    def test_video_length_mismatch(self, rng):
        with pytest.raises(ValueError):
            ssim_video([rng.random((16, 16, 3))], [])


# ---------------------------------------------------------------------------
# histogram
# ---------------------------------------------------------------------------


class TestHistogram:
    def test_black_video(self):
        counts = brightness_histogram([flat_gray(0, (4, 4))] * 2, 256)
        assert counts[0] == 32
        assert counts.sum() == 32

    def test_uniform_gradient(self):
        frame = np.arange(256).reshape(16, 16) / 255.0
        counts = brightness_histogram([frame], 16)
        assert np.array_equal(counts, np.full(16, 16))

    def test_conservation(self, rng):
        frames = [rng.random((12, 9)) for _ in range(4)]
        for bins in (2, 16, 256):
            assert brightness_histogram(frames, bins).sum() == 4 * 12 * 9

    def test_rejects_bad_bins(self):
        for bad in (0, 255, 257, -4):
            with pytest.raises(ValueError):
                brightness_histogram([flat_gray(0)], bad)


# ---------------------------------------------------------------------------
# rank correlation
# ---------------------------------------------------------------------------


class TestSpearman:
    def test_identical_orderings(self):
        assert spearman_rho([1, 2, 3, 4, 5], [10, 20, 30, 40, 50]) == pytest.approx(
            1.0, abs=1e-12
        )

    def test_reversed_orderings(self):
        assert spearman_rho([1, 2, 3, 4, 5], [5, 4, 3, 2, 1]) == pytest.approx(-1.0, abs=1e-12)

    def test_ties_average_ranks(self):
        # ranks of [1, 1, 2] are [1.5, 1.5, 3]; Pearson vs [1, 2, 3] = sqrt(3)/2
        assert spearman_rho([1, 1, 2], [1, 2, 3]) == pytest.approx(math.sqrt(3) / 2, abs=1e-12)

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 2**20))
    def test_monotone_transform_invariance(self, seed):
        r = np.random.default_rng(seed)
        x = r.permutation(8).astype(float)
        y = r.random(8)
        assert spearman_rho(x, y) == spearman_rho(np.exp(x), y)

    def test_rejects_constant_input(self):
        with pytest.raises(ValueError):
            spearman_rho([1, 1, 1], [1, 2, 3])

    def test_rejects_mismatched_lengths(self):
        with pytest.raises(ValueError):
            spearman_rho([1, 2], [1, 2, 3])

    def test_rejects_short_input(self):
        with pytest.raises(ValueError):
            spearman_rho([1], [2])


# ---------------------------------------------------------------------------
# report serialization
# ---------------------------------------------------------------------------


class TestReports:
    def test_report_keys(self, rng):
        frames = [rng.random((16, 16)) for _ in range(4)]
        report = light_stability_score(frames)
        d = metrics.eval_report_dict(report, 0.5, StabilityParams())
        assert set(d) == {
            "s_I", "s_C", "s_dI", "s_LS", "ssim",
            "u_norm_I", "u_norm_C", "u_norm_dI",
            "tau", "k_I", "k_C", "k_dI",
        }
        assert d["s_LS"] == report.s_ls
        assert d["tau"] == 125.0

    def test_signals_csv(self, tmp_path, rng):
        frames = [rng.random((8, 8)) for _ in range(5)]
        report = light_stability_score(frames)
        path = tmp_path / "signals.csv"
        metrics.write_signals_csv(path, report)
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["frame", "I_t", "C_t", "dI_t"]
        assert len(rows) == 6
        assert rows[-1][3] == ""
        assert float(rows[1][1]) == report.i_t.values[0]
        assert float(rows[2][3]) == report.di_t.values[1]
