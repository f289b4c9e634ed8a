"""Lighting-stability scoring and image-quality metrics.

The stability score inspects the set of bright pixels per frame (8-bit
value >= tau): its mean intensity I_t, its size C_t, and the first
derivative dI_t. Each signal is reduced to a normalized unsteadiness
U = mean |successive difference| / peak-to-peak range and mapped through
exp(-k * U); the final score averages the three signal scores.
"""

from __future__ import annotations

import csv
import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .core import ensure_frame, ensure_gray, to_grayscale
from .parallel import parallel_map

DEFAULT_TAU_SWEEP = (105, 115, 125, 135, 145)


@dataclass(eq=False)
class TimeSeries:
    """A per-frame scalar signal."""

    values: np.ndarray
    label: str = ""

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 1:
            raise ValueError(f"time series must be 1D, got shape {self.values.shape}")

    def __len__(self):
        return len(self.values)


@dataclass
class StabilityParams:
    """Threshold and per-signal amplification for the stability score."""

    tau: float = 125.0
    k_i: float = 20.0
    k_c: float = 20.0
    k_di: float = 5.0

    def __post_init__(self):
        if not 0.0 <= self.tau <= 255.0:
            raise ValueError(f"tau must lie in [0, 255], got {self.tau}")
        for name in ("k_i", "k_c", "k_di"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")


@dataclass(eq=False)
class StabilityReport:
    """Per-signal smoothness scores and their composite."""

    s_i: float
    s_c: float
    s_di: float
    s_ls: float
    i_t: TimeSeries
    c_t: TimeSeries
    di_t: TimeSeries
    u_norm_i: float
    u_norm_c: float
    u_norm_di: float


def bright_signals(gray_frames, tau: float) -> tuple[TimeSeries, TimeSeries]:
    """Mean 8-bit intensity and count of suprathreshold pixels per frame.

    A frame with no pixel at or above tau contributes I_t = 0, C_t = 0.
    """
    if len(gray_frames) == 0:
        raise ValueError("bright_signals needs at least one frame")
    intensities = []
    counts = []
    for frame in gray_frames:
        q = np.rint(ensure_gray(frame) * 255.0)
        mask = q >= tau
        n = int(mask.sum())
        counts.append(float(n))
        intensities.append(float(q[mask].mean()) if n else 0.0)
    return (
        TimeSeries(np.array(intensities), "I_t"),
        TimeSeries(np.array(counts), "C_t"),
    )


def derivative_series(series: TimeSeries) -> TimeSeries:
    """First differences; one sample shorter than the input."""
    if len(series) < 2:
        raise ValueError("derivative needs at least two samples")
    label = f"d{series.label}" if series.label else "d"
    return TimeSeries(np.diff(series.values), label)


def smoothness_score(series: TimeSeries, k: float) -> tuple[float, float]:
    """Score exp(-k * U) with U = mean |diff| / range; returns (score, U).

    A constant series has zero range and scores exactly 1.0.
    """
    if k <= 0.0:
        raise ValueError(f"k must be positive, got {k}")
    v = series.values
    if len(v) < 2:
        raise ValueError("smoothness needs at least two samples")
    value_range = float(v.max() - v.min())
    if value_range == 0.0:
        return 1.0, 0.0
    u = float(np.abs(np.diff(v)).mean()) / value_range
    return math.exp(-k * u), u


def light_stability_score(gray_frames, params: StabilityParams | None = None) -> StabilityReport:
    """Composite stability score over a grayscale sequence (>= 3 frames)."""
    params = params or StabilityParams()
    if len(gray_frames) < 3:
        raise ValueError(f"stability score needs at least 3 frames, got {len(gray_frames)}")
    i_t, c_t = bright_signals(gray_frames, params.tau)
    di_t = derivative_series(i_t)
    s_i, u_i = smoothness_score(i_t, params.k_i)
    s_c, u_c = smoothness_score(c_t, params.k_c)
    s_di, u_di = smoothness_score(di_t, params.k_di)
    return StabilityReport(
        s_i=s_i,
        s_c=s_c,
        s_di=s_di,
        s_ls=(s_i + s_c + s_di) / 3.0,
        i_t=i_t,
        c_t=c_t,
        di_t=di_t,
        u_norm_i=u_i,
        u_norm_c=u_c,
        u_norm_di=u_di,
    )


def tau_sensitivity(gray_frames, taus, params: StabilityParams | None = None):
    """Stability score at each threshold; returns [(tau, s_ls), ...]."""
    params = params or StabilityParams()
    out = []
    for tau in taus:
        p = dataclasses.replace(params, tau=float(tau))
        out.append((float(tau), light_stability_score(gray_frames, p).s_ls))
    return out


def tau_sweep_table(named_gray_videos: dict, taus, params: StabilityParams | None = None):
    """Scores and descending rankings for several videos at each threshold.

    Returns (scores, rankings) where scores[name] is the per-tau score list
    and rankings[tau] lists names from most to least stable.
    """
    taus = [float(t) for t in taus]
    scores = {
        name: [s for _, s in tau_sensitivity(frames, taus, params)]
        for name, frames in named_gray_videos.items()
    }
    rankings = {}
    for idx, tau in enumerate(taus):
        rankings[tau] = sorted(scores, key=lambda name: -scores[name][idx])
    return scores, rankings


# ---------------------------------------------------------------------------
# SSIM
# ---------------------------------------------------------------------------


@dataclass
class SsimParams:
    """Gaussian-window SSIM constants for a given dynamic range."""

    window: int = 11
    window_sigma: float = 1.5
    dynamic_range: float = 1.0
    c1: float = field(default=0.0)
    c2: float = field(default=0.0)
    c3: float = field(default=0.0)

    def __post_init__(self):
        if self.window < 3 or self.window % 2 == 0:
            raise ValueError(f"window must be odd and >= 3, got {self.window}")
        if self.window_sigma <= 0.0:
            raise ValueError(f"window_sigma must be positive, got {self.window_sigma}")
        if self.dynamic_range <= 0.0:
            raise ValueError(f"dynamic_range must be positive, got {self.dynamic_range}")
        if not self.c1:
            self.c1 = (0.01 * self.dynamic_range) ** 2
        if not self.c2:
            self.c2 = (0.03 * self.dynamic_range) ** 2
        if not self.c3:
            self.c3 = self.c2 / 2.0

    def window_taps(self) -> np.ndarray:
        r = self.window // 2
        x = np.arange(-r, r + 1, dtype=np.float64)
        taps = np.exp(-(x**2) / (2.0 * self.window_sigma**2))
        return taps / taps.sum()


def _windowed(plane, taps):
    """Separable weighted sums at fully-interior window positions."""
    r = len(taps) // 2
    full = ndimage.correlate1d(plane, taps, axis=0, mode="constant")
    full = ndimage.correlate1d(full, taps, axis=1, mode="constant")
    return full[r:-r, r:-r]


def ssim(a, b, params: SsimParams | None = None) -> float:
    """Mean local structural similarity between two frames (grayscale).

    Uses Gaussian-weighted local statistics and the three-term product of
    luminance, contrast and structure comparisons, averaged over window
    positions that lie fully inside the frame.
    """
    params = params or SsimParams()
    ga = to_grayscale(ensure_frame(a))
    gb = to_grayscale(ensure_frame(b))
    if ga.shape != gb.shape:
        raise ValueError(f"frame dimensions differ: {ga.shape} vs {gb.shape}")
    if min(ga.shape) < params.window:
        raise ValueError(
            f"frames of shape {ga.shape} are smaller than the {params.window}px window"
        )
    taps = params.window_taps()
    mu1 = _windowed(ga, taps)
    mu2 = _windowed(gb, taps)
    var1 = _windowed(ga * ga, taps) - mu1 * mu1
    var2 = _windowed(gb * gb, taps) - mu2 * mu2
    cov = _windowed(ga * gb, taps) - mu1 * mu2
    s1 = np.sqrt(np.maximum(var1, 0.0))
    s2 = np.sqrt(np.maximum(var2, 0.0))
    lum = (2.0 * mu1 * mu2 + params.c1) / (mu1 * mu1 + mu2 * mu2 + params.c1)
    con = (2.0 * s1 * s2 + params.c2) / (var1 + var2 + params.c2)
    struct = (cov + params.c3) / (s1 * s2 + params.c3)
    return float(np.mean(lum * con * struct))


def ssim_video(a_frames, b_frames, params: SsimParams | None = None, threads: int = 1) -> float:
    """Mean per-frame SSIM over two equally long sequences."""
    if len(a_frames) != len(b_frames):
        raise ValueError(f"sequence lengths differ: {len(a_frames)} vs {len(b_frames)}")
    if len(a_frames) == 0:
        raise ValueError("ssim_video needs at least one frame pair")
    values = parallel_map(lambda pair: ssim(pair[0], pair[1], params),
                          list(zip(a_frames, b_frames)), threads)
    return float(np.mean(values))


# ---------------------------------------------------------------------------
# histogram and rank correlation
# ---------------------------------------------------------------------------


def brightness_histogram(gray_frames, bins: int = 256) -> np.ndarray:
    """Counts of 8-bit brightness values pooled over all frames.

    bins must divide 256 evenly so every bin covers the same value span.
    """
    if bins < 1 or 256 % bins != 0:
        raise ValueError(f"bins must be a divisor of 256, got {bins}")
    if len(gray_frames) == 0:
        raise ValueError("histogram needs at least one frame")
    width = 256 // bins
    counts = np.zeros(bins, dtype=np.int64)
    for frame in gray_frames:
        q = np.rint(ensure_gray(frame) * 255.0).astype(np.int64)
        counts += np.bincount(q.ravel() // width, minlength=bins)
    return counts


def _average_ranks(values: np.ndarray) -> np.ndarray:
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values), dtype=np.float64)
    sorted_vals = values[order]
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman_rho(a, b) -> float:
    """Spearman rank correlation with average ranks for ties."""
    x = np.asarray(a, dtype=np.float64)
    y = np.asarray(b, dtype=np.float64)
    if x.ndim != 1 or y.ndim != 1 or len(x) != len(y):
        raise ValueError(f"inputs must be equal-length 1D sequences, got {x.shape} and {y.shape}")
    if len(x) < 2:
        raise ValueError("rank correlation needs at least two samples")
    rx = _average_ranks(x)
    ry = _average_ranks(y)
    dx = rx - rx.mean()
    dy = ry - ry.mean()
    sx = math.sqrt(float(dx @ dx))
    sy = math.sqrt(float(dy @ dy))
    if sx == 0.0 or sy == 0.0:
        raise ValueError("rank correlation undefined for a constant sequence")
    return float(dx @ dy) / (sx * sy)


# ---------------------------------------------------------------------------
# report serialization
# ---------------------------------------------------------------------------


def eval_report_dict(stability: StabilityReport, ssim_value: float,
                     params: StabilityParams) -> dict:
    """Flat JSON-ready mapping of one evaluation run."""
    return {
        "s_I": stability.s_i,
        "s_C": stability.s_c,
        "s_dI": stability.s_di,
        "s_LS": stability.s_ls,
        "ssim": ssim_value,
        "u_norm_I": stability.u_norm_i,
        "u_norm_C": stability.u_norm_c,
        "u_norm_dI": stability.u_norm_di,
        "tau": params.tau,
        "k_I": params.k_i,
        "k_C": params.k_c,
        "k_dI": params.k_di,
    }


def write_signals_csv(path, stability: StabilityReport):
    """Per-frame signal table; the final row has no derivative sample."""
    i_vals = stability.i_t.values
    c_vals = stability.c_t.values
    di_vals = stability.di_t.values
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["frame", "I_t", "C_t", "dI_t"])
        for idx in range(len(i_vals)):
            di = repr(float(di_vals[idx])) if idx < len(di_vals) else ""
            writer.writerow([idx, repr(float(i_vals[idx])), repr(float(c_vals[idx])), di])
