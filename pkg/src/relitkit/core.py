"""Shared image primitives: frame validation, color conversion, Gaussian
filtering, bilinear resampling and 2D frequency spectra.

Conventions used throughout the package:
  * Frame: float64 array of shape (H, W, 3), RGB, values in [0, 1].
  * GrayFrame: float64 array of shape (H, W), values in [0, 1].
  * 8-bit quantization only happens at file I/O and inside the brightness
    metrics; all processing runs on the float working form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

# Rec.601 luma weights, applied to the gamma-encoded working form.
REC601_WEIGHTS = np.array([0.299, 0.587, 0.114])

# sRGB -> XYZ under D65. The reference white is taken as the row sums of
# this matrix so that pure white maps to L = 100 exactly.
_SRGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
_XYZ_TO_SRGB = np.linalg.inv(_SRGB_TO_XYZ)
_WHITE = _SRGB_TO_XYZ.sum(axis=1)

_LAB_DELTA = 6.0 / 29.0


def ensure_frame(frame) -> np.ndarray:
    """Validate an RGB frame: shape (H, W, 3), finite, values in [0, 1]."""
    arr = np.asarray(frame, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"expected frame of shape (H, W, 3), got {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"frame has empty dimensions: {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("frame contains non-finite values")
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise ValueError("frame values must lie in [0, 1]")
    return arr


def ensure_gray(plane) -> np.ndarray:
    """Validate a grayscale plane: shape (H, W), finite, values in [0, 1]."""
    arr = np.asarray(plane, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"expected grayscale plane of shape (H, W), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("plane contains non-finite values")
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise ValueError("plane values must lie in [0, 1]")
    return arr


def to_grayscale(frame) -> np.ndarray:
    """Rec.601 weighted sum of the RGB channels (0.299, 0.587, 0.114)."""
    arr = ensure_frame(frame)
    return np.clip(arr @ REC601_WEIGHTS, 0.0, 1.0)


def to_uint8(frame) -> np.ndarray:
    """Quantize working-form values to 8-bit with round-half-away rounding."""
    arr = np.clip(np.asarray(frame, dtype=np.float64), 0.0, 1.0)
    return np.rint(arr * 255.0).astype(np.uint8)


def from_uint8(arr) -> np.ndarray:
    """Promote 8-bit storage values to the float working form."""
    return np.asarray(arr, dtype=np.float64) / 255.0


# ---------------------------------------------------------------------------
# CIELAB conversion (sRGB companding, D65 white)
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class LabFrame:
    """Planar CIELAB image. L lies in [0, 100] for in-gamut RGB inputs."""

    L: np.ndarray
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        if self.L.shape != self.a.shape or self.L.shape != self.b.shape:
            raise ValueError("LAB planes must share one shape")

    @property
    def height(self) -> int:
        return self.L.shape[0]

    @property
    def width(self) -> int:
        return self.L.shape[1]


def _srgb_to_linear(c):
    return np.where(c <= 0.04045, c / 12.92, ((c + 0.055) / 1.055) ** 2.4)


def _linear_to_srgb(c):
    c = np.maximum(c, 0.0)
    return np.where(c <= 0.0031308, 12.92 * c, 1.055 * c ** (1.0 / 2.4) - 0.055)


def _lab_f(t):
    return np.where(t > _LAB_DELTA**3, np.cbrt(t), t / (3.0 * _LAB_DELTA**2) + 4.0 / 29.0)


def _lab_finv(u):
    return np.where(u > _LAB_DELTA, u**3, 3.0 * _LAB_DELTA**2 * (u - 4.0 / 29.0))


def rgb_to_lab(frame) -> LabFrame:
    """Convert a working-form RGB frame to planar CIELAB."""
    arr = ensure_frame(frame)
    xyz = _srgb_to_linear(arr) @ _SRGB_TO_XYZ.T / _WHITE
    fx = _lab_f(xyz[..., 0])
    fy = _lab_f(xyz[..., 1])
    fz = _lab_f(xyz[..., 2])
    return LabFrame(L=116.0 * fy - 16.0, a=500.0 * (fx - fy), b=200.0 * (fy - fz))


def lab_to_rgb(lab: LabFrame) -> np.ndarray:
    """Convert planar CIELAB back to RGB, clamping out-of-gamut values."""
    fy = (lab.L + 16.0) / 116.0
    fx = fy + lab.a / 500.0
    fz = fy - lab.b / 200.0
    xyz = np.stack([_lab_finv(fx), _lab_finv(fy), _lab_finv(fz)], axis=-1) * _WHITE
    rgb = _linear_to_srgb(xyz @ _XYZ_TO_SRGB.T)
    return np.clip(rgb, 0.0, 1.0)


# ---------------------------------------------------------------------------
# Gaussian filtering
# ---------------------------------------------------------------------------


@dataclass(eq=False, frozen=True)
class GaussianKernel:
    """Separable Gaussian taps. radius >= ceil(3 * sigma), taps sum to 1."""

    sigma: float
    radius: int
    taps: np.ndarray = field(repr=False)

    @classmethod
    def from_sigma(cls, sigma: float, radius: int | None = None) -> "GaussianKernel":
        if sigma <= 0.0:
            raise ValueError(f"sigma must be positive, got {sigma}")
        r = max(math.ceil(3.0 * sigma), 1) if radius is None else int(radius)
        if r < max(math.ceil(3.0 * sigma), 1):
            raise ValueError(f"radius {r} too small for sigma {sigma}")
        x = np.arange(-r, r + 1, dtype=np.float64)
        taps = np.exp(-(x**2) / (2.0 * sigma**2))
        taps /= taps.sum()
        return cls(sigma=float(sigma), radius=r, taps=taps)

    def taps_2d(self) -> np.ndarray:
        return np.outer(self.taps, self.taps)


def gaussian_blur(plane, kernel: GaussianKernel) -> np.ndarray:
    """Separable Gaussian convolution with edge-replicate boundary handling."""
    arr = np.asarray(plane, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"gaussian_blur expects a 2D plane, got shape {arr.shape}")
    out = ndimage.correlate1d(arr, kernel.taps, axis=0, mode="nearest")
    return ndimage.correlate1d(out, kernel.taps, axis=1, mode="nearest")


def gaussian_blur_sigma(plane, sigma: float) -> np.ndarray:
    return gaussian_blur(plane, GaussianKernel.from_sigma(sigma))


# ---------------------------------------------------------------------------
# Resampling
# ---------------------------------------------------------------------------


def resize_bilinear(image, new_width: int, new_height: int) -> np.ndarray:
    """Bilinear resample with pixel-center alignment and edge replication.

    Accepts (H, W) planes or (H, W, C) stacks. Identity dimensions return
    the input values exactly; outputs never leave the input value range.
    """
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim not in (2, 3):
        raise ValueError(f"resize expects 2D or 3D input, got shape {arr.shape}")
    if new_width < 1 or new_height < 1:
        raise ValueError(f"target dimensions must be positive, got {new_width}x{new_height}")
    h, w = arr.shape[:2]
    xs = (np.arange(new_width, dtype=np.float64) + 0.5) * (w / new_width) - 0.5
    ys = (np.arange(new_height, dtype=np.float64) + 0.5) * (h / new_height) - 0.5
    x0f = np.floor(xs)
    y0f = np.floor(ys)
    fx = xs - x0f
    fy = ys - y0f
    # neighbor indices clamp independently so off-frame samples replicate
    x0i = x0f.astype(np.int64)
    y0i = y0f.astype(np.int64)
    x0 = np.clip(x0i, 0, w - 1)
    x1 = np.clip(x0i + 1, 0, w - 1)
    y0 = np.clip(y0i, 0, h - 1)
    y1 = np.clip(y0i + 1, 0, h - 1)

    wx = fx[None, :]
    wy = fy[:, None]
    if arr.ndim == 3:
        wx = wx[..., None]
        wy = wy[..., None]
    rows0 = y0[:, None]
    rows1 = y1[:, None]
    cols0 = x0[None, :]
    cols1 = x1[None, :]
    top = (1.0 - wx) * arr[rows0, cols0] + wx * arr[rows0, cols1]
    bottom = (1.0 - wx) * arr[rows1, cols0] + wx * arr[rows1, cols1]
    return (1.0 - wy) * top + wy * bottom


# ---------------------------------------------------------------------------
# Frequency-domain diagnostics
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class Spectrum:
    """DC-centered 2D magnitude spectrum with its log companding."""

    magnitude: np.ndarray
    log_magnitude: np.ndarray


def magnitude_spectrum(gray) -> Spectrum:
    """DFT magnitude of a grayscale plane, shifted so DC sits at the center."""
    arr = ensure_gray(gray)
    mag = np.abs(np.fft.fftshift(np.fft.fft2(arr)))
    return Spectrum(magnitude=mag, log_magnitude=np.log1p(mag))


def _high_freq_mask(shape, cutoff_fraction: float) -> np.ndarray:
    h, w = shape
    fy = (np.arange(h) - h // 2) / (h / 2.0)
    fx = (np.arange(w) - w // 2) / (w / 2.0)
    radius = np.sqrt(fy[:, None] ** 2 + fx[None, :] ** 2)
    return radius > cutoff_fraction


def high_freq_energy_ratio(spec_a: Spectrum, spec_b: Spectrum, cutoff_fraction: float) -> float:
    """Ratio of summed magnitudes outside the centered low-frequency disc.

    The disc radius is cutoff_fraction of Nyquist on each axis. Raises on
    mismatched spectra and on a zero high-frequency denominator.
    """
    if not 0.0 < cutoff_fraction < 1.0:
        raise ValueError(f"cutoff_fraction must lie in (0, 1), got {cutoff_fraction}")
    if spec_a.magnitude.shape != spec_b.magnitude.shape:
        raise ValueError(
            f"spectrum dimensions differ: {spec_a.magnitude.shape} vs {spec_b.magnitude.shape}"
        )
    mask = _high_freq_mask(spec_a.magnitude.shape, cutoff_fraction)
    denom = float(spec_b.magnitude[mask].sum())
    if denom == 0.0:
        raise ZeroDivisionError("reference spectrum has no high-frequency mass")
    return float(spec_a.magnitude[mask].sum()) / denom
