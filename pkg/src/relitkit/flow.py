"""Dense optical flow from local polynomial expansion, plus backward warping.

Each frame neighborhood is fit with a quadratic polynomial under a Gaussian
weighting; displacement follows from how the linear coefficients shift
between frames, solved per pixel from window-averaged normal equations with
diagonal damping so textureless regions fall back to zero motion. A
coarse-to-fine pyramid with iterative refinement handles larger motion.

Flow convention: estimate_flow(prev, curr) returns (u, v) such that
curr(x, y) ~ prev(x - u, y - v); warp_frame(prev, flow) aligns prev to curr.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np
from scipy import ndimage

from .core import ensure_gray, resize_bilinear

FLOW_MAGIC = b"HLFL"


@dataclass
class FlowParams:
    """Pyramid and expansion settings for the flow estimator."""

    pyramid_levels: int = 3
    pyramid_scale: float = 0.5
    window_size: int = 15
    iterations: int = 3
    poly_n: int = 5
    poly_sigma: float = 1.1

    def __post_init__(self):
        if self.pyramid_levels < 1:
            raise ValueError(f"pyramid_levels must be >= 1, got {self.pyramid_levels}")
        if not 0.0 < self.pyramid_scale < 1.0:
            raise ValueError(f"pyramid_scale must lie in (0, 1), got {self.pyramid_scale}")
        if self.window_size < 3 or self.window_size % 2 == 0:
            raise ValueError(f"window_size must be odd and >= 3, got {self.window_size}")
        if self.iterations < 1:
            raise ValueError(f"iterations must be >= 1, got {self.iterations}")
        if self.poly_n < 5 or self.poly_n % 2 == 0:
            raise ValueError(f"poly_n must be odd and >= 5, got {self.poly_n}")
        if self.poly_sigma <= 0.0:
            raise ValueError(f"poly_sigma must be positive, got {self.poly_sigma}")


@dataclass(eq=False)
class FlowField:
    """Per-pixel displacement planes, x-component u and y-component v."""

    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=np.float64)
        self.v = np.asarray(self.v, dtype=np.float64)
        if self.u.ndim != 2 or self.u.shape != self.v.shape:
            raise ValueError(
                f"flow planes must be matching 2D arrays, got {self.u.shape} and {self.v.shape}"
            )
        if not (np.all(np.isfinite(self.u)) and np.all(np.isfinite(self.v))):
            raise ValueError("flow contains non-finite values")

    @property
    def height(self) -> int:
        return self.u.shape[0]

    @property
    def width(self) -> int:
        return self.u.shape[1]


def flow_magnitude(flow: FlowField) -> np.ndarray:
    """Euclidean displacement length per pixel."""
    return np.hypot(flow.u, flow.v)


# ---------------------------------------------------------------------------
# bilinear sampling / warping
# ---------------------------------------------------------------------------


def _bilinear_sample(plane: np.ndarray, xq: np.ndarray, yq: np.ndarray) -> np.ndarray:
    """Sample plane at float coordinates with edge replication."""
    h, w = plane.shape
    x0f = np.floor(xq)
    y0f = np.floor(yq)
    fx = xq - x0f
    fy = yq - y0f
    x0i = x0f.astype(np.int64)
    y0i = y0f.astype(np.int64)
    x0 = np.clip(x0i, 0, w - 1)
    x1 = np.clip(x0i + 1, 0, w - 1)
    y0 = np.clip(y0i, 0, h - 1)
    y1 = np.clip(y0i + 1, 0, h - 1)
    top = (1.0 - fx) * plane[y0, x0] + fx * plane[y0, x1]
    bottom = (1.0 - fx) * plane[y1, x0] + fx * plane[y1, x1]
    return (1.0 - fy) * top + fy * bottom


def warp_plane(plane, flow: FlowField) -> np.ndarray:
    """Backward warp: output(x, y) = plane(x - u, y - v)."""
    arr = np.asarray(plane, dtype=np.float64)
    if arr.shape != flow.u.shape:
        raise ValueError(f"plane shape {arr.shape} does not match flow {flow.u.shape}")
    ys, xs = np.mgrid[0 : arr.shape[0], 0 : arr.shape[1]].astype(np.float64)
    return _bilinear_sample(arr, xs - flow.u, ys - flow.v)


def warp_frame(frame, flow: FlowField) -> np.ndarray:
    """Backward warp of an RGB frame or a grayscale plane."""
    arr = np.asarray(frame, dtype=np.float64)
    if arr.ndim == 2:
        return warp_plane(arr, flow)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"expected (H, W) or (H, W, 3) input, got {arr.shape}")
    if arr.shape[:2] != flow.u.shape:
        raise ValueError(f"frame shape {arr.shape} does not match flow {flow.u.shape}")
    ys, xs = np.mgrid[0 : arr.shape[0], 0 : arr.shape[1]].astype(np.float64)
    xq = xs - flow.u
    yq = ys - flow.v
    return np.stack([_bilinear_sample(arr[..., c], xq, yq) for c in range(3)], axis=-1)


# ---------------------------------------------------------------------------
# polynomial expansion
# ---------------------------------------------------------------------------


class _Expansion(NamedTuple):
    axx: np.ndarray
    axy: np.ndarray
    ayy: np.ndarray
    bx: np.ndarray
    by: np.ndarray


def _expansion_inverse(n: int, sigma: float) -> np.ndarray:
    """Inverse normal-equation matrix for basis [1, x, y, x^2, y^2, xy]."""
    offs = np.arange(-n, n + 1, dtype=np.float64)
    a = np.exp(-(offs**2) / (2.0 * sigma**2))
    dy, dx = np.meshgrid(offs, offs, indexing="ij")
    w = (a[:, None] * a[None, :]).ravel()
    basis = np.stack(
        [np.ones_like(dx), dx, dy, dx * dx, dy * dy, dx * dy], axis=-1
    ).reshape(-1, 6)
    g0 = (basis * w[:, None]).T @ basis
    return np.linalg.inv(g0)


def _poly_expand(f: np.ndarray, n: int, sigma: float) -> _Expansion:
    """Quadratic coefficients A, b of the local expansion at every pixel."""
    offs = np.arange(-n, n + 1, dtype=np.float64)
    a = np.exp(-(offs**2) / (2.0 * sigma**2))
    k0, k1, k2 = a, a * offs, a * offs**2

    def col(img, taps):
        return ndimage.correlate1d(img, taps, axis=0, mode="nearest")

    def row(img, taps):
        return ndimage.correlate1d(img, taps, axis=1, mode="nearest")

    t0 = col(f, k0)
    t1 = col(f, k1)
    t2 = col(f, k2)
    moments = np.stack(
        [
            row(t0, k0),  # 1
            row(t0, k1),  # dx
            row(t1, k0),  # dy
            row(t0, k2),  # dx^2
            row(t2, k0),  # dy^2
            row(t1, k1),  # dx dy
        ],
        axis=-1,
    )
    r = moments @ _expansion_inverse(n, sigma).T
    return _Expansion(
        axx=r[..., 3], axy=r[..., 5] * 0.5, ayy=r[..., 4], bx=r[..., 1], by=r[..., 2]
    )


# ---------------------------------------------------------------------------
# displacement refinement
# ---------------------------------------------------------------------------


def _refine(e1: _Expansion, e2: _Expansion, u, v, window: int):
    """One update of the displacement field from paired expansions."""
    h, w = u.shape
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    xq = xs + u
    yq = ys + v
    axx2 = _bilinear_sample(e2.axx, xq, yq)
    axy2 = _bilinear_sample(e2.axy, xq, yq)
    ayy2 = _bilinear_sample(e2.ayy, xq, yq)
    bx2 = _bilinear_sample(e2.bx, xq, yq)
    by2 = _bilinear_sample(e2.by, xq, yq)

    axx = 0.5 * (e1.axx + axx2)
    axy = 0.5 * (e1.axy + axy2)
    ayy = 0.5 * (e1.ayy + ayy2)
    dbx = -0.5 * (bx2 - e1.bx) + axx * u + axy * v
    dby = -0.5 * (by2 - e1.by) + axy * u + ayy * v

    g11 = axx * axx + axy * axy
    g12 = axy * (axx + ayy)
    g22 = axy * axy + ayy * ayy
    h1 = axx * dbx + axy * dby
    h2 = axy * dbx + ayy * dby

    def box(p):
        return ndimage.uniform_filter(p, size=window, mode="nearest")

    g11 = box(g11)
    g12 = box(g12)
    g22 = box(g22)
    h1 = box(h1)
    h2 = box(h2)

    # diagonal damping: degenerate structure tensors give near-zero flow
    reg = 1e-6 * float(np.mean(g11 + g22)) + 1e-12
    a_ = g11 + reg
    c_ = g22 + reg
    det = a_ * c_ - g12 * g12
    return (c_ * h1 - g12 * h2) / det, (a_ * h2 - g12 * h1) / det


def _pyramid_dims(h: int, w: int, params: FlowParams) -> list[tuple[int, int]]:
    dims = [(h, w)]
    floor = max(2 * params.poly_n + 1, 9)
    for level in range(1, params.pyramid_levels):
        s = params.pyramid_scale**level
        nh, nw = round(h * s), round(w * s)
        if min(nh, nw) < floor:
            break
        dims.append((nh, nw))
    return dims


def estimate_flow(prev, curr, params: FlowParams | None = None) -> FlowField:
    """Dense displacement from prev to curr over a grayscale pair."""
    params = params or FlowParams()
    p = ensure_gray(prev)
    c = ensure_gray(curr)
    if p.shape != c.shape:
        raise ValueError(f"frame dimensions differ: {p.shape} vs {c.shape}")
    h, w = p.shape
    if min(h, w) < params.window_size:
        raise ValueError(
            f"frame of shape {p.shape} is smaller than the {params.window_size}px analysis window"
        )

    dims = _pyramid_dims(h, w, params)
    pyr_p, pyr_c = [p], [c]
    aa_sigma = 0.5 * math.sqrt(max(1.0 / params.pyramid_scale**2 - 1.0, 0.0))
    for nh, nw in dims[1:]:
        for pyr in (pyr_p, pyr_c):
            smoothed = ndimage.gaussian_filter(pyr[-1], aa_sigma, mode="nearest")
            pyr.append(resize_bilinear(smoothed, nw, nh))

    n = params.poly_n // 2
    u = np.zeros(dims[-1], dtype=np.float64)
    v = np.zeros(dims[-1], dtype=np.float64)
    for level in range(len(dims) - 1, -1, -1):
        nh, nw = dims[level]
        if u.shape != (nh, nw):
            prev_h, prev_w = u.shape
            u = resize_bilinear(u, nw, nh) * (nw / prev_w)
            v = resize_bilinear(v, nw, nh) * (nh / prev_h)
        e1 = _poly_expand(pyr_p[level], n, params.poly_sigma)
        e2 = _poly_expand(pyr_c[level], n, params.poly_sigma)
        win = min(params.window_size, min(nh, nw))
        if win % 2 == 0:
            win -= 1
        for _ in range(params.iterations):
            u, v = _refine(e1, e2, u, v, win)
    return FlowField(u=u, v=v)


def estimate_sequence_flows(frames_gray, params: FlowParams | None = None) -> list[FlowField]:
    """Flow between each consecutive grayscale pair; N frames give N-1 fields."""
    if len(frames_gray) < 2:
        raise ValueError("need at least two frames to estimate flow")
    return [
        estimate_flow(frames_gray[i], frames_gray[i + 1], params)
        for i in range(len(frames_gray) - 1)
    ]


# ---------------------------------------------------------------------------
# debug dump format
# ---------------------------------------------------------------------------


def save_flow(flow: FlowField, path):
    """Write a flow field: magic, u32 width, u32 height, then the u and v
    planes as little-endian f32 in row-major order."""
    with open(path, "wb") as fh:
        fh.write(FLOW_MAGIC)
        fh.write(struct.pack("<II", flow.width, flow.height))
        fh.write(np.ascontiguousarray(flow.u, dtype="<f4").tobytes())
        fh.write(np.ascontiguousarray(flow.v, dtype="<f4").tobytes())


def load_flow(path) -> FlowField:
    """Read a flow dump written by save_flow."""
    data = Path(path).read_bytes()
    if len(data) < 12 or data[:4] != FLOW_MAGIC:
        raise ValueError(f"{path}: not a flow dump (bad magic)")
    w, h = struct.unpack_from("<II", data, 4)
    expected = 12 + 2 * 4 * w * h
    if len(data) != expected:
        raise ValueError(f"{path}: truncated flow dump, expected {expected} bytes, got {len(data)}")
    u = np.frombuffer(data, dtype="<f4", count=w * h, offset=12).reshape(h, w)
    v = np.frombuffer(data, dtype="<f4", count=w * h, offset=12 + 4 * w * h).reshape(h, w)
    return FlowField(u=u.astype(np.float64), v=v.astype(np.float64))
