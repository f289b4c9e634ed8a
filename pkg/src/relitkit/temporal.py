"""Temporal lighting stabilization for video sequences.

Each frame is blended with a motion-compensated reference built from a
short history of previous results. The blend weight adapts per pixel:
static regions lean heavily on the history to suppress flicker, while
fast-moving regions fall back toward the incoming frame to avoid trails.
A joint bilateral filter then cleans residual spatial noise.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .core import ensure_frame, to_grayscale
from .flow import FlowField, FlowParams, estimate_flow, flow_magnitude, warp_frame


@dataclass
class SmootherConfig:
    """Temporal blend weights and history window."""

    alpha_base: float = 0.9
    adaptive: bool = True
    motion_scale: float = 4.0
    alpha_floor: float = 0.1
    window_size: int = 5
    window_decay: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.alpha_floor <= 1.0:
            raise ValueError(f"alpha_floor must lie in [0, 1], got {self.alpha_floor}")
        if not 0.0 <= self.alpha_base <= 1.0:
            raise ValueError(f"alpha_base must lie in [0, 1], got {self.alpha_base}")
        if self.alpha_floor > self.alpha_base:
            raise ValueError(
                f"alpha_floor {self.alpha_floor} exceeds alpha_base {self.alpha_base}"
            )
        if self.motion_scale <= 0.0:
            raise ValueError(f"motion_scale must be positive, got {self.motion_scale}")
        if self.window_size < 1:
            raise ValueError(f"window_size must be >= 1, got {self.window_size}")
        if not 0.0 < self.window_decay <= 1.0:
            raise ValueError(f"window_decay must lie in (0, 1], got {self.window_decay}")


@dataclass
class BilateralParams:
    """Spatial/range widths for the edge-preserving filter.

    The kernel radius must cover the spatial Gaussian: radius >= 2 * sigma_spatial.
    """

    sigma_spatial: float = 3.0
    sigma_range: float = 0.08
    radius: int = 6

    def __post_init__(self):
        if self.sigma_spatial <= 0.0:
            raise ValueError(f"sigma_spatial must be positive, got {self.sigma_spatial}")
        if self.sigma_range <= 0.0:
            raise ValueError(f"sigma_range must be positive, got {self.sigma_range}")
        if self.radius < 1:
            raise ValueError(f"radius must be >= 1, got {self.radius}")
        if self.radius < math.ceil(2.0 * self.sigma_spatial):
            raise ValueError(
                f"radius {self.radius} too small for sigma_spatial {self.sigma_spatial}"
            )


def adaptive_alpha(alpha_base: float, motion_mag: np.ndarray, cfg: SmootherConfig) -> np.ndarray:
    """Per-pixel blend weight, halving for every motion_scale px of motion.

    alpha(p) = floor + (base - floor) * 2^(-|motion(p)| / scale); with
    cfg.adaptive off the map is constant at alpha_base.
    """
    if not 0.0 <= alpha_base <= 1.0:
        raise ValueError(f"alpha_base must lie in [0, 1], got {alpha_base}")
    if alpha_base < cfg.alpha_floor:
        raise ValueError(f"alpha_base {alpha_base} below alpha_floor {cfg.alpha_floor}")
    mag = np.asarray(motion_mag, dtype=np.float64)
    if not cfg.adaptive:
        return np.full_like(mag, alpha_base)
    return cfg.alpha_floor + (alpha_base - cfg.alpha_floor) * np.exp2(-mag / cfg.motion_scale)


def temporal_blend(warped_reference, current, alpha_map) -> np.ndarray:
    """Per-pixel convex combination alpha * reference + (1 - alpha) * current."""
    ref = ensure_frame(warped_reference)
    cur = ensure_frame(current)
    alpha = np.asarray(alpha_map, dtype=np.float64)
    if ref.shape != cur.shape:
        raise ValueError(f"frame dimensions differ: {ref.shape} vs {cur.shape}")
    if alpha.shape != ref.shape[:2]:
        raise ValueError(f"alpha map shape {alpha.shape} does not match frames {ref.shape[:2]}")
    if alpha.min() < 0.0 or alpha.max() > 1.0:
        raise ValueError("alpha map values must lie in [0, 1]")
    a = alpha[..., None]
    return a * ref + (1.0 - a) * cur


def history_reference(frames, cfg: SmootherConfig) -> np.ndarray:
    """Weighted average of aligned history frames, most recent first.

    Weights fall geometrically with age (window_decay^k) and are normalized.
    """
    if len(frames) == 0:
        raise ValueError("history is empty")
    weights = np.array([cfg.window_decay**k for k in range(len(frames))])
    weights /= weights.sum()
    out = np.zeros_like(np.asarray(frames[0], dtype=np.float64))
    for w, frame in zip(weights, frames):
        out += w * np.asarray(frame, dtype=np.float64)
    return out


def bilateral_filter(frame, params: BilateralParams | None = None) -> np.ndarray:
    """Edge-preserving smoothing with range weights on grayscale.

    All three channels share the weight field computed from the grayscale
    working form, keeping chroma aligned with luma edges.
    """
    params = params or BilateralParams()
    arr = ensure_frame(frame)
    gray = to_grayscale(arr)
    r = params.radius
    h, w = gray.shape
    pg = np.pad(gray, r, mode="edge")
    pc = np.pad(arr, ((r, r), (r, r), (0, 0)), mode="edge")
    inv_range = 1.0 / (2.0 * params.sigma_range**2)
    inv_space = 1.0 / (2.0 * params.sigma_spatial**2)
    num = np.zeros_like(arr)
    den = np.zeros_like(gray)
    for dy in range(-r, r + 1):
        for dx in range(-r, r + 1):
            ws = math.exp(-(dy * dy + dx * dx) * inv_space)
            g = pg[r + dy : r + dy + h, r + dx : r + dx + w]
            wgt = ws * np.exp(-((g - gray) ** 2) * inv_range)
            den += wgt
            num += wgt[..., None] * pc[r + dy : r + dy + h, r + dx : r + dx + w]
    return num / den[..., None]


def smooth_sequence(frames, flow_params: FlowParams | None = None,
                    cfg: SmootherConfig | None = None,
                    bilateral: BilateralParams | None = None,
                    flows: list[FlowField] | None = None) -> list[np.ndarray]:
    """Stabilize a sequence frame by frame.

    Frame 0 passes through the bilateral filter only. Every later frame
    warps the stored history into its coordinates using prev->curr flow,
    blends with the history reference under the adaptive alpha map, then
    applies the bilateral filter. The history stores post-blend,
    pre-bilateral frames so the spatial filter never feeds back.

    Precomputed `flows` (N - 1 fields, as from estimate_sequence_flows)
    skip re-estimation, which parameter sweeps over one input reuse.
    """
    cfg = cfg or SmootherConfig()
    flow_params = flow_params or FlowParams()
    bilateral = bilateral or BilateralParams()
    if len(frames) == 0:
        raise ValueError("empty sequence")
    frames = [ensure_frame(f) for f in frames]
    shape = frames[0].shape
    for i, f in enumerate(frames):
        if f.shape != shape:
            raise ValueError(f"frame {i} has shape {f.shape}, expected {shape}")
    if flows is not None and len(flows) != len(frames) - 1:
        raise ValueError(f"expected {len(frames) - 1} flow fields, got {len(flows)}")

    history: deque = deque(maxlen=cfg.window_size)
    history.appendleft(frames[0])
    outputs = [bilateral_filter(frames[0], bilateral)]
    prev_gray = to_grayscale(frames[0])
    for t in range(1, len(frames)):
        curr = frames[t]
        curr_gray = to_grayscale(curr)
        fl = flows[t - 1] if flows is not None else estimate_flow(prev_gray, curr_gray, flow_params)
        aligned = deque((warp_frame(f, fl) for f in history), maxlen=cfg.window_size)
        reference = np.clip(history_reference(list(aligned), cfg), 0.0, 1.0)
        alpha_map = adaptive_alpha(cfg.alpha_base, flow_magnitude(fl), cfg)
        blended = temporal_blend(reference, curr, alpha_map)
        aligned.appendleft(blended)
        history = aligned
        outputs.append(bilateral_filter(blended, bilateral))
        prev_gray = curr_gray
    return outputs
