"""Lightness-guided fusion.

Three pieces share this module: a static lightness residual that anchors
luminance during iterative refinement, a progressive blend schedule that
pulls a working video toward a relit target with decaying strength, and a
LAB detail-transfer step that moves low-frequency illumination from a relit
frame onto the original while keeping the original's fine structure.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .core import (
    LabFrame,
    ensure_frame,
    gaussian_blur_sigma,
    lab_to_rgb,
    resize_bilinear,
    rgb_to_lab,
)
from .parallel import parallel_map

FUSE_MODES = ("mean_compensated", "literal")
GUIDE_MODES = ("convex", "literal")

# (frames, step index) -> refined frames of identical dimensions
Denoiser = Callable[[Sequence[np.ndarray], int], Sequence[np.ndarray]]


@dataclass(eq=False)
class LightnessResidual:
    """High-pass residual of a frame's lightness channel, in L units."""

    delta_l: np.ndarray

    def __post_init__(self) -> None:
        self.delta_l = np.asarray(self.delta_l, dtype=np.float64)
        if self.delta_l.ndim != 2:
            raise ValueError(f"delta_l must be 2D, got shape {self.delta_l.shape}")
        if not np.isfinite(self.delta_l).all():
            raise ValueError("delta_l contains non-finite values")

    @property
    def height(self) -> int:
        return self.delta_l.shape[0]

    @property
    def width(self) -> int:
        return self.delta_l.shape[1]


@dataclass(frozen=True)
class GuidanceSchedule:
    """Blend schedule for iterative refinement.

    The blend weight decays linearly from 1 at step 0 to 0 at
    ``total_steps``; ``gamma`` scales the lightness anchor and
    ``sigma_prior`` is the blur width used to build the residual.
    """

    total_steps: int = 25
    step: int = 0
    gamma: float = 0.3
    sigma_prior: float = 5.0
    mode: str = "convex"

    def __post_init__(self) -> None:
        if self.total_steps < 1:
            raise ValueError(f"total_steps must be >= 1, got {self.total_steps}")
        if not 0 <= self.step <= self.total_steps:
            raise ValueError(
                f"step must lie in [0, {self.total_steps}], got {self.step}"
            )
        if not np.isfinite(self.gamma):
            raise ValueError("gamma must be finite")
        if self.sigma_prior <= 0:
            raise ValueError(f"sigma_prior must be > 0, got {self.sigma_prior}")
        if self.mode not in GUIDE_MODES:
            raise ValueError(f"mode must be one of {GUIDE_MODES}, got {self.mode!r}")

    @property
    def lambda_t(self) -> float:
        return 1.0 - self.step / self.total_steps

    def at(self, step: int) -> "GuidanceSchedule":
        """Copy of this schedule positioned at ``step``."""
        return replace(self, step=step)


@dataclass(frozen=True)
class LabFuseConfig:
    """Detail-transfer settings.

    ``beta`` scales how much relit illumination is carried over;
    ``sigma_illum`` is the low-pass width separating illumination from
    detail. The literal mode adds the low-passed relit lightness directly
    instead of the illumination difference.
    """

    beta: float = 0.3
    sigma_illum: float = 15.0
    mode: str = "mean_compensated"

    def __post_init__(self) -> None:
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError(f"beta must lie in [0, 1], got {self.beta}")
        if self.sigma_illum <= 0:
            raise ValueError(f"sigma_illum must be > 0, got {self.sigma_illum}")
        if self.mode not in FUSE_MODES:
            raise ValueError(f"mode must be one of {FUSE_MODES}, got {self.mode!r}")


def lightness_residual(frame: np.ndarray, sigma_prior: float = 5.0) -> LightnessResidual:
    """High-pass residual of the frame's L channel: L minus its blur."""
    frame = ensure_frame(frame)
    if sigma_prior <= 0:
        raise ValueError(f"sigma_prior must be > 0, got {sigma_prior}")
    lightness = rgb_to_lab(frame).L
    return LightnessResidual(lightness - gaussian_blur_sigma(lightness, sigma_prior))


def anchor_lightness(
    frame: np.ndarray, residual: LightnessResidual, gamma: float
) -> np.ndarray:
    """Add ``gamma`` times the residual to the frame's L channel.

    L is clamped to [0, 100] before converting back. A zero gamma or an
    all-zero residual skips the color-space round trip entirely so the
    no-op case is exact.
    """
    frame = ensure_frame(frame)
    if residual.delta_l.shape != frame.shape[:2]:
        raise ValueError(
            f"residual dimensions {residual.delta_l.shape} do not match "
            f"frame {frame.shape[:2]}"
        )
    if gamma == 0.0 or not residual.delta_l.any():
        return frame.copy()
    lab = rgb_to_lab(frame)
    lifted = np.clip(lab.L + gamma * residual.delta_l, 0.0, 100.0)
    return lab_to_rgb(LabFrame(L=lifted, a=lab.a, b=lab.b))


def _fuse_pair(
    consistent: np.ndarray, relit: np.ndarray, lam: float, mode: str
) -> np.ndarray:
    if mode == "convex":
        # (1-lam)*c + lam*r is exact at both endpoints, unlike c + lam*(r-c)
        out = (1.0 - lam) * consistent + lam * relit
    else:
        out = (1.0 + lam) * consistent - lam * relit
    return np.clip(out, 0.0, 1.0)


def progressive_fuse(
    consistent: Sequence[np.ndarray],
    relit_target: Sequence[np.ndarray],
    schedule: GuidanceSchedule,
) -> list[np.ndarray]:
    """Blend each working frame toward its relit counterpart at the schedule's weight."""
    if len(consistent) != len(relit_target):
        raise ValueError(
            f"frame counts differ: {len(consistent)} vs {len(relit_target)}"
        )
    lam = schedule.lambda_t
    out = []
    for cur, rel in zip(consistent, relit_target):
        cur = ensure_frame(cur)
        rel = ensure_frame(rel)
        if cur.shape != rel.shape:
            raise ValueError(f"frame dimensions differ: {cur.shape} vs {rel.shape}")
        out.append(_fuse_pair(cur, rel, lam, schedule.mode))
    return out


def identity_denoiser(
    frames: Sequence[np.ndarray], step: int
) -> list[np.ndarray]:
    """Pass-through refinement stage, useful for testing the loop."""
    return [np.asarray(f, dtype=np.float64) for f in frames]


def gaussian_denoiser(sigma: float = 1.0) -> Denoiser:
    """Blur-based stand-in for a learned refinement stage."""
    if sigma <= 0:
        raise ValueError(f"sigma must be > 0, got {sigma}")

    def denoise(frames: Sequence[np.ndarray], step: int) -> list[np.ndarray]:
        out = []
        for frame in frames:
            frame = np.asarray(frame, dtype=np.float64)
            blurred = np.stack(
                [gaussian_blur_sigma(frame[..., c], sigma) for c in range(frame.shape[-1])],
                axis=-1,
            )
            out.append(np.clip(blurred, 0.0, 1.0))
        return out

    return denoise


def guidance_loop(
    input_video: Sequence[np.ndarray],
    relit_target: Sequence[np.ndarray],
    denoiser: Denoiser,
    schedule: GuidanceSchedule,
    threads: int = 1,
) -> list[np.ndarray]:
    """Iteratively pull the input video toward the relit target.

    Each step blends at the current schedule weight, re-anchors lightness
    with the residual computed once from the input video, then hands the
    frames to the denoiser. The working video starts as the input.
    """
    if len(input_video) != len(relit_target):
        raise ValueError(
            f"frame counts differ: {len(input_video)} vs {len(relit_target)}"
        )
    if not input_video:
        raise ValueError("no frames given")
    residuals = [lightness_residual(f, schedule.sigma_prior) for f in input_video]
    consistent = [ensure_frame(f).copy() for f in input_video]
    for t in range(schedule.total_steps):
        fused = progressive_fuse(consistent, relit_target, schedule.at(t))
        anchored = parallel_map(
            lambda pair: anchor_lightness(pair[0], pair[1], schedule.gamma),
            list(zip(fused, residuals)),
            threads=threads,
        )
        refined = [np.asarray(f, dtype=np.float64) for f in denoiser(anchored, t)]
        if len(refined) != len(anchored):
            raise ValueError(
                f"denoiser changed the frame count: {len(anchored)} -> {len(refined)}"
            )
        for out, ref in zip(refined, anchored):
            if out.shape != ref.shape:
                raise ValueError(
                    f"denoiser changed frame dimensions: {ref.shape} -> {out.shape}"
                )
        consistent = refined
    return consistent


def lab_detail_fuse(
    input_frame: np.ndarray,
    relit_frame: np.ndarray,
    cfg: LabFuseConfig | None = None,
) -> np.ndarray:
    """Carry relit illumination and chroma onto the input's fine detail.

    The output lightness keeps the input's high frequencies and shifts its
    low-frequency part toward the relit frame's; chroma comes entirely from
    the relit frame.
    """
    cfg = cfg if cfg is not None else LabFuseConfig()
    input_frame = ensure_frame(input_frame)
    relit_frame = ensure_frame(relit_frame)
    if input_frame.shape != relit_frame.shape:
        raise ValueError(
            f"frame dimensions differ: {input_frame.shape} vs {relit_frame.shape}"
        )
    lab_in = rgb_to_lab(input_frame)
    lab_rel = rgb_to_lab(relit_frame)
    if cfg.beta == 0.0:
        lifted = lab_in.L
    elif cfg.mode == "mean_compensated":
        low_rel = gaussian_blur_sigma(lab_rel.L, cfg.sigma_illum)
        low_in = gaussian_blur_sigma(lab_in.L, cfg.sigma_illum)
        lifted = lab_in.L + cfg.beta * (low_rel - low_in)
    else:
        lifted = lab_in.L + cfg.beta * gaussian_blur_sigma(lab_rel.L, cfg.sigma_illum)
    lifted = np.clip(lifted, 0.0, 100.0)
    return lab_to_rgb(LabFrame(L=lifted, a=lab_rel.a, b=lab_rel.b))


def fuse_sequence(
    input_video: Sequence[np.ndarray],
    relit_video: Sequence[np.ndarray],
    cfg: LabFuseConfig | None = None,
    threads: int = 1,
) -> list[np.ndarray]:
    """Per-frame detail fusion, upsampling relit frames to input size first."""
    if len(input_video) != len(relit_video):
        raise ValueError(
            f"frame counts differ: {len(input_video)} vs {len(relit_video)}"
        )
    if not input_video:
        raise ValueError("no frames given")

    def fuse_one(pair: tuple[np.ndarray, np.ndarray]) -> np.ndarray:
        src, rel = pair
        src = ensure_frame(src)
        rel = ensure_frame(rel)
        if rel.shape[:2] != src.shape[:2]:
            rel = np.clip(resize_bilinear(rel, src.shape[1], src.shape[0]), 0.0, 1.0)
        return lab_detail_fuse(src, rel, cfg)

    return parallel_map(fuse_one, list(zip(input_video, relit_video)), threads=threads)
