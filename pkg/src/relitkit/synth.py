"""Synthetic test sequences with known ground truth.

All generators take brightness in 8-bit units, keep pixel values on the
integer 8-bit grid (so PNG round trips are exact), and return float
working-form frames. Randomness is fully determined by the seed.
"""

from __future__ import annotations

import numpy as np

from .core import gaussian_blur_sigma

KINDS = (
    "constant",
    "global-flicker",
    "moving-bright-square",
    "textured-translation",
    "jitter-noise",
)


def _gray_to_rgb(levels: np.ndarray) -> np.ndarray:
    plane = np.clip(levels, 0, 255) / 255.0
    return np.repeat(plane[:, :, None], 3, axis=2)


def _check_dims(width, height, frames):
    if width < 1 or height < 1:
        raise ValueError(f"dimensions must be positive, got {width}x{height}")
    if frames < 1:
        raise ValueError(f"frame count must be positive, got {frames}")


def _texture(height, width, amplitude, seed, smooth=4.0):
    """Smooth zero-mean integer texture in [-amplitude, amplitude]."""
    if amplitude <= 0:
        return np.zeros((height, width))
    rng = np.random.default_rng(seed)
    noise = gaussian_blur_sigma(rng.standard_normal((height, width)), smooth)
    noise -= noise.mean()
    peak = np.abs(noise).max()
    if peak > 0:
        noise *= amplitude / peak
    return np.rint(noise)


def constant_sequence(width, height, frames, value=200.0):
    """Identical flat frames."""
    _check_dims(width, height, frames)
    frame = _gray_to_rgb(np.full((height, width), float(value)))
    return [frame.copy() for _ in range(frames)]


def flicker_sequence(width, height, frames, base=160.0, amplitude=25.0,
                     period=1, texture=0.0, seed=0):
    """Static scene whose global brightness toggles +/- amplitude.

    The offset flips sign every `period` frames; texture > 0 adds a fixed
    smooth pattern underneath the flicker.
    """
    _check_dims(width, height, frames)
    if period < 1:
        raise ValueError(f"period must be >= 1, got {period}")
    scene = base + _texture(height, width, texture, seed)
    out = []
    for t in range(frames):
        offset = amplitude if (t // period) % 2 == 0 else -amplitude
        out.append(_gray_to_rgb(scene + offset))
    return out


def jitter_sequence(width, height, frames, base=150.0, amplitude=20.0,
                    texture=30.0, seed=0):
    """Static scene with i.i.d. integer brightness offsets per frame."""
    _check_dims(width, height, frames)
    if amplitude < 1:
        raise ValueError(f"amplitude must be >= 1, got {amplitude}")
    rng = np.random.default_rng(seed)
    scene = base + _texture(height, width, texture, seed + 1)
    offsets = rng.integers(-int(amplitude), int(amplitude) + 1, size=frames)
    return [_gray_to_rgb(scene + float(o)) for o in offsets]


def moving_square_sequence(width, height, frames, bg=26.0, fg=230.0,
                           size=40, speed_x=8, speed_y=0, start_x=8, start_y=None):
    """Bright square translating over a dark background.

    Returns (frames, meta); meta records the top-left corner per frame so
    tests can measure edge placement against ground truth.
    """
    _check_dims(width, height, frames)
    if size < 2:
        raise ValueError(f"square size must be >= 2, got {size}")
    if start_y is None:
        start_y = (height - size) // 2
    positions = []
    for t in range(frames):
        x = start_x + t * speed_x
        y = start_y + t * speed_y
        if x < 0 or y < 0 or x + size > width or y + size > height:
            raise ValueError(
                f"square leaves the frame at t={t} (corner {x},{y}, size {size})"
            )
        positions.append((int(x), int(y)))
    out = []
    for x, y in positions:
        levels = np.full((height, width), float(bg))
        levels[y : y + size, x : x + size] = float(fg)
        out.append(_gray_to_rgb(levels))
    meta = {
        "positions": [list(p) for p in positions],
        "size": int(size),
        "bg": float(bg),
        "fg": float(fg),
        "speed": [int(speed_x), int(speed_y)],
    }
    return out, meta


def textured_translation_sequence(width, height, frames, dx=2, dy=3,
                                  seed=0, low=40.0, high=215.0, smooth=3.0):
    """Smooth random texture translating by an integer (dx, dy) per frame.

    Frames are crops of one larger canvas, so the motion is an exact pixel
    shift with no wrap-around seams.
    """
    _check_dims(width, height, frames)
    if dx != int(dx) or dy != int(dy):
        raise ValueError(f"per-frame shift must be integral, got ({dx}, {dy})")
    dx, dy = int(dx), int(dy)
    rng = np.random.default_rng(seed)
    canvas_h = height + (frames - 1) * abs(dy)
    canvas_w = width + (frames - 1) * abs(dx)
    noise = gaussian_blur_sigma(rng.standard_normal((canvas_h, canvas_w)), smooth)
    span = np.ptp(noise)
    if span > 0:
        noise = (noise - noise.min()) / span
    canvas = np.rint(low + (high - low) * noise)
    ox0 = (frames - 1) * max(dx, 0)
    oy0 = (frames - 1) * max(dy, 0)
    out = []
    for t in range(frames):
        ox = ox0 - t * dx
        oy = oy0 - t * dy
        out.append(_gray_to_rgb(canvas[oy : oy + height, ox : ox + width]))
    return out


def generate(kind: str, width, height, frames, seed=0, **kwargs):
    """Dispatch by fixture kind; returns (frames, meta_or_None)."""
    if kind == "constant":
        return constant_sequence(width, height, frames, **kwargs), None
    if kind == "global-flicker":
        return flicker_sequence(width, height, frames, seed=seed, **kwargs), None
    if kind == "moving-bright-square":
        return moving_square_sequence(width, height, frames, **kwargs)
    if kind == "textured-translation":
        return textured_translation_sequence(width, height, frames, seed=seed, **kwargs), None
    if kind == "jitter-noise":
        return jitter_sequence(width, height, frames, seed=seed, **kwargs), None
    raise KeyError(f"unknown fixture kind {kind!r}; choose from {', '.join(KINDS)}")
