"""Sequence and configuration persistence.

Frame sequences live on disk as directories of 8-bit RGB PNGs plus a
manifest.json; configuration is a flat JSON document whose keys map onto
the dataclass settings of the processing modules, with dotted names for
the grouped blocks (bilateral.*, flow.*, ssim.*).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np
from PIL import Image

from .core import ensure_frame, from_uint8, to_uint8
from .flow import FlowParams
from .fusion import GuidanceSchedule, LabFuseConfig
from .metrics import SsimParams, StabilityParams
from .temporal import BilateralParams, SmootherConfig


class ConfigError(ValueError):
    """Invalid, unknown, or ill-typed configuration entry."""


class UsageError(ValueError):
    """Malformed command-line construct (maps to the usage exit code)."""


# ---------------------------------------------------------------------------
# frame sequences
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class VideoManifest:
    """Ordered frame files plus the playback and geometry metadata."""

    frame_paths: list[str]
    fps: float = 24.0
    width: int = 0
    height: int = 0

    def __post_init__(self) -> None:
        if not self.frame_paths:
            raise ValueError("manifest needs at least one frame path")
        if self.fps <= 0:
            raise ValueError(f"fps must be > 0, got {self.fps}")
        if self.width < 1 or self.height < 1:
            raise ValueError(f"bad dimensions {self.width}x{self.height}")


def load_frame(path: str | Path) -> np.ndarray:
    """Decode one image to a float RGB frame.

    16-bit grayscale PNGs are rescaled from their full range; everything
    else goes through an 8-bit RGB conversion, which drops any alpha.
    """
    with Image.open(path) as img:
        if img.mode in ("I;16", "I;16B", "I;16L", "I"):
            plane = np.asarray(img, dtype=np.float64) / 65535.0
            return np.repeat(np.clip(plane, 0.0, 1.0)[:, :, None], 3, axis=2)
        rgb = img.convert("RGB")
        return from_uint8(np.asarray(rgb, dtype=np.uint8))


def load_sequence(dir_or_manifest: str | Path) -> tuple[list[np.ndarray], VideoManifest]:
    """Read a PNG directory (lexicographic order) or a JSON manifest."""
    path = Path(dir_or_manifest)
    fps = 24.0
    if path.is_dir():
        frame_paths = sorted(p for p in path.iterdir() if p.suffix.lower() == ".png")
        if not frame_paths:
            raise FileNotFoundError(f"no PNG frames in {path}")
    elif path.is_file():
        with open(path) as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ValueError(f"malformed manifest {path}: {exc}") from exc
        if not isinstance(doc, dict) or "frames" not in doc:
            raise ValueError(f"manifest {path} lacks a 'frames' list")
        frame_paths = [path.parent / p for p in doc["frames"]]
        if not frame_paths:
            raise ValueError(f"manifest {path} lists no frames")
        fps = float(doc.get("fps", 24.0))
    else:
        raise FileNotFoundError(f"no such sequence: {path}")

    frames = [load_frame(p) for p in frame_paths]
    first = frames[0].shape
    for p, frame in zip(frame_paths, frames):
        if frame.shape != first:
            raise ValueError(
                f"frame dimensions differ: {p} is {frame.shape[1]}x{frame.shape[0]}, "
                f"expected {first[1]}x{first[0]}"
            )
    manifest = VideoManifest(
        frame_paths=[str(p) for p in frame_paths],
        fps=fps,
        width=first[1],
        height=first[0],
    )
    return frames, manifest


def save_sequence(
    frames: Sequence[np.ndarray], directory: str | Path, fps: float = 24.0
) -> VideoManifest:
    """Write zero-padded PNGs plus manifest.json into the directory."""
    if not frames:
        raise ValueError("no frames to save")
    checked = [ensure_frame(f) for f in frames]
    first = checked[0].shape
    for frame in checked:
        if frame.shape != first:
            raise ValueError(
                f"frame dimensions differ: {frame.shape[:2]} vs {first[:2]}"
            )
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    names = []
    for idx, frame in enumerate(checked):
        name = f"f{idx:04d}.png"
        Image.fromarray(to_uint8(frame), mode="RGB").save(directory / name)
        names.append(name)
    doc = {
        "frames": names,
        "fps": fps,
        "width": first[1],
        "height": first[0],
    }
    with open(directory / "manifest.json", "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return VideoManifest(
        frame_paths=[str(directory / n) for n in names],
        fps=fps,
        width=first[1],
        height=first[0],
    )


# ---------------------------------------------------------------------------
# run configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RunConfig:
    """Every tunable of the processing chain in one validated object."""

    smoother: SmootherConfig = field(default_factory=SmootherConfig)
    bilateral: BilateralParams = field(default_factory=BilateralParams)
    flow: FlowParams = field(default_factory=FlowParams)
    guidance: GuidanceSchedule = field(default_factory=GuidanceSchedule)
    lab_fuse: LabFuseConfig = field(default_factory=LabFuseConfig)
    stability: StabilityParams = field(default_factory=StabilityParams)
    ssim: SsimParams = field(default_factory=SsimParams)
    fps: float = 24.0
    downsample_height: int = 0
    threads: int = 0
    input_path: str | None = None
    relit_path: str | None = None
    output_path: str | None = None

    def __post_init__(self) -> None:
        if self.fps <= 0:
            raise ValueError(f"fps must be > 0, got {self.fps}")
        if self.downsample_height < 0:
            raise ValueError(
                f"downsample_height must be >= 0, got {self.downsample_height}"
            )
        if self.threads < 0:
            raise ValueError(f"threads must be >= 0, got {self.threads}")


# config key -> (section, dataclass field, expected type); section None is
# a top-level RunConfig field
_FLAT_KEYS: dict[str, tuple[str | None, str, type]] = {
    "alpha_base": ("smoother", "alpha_base", float),
    "adaptive": ("smoother", "adaptive", bool),
    "motion_scale": ("smoother", "motion_scale", float),
    "alpha_floor": ("smoother", "alpha_floor", float),
    "window_size": ("smoother", "window_size", int),
    "window_decay": ("smoother", "window_decay", float),
    "gamma": ("guidance", "gamma", float),
    "sigma_prior": ("guidance", "sigma_prior", float),
    "steps": ("guidance", "total_steps", int),
    "eq5_mode": ("guidance", "mode", str),
    "beta": ("lab_fuse", "beta", float),
    "sigma_illum": ("lab_fuse", "sigma_illum", float),
    "fuse_mode": ("lab_fuse", "mode", str),
    "tau": ("stability", "tau", float),
    "k_I": ("stability", "k_i", float),
    "k_C": ("stability", "k_c", float),
    "k_dI": ("stability", "k_di", float),
    "fps": (None, "fps", float),
    "downsample_height": (None, "downsample_height", int),
    "threads": (None, "threads", int),
    "input": (None, "input_path", str),
    "relit": (None, "relit_path", str),
    "output": (None, "output_path", str),
}

_GROUP_KEYS: dict[str, dict[str, tuple[str, type]]] = {
    "bilateral": {
        "sigma_spatial": ("sigma_spatial", float),
        "sigma_range": ("sigma_range", float),
        "radius": ("radius", int),
    },
    "flow": {
        "pyramid_levels": ("pyramid_levels", int),
        "pyramid_scale": ("pyramid_scale", float),
        "window_size": ("window_size", int),
        "iterations": ("iterations", int),
        "poly_n": ("poly_n", int),
        "poly_sigma": ("poly_sigma", float),
    },
    "ssim": {
        "window": ("window", int),
        "window_sigma": ("window_sigma", float),
    },
}

_SECTION_TYPES = {
    "smoother": SmootherConfig,
    "bilateral": BilateralParams,
    "flow": FlowParams,
    "guidance": GuidanceSchedule,
    "lab_fuse": LabFuseConfig,
    "stability": StabilityParams,
    "ssim": SsimParams,
}


def _coerce(key: str, value: Any, want: type) -> Any:
    if want is bool:
        if isinstance(value, bool):
            return value
    elif want is int:
        if isinstance(value, bool):
            pass
        elif isinstance(value, int):
            return value
        elif isinstance(value, float) and value.is_integer():
            return int(value)
    elif want is float:
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return float(value)
    elif want is str:
        if isinstance(value, str):
            return value
    raise ConfigError(
        f"config key {key!r} expects {want.__name__}, got {value!r}"
    )


def _flatten(data: dict) -> dict[str, Any]:
    flat: dict[str, Any] = {}
    for key, value in data.items():
        if key in _GROUP_KEYS and isinstance(value, dict):
            for sub, sv in value.items():
                flat[f"{key}.{sub}"] = sv
        else:
            flat[key] = value
    return flat


def _field_to_key(section: str | None) -> dict[str, str]:
    out = {}
    for key, (sec, fname, _) in _FLAT_KEYS.items():
        if sec == section and fname != key:
            out[fname] = key
    return out


def build_config(data: dict) -> RunConfig:
    """Validated RunConfig from a JSON-style mapping; unknown keys rejected."""
    if not isinstance(data, dict):
        raise ConfigError(f"config must be a JSON object, got {type(data).__name__}")
    section_kwargs: dict[str, dict[str, Any]] = {name: {} for name in _SECTION_TYPES}
    top_kwargs: dict[str, Any] = {}
    for key, value in sorted(_flatten(data).items()):
        if key in _FLAT_KEYS:
            section, fname, want = _FLAT_KEYS[key]
            coerced = _coerce(key, value, want)
            if section is None:
                top_kwargs[fname] = coerced
            else:
                section_kwargs[section][fname] = coerced
            continue
        group, _, sub = key.partition(".")
        if group in _GROUP_KEYS and sub in _GROUP_KEYS[group]:
            fname, want = _GROUP_KEYS[group][sub]
            section_kwargs[group][fname] = _coerce(key, value, want)
            continue
        raise ConfigError(f"unknown config key {key!r}")

    sections: dict[str, Any] = {}
    for name, cls in _SECTION_TYPES.items():
        try:
            sections[name] = cls(**section_kwargs[name])
        except ValueError as exc:
            msg = str(exc)
            renames = sorted(_field_to_key(name).items(), key=lambda kv: -len(kv[0]))
            for fname, key in renames:
                msg = msg.replace(fname, key)
            raise ConfigError(msg) from exc
    try:
        return RunConfig(**sections, **top_kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_config_data(path: str | Path) -> dict:
    """Raw config mapping from a JSON file, before any overrides."""
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(
            f"config {path} must hold a JSON object, got {type(data).__name__}"
        )
    return data


def load_config(path: str | Path) -> RunConfig:
    """RunConfig from a JSON file; absent keys keep their defaults."""
    return build_config(load_config_data(path))


def parse_assignment(text: str) -> tuple[str, Any]:
    """Split one KEY=VALUE override; values parse as JSON, else raw string."""
    key, sep, raw = text.partition("=")
    if not sep or not key:
        raise UsageError(f"override must look like key=value, got {text!r}")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key, value


def apply_overrides(data: dict, assignments: Sequence[str]) -> dict:
    """New config mapping with KEY=VALUE strings merged in (dotted keys ok)."""
    merged = dict(_flatten(data))
    for text in assignments:
        key, value = parse_assignment(text)
        merged[key] = value
    return merged
