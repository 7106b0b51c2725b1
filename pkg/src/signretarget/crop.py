"""Crop boxes and the remap into 256-space.

The target box is the tight envelope of everything detected.  The source box
is sized from body proportions instead: the profile records how large the
target body is inside its crop, and the source box is scaled so that after
remapping both bodies occupy the same share of the 256-space frame.  Boxes
live in original pixel coordinates; remapped landmarks are 256-space pixels
with box corners mapping to (0, 0) and (255, 255).
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import BoxExceedsFrameWarning, DegenerateShoulders, EmptySequence
from .landmarks import (
    LAYOUT,
    LEFT_HIP,
    LEFT_SHOULDER,
    RIGHT_HIP,
    RIGHT_SHOULDER,
    PoseFrame,
    PoseSequence,
    root_point,
)

OUT_SIZE = 256
SPAN = float(OUT_SIZE - 1)  # box corners map onto [0, 255]


def lower_median(values):
    """Median that returns the lower middle element for even counts."""
    arr = np.sort(np.asarray(values, dtype=np.float64))
    if arr.size == 0:
        raise EmptySequence("median of empty collection")
    return float(arr[(arr.size - 1) // 2])


@dataclass(frozen=True)
class CropSpec:
    """Axis-aligned crop box in source pixels plus the fixed output size."""

    x_min: float
    y_min: float
    x_max: float
    y_max: float
    out_size: int = OUT_SIZE

    def __post_init__(self):
        if not (self.x_max > self.x_min and self.y_max > self.y_min):
            raise ValueError("crop box must have positive width and height")

    @property
    def scale_x(self):
        return (self.out_size - 1) / (self.x_max - self.x_min)

    @property
    def scale_y(self):
        return (self.out_size - 1) / (self.y_max - self.y_min)

    @property
    def offset(self):
        return (-self.x_min * self.scale_x, -self.y_min * self.scale_y)

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(
                {
                    "x_min": self.x_min,
                    "y_min": self.y_min,
                    "x_max": self.x_max,
                    "y_max": self.y_max,
                    "out_size": self.out_size,
                },
                fh,
                indent=2,
            )
            fh.write("\n")

    @classmethod
    def load(cls, path):
        with open(path, "r", encoding="utf-8") as fh:
            d = json.load(fh)
        return cls(d["x_min"], d["y_min"], d["x_max"], d["y_max"], d["out_size"])


@dataclass(frozen=True)
class ProportionProfile:
    """How much of the 256-space crop the target body spans.

    h_m: median horizontal shoulder distance (256-space pixels).
    v_m: median vertical distance from the shoulder midpoint to the hip
         midpoint (256-space pixels).
    x_pct / y_pct: the same as fractions of the 255-pixel box span.
    root_rel_y: the median root height as a fraction of the box span, used
         to anchor the source box vertically.
    """

    h_m: float
    v_m: float
    x_pct: float
    y_pct: float
    root_rel_y: float

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(
                {
                    "h_m": self.h_m,
                    "v_m": self.v_m,
                    "x_pct": self.x_pct,
                    "y_pct": self.y_pct,
                    "root_rel_y": self.root_rel_y,
                },
                fh,
                indent=2,
            )
            fh.write("\n")

    @classmethod
    def load(cls, path):
        with open(path, "r", encoding="utf-8") as fh:
            d = json.load(fh)
        return cls(d["h_m"], d["v_m"], d["x_pct"], d["y_pct"], d["root_rel_y"])


def _clamp_box(x_min, y_min, x_max, y_max, width, height):
    cx0, cy0 = max(x_min, 0.0), max(y_min, 0.0)
    cx1, cy1 = min(x_max, float(width)), min(y_max, float(height))
    if (cx0, cy0, cx1, cy1) != (x_min, y_min, x_max, y_max):
        warnings.warn(
            f"crop box ({x_min:.1f}, {y_min:.1f}, {x_max:.1f}, {y_max:.1f}) "
            f"exceeds the {width}x{height} frame; clamping",
            BoxExceedsFrameWarning,
            stacklevel=3,
        )
    return cx0, cy0, cx1, cy1


def target_crop(seq):
    """Tight pixel envelope over every detected landmark of every frame."""
    if len(seq) == 0:
        raise EmptySequence("cannot crop an empty sequence")
    xs, ys = [], []
    for frame in seq:
        for name in LAYOUT.slices:
            if frame.present(name):
                block = frame.part(name)
                xs.append(block[:, 0] * seq.width)
                ys.append(block[:, 1] * seq.height)
    if not xs:
        raise EmptySequence("no detected landmarks in any frame")
    xs = np.concatenate(xs)
    ys = np.concatenate(ys)
    box = _clamp_box(
        float(xs.min()), float(ys.min()), float(xs.max()), float(ys.max()),
        seq.width, seq.height,
    )
    return CropSpec(box[0], box[1], box[2], box[3])


def _torso_measures(seq, to_px):
    """Per-frame (shoulder span, shoulder-hip drop, root) for frames with a
    torso, converted by to_px = (x_factor, y_factor)."""
    spans, drops, roots = [], [], []
    fx, fy = to_px
    for frame in seq:
        if not frame.present("torso"):
            continue
        lm = frame.landmarks
        spans.append(abs(lm[LEFT_SHOULDER, 0] - lm[RIGHT_SHOULDER, 0]) * fx)
        root = root_point(lm)
        mid_hip = 0.5 * (lm[LEFT_HIP] + lm[RIGHT_HIP])
        drops.append(abs(mid_hip[1] - root[1]) * fy)
        roots.append((root[0] * fx, root[1] * fy))
    if not spans:
        raise EmptySequence("no frames with a detected torso")
    return spans, drops, roots


def proportion_profile(target_seq, crop):
    """Body proportions of a 256-space target sequence.

    Raises DegenerateShoulders when a median distance is one pixel or less.
    """
    if target_seq.width != crop.out_size or target_seq.height != crop.out_size:
        raise ValueError("proportion_profile expects a cropped 256-space sequence")
    spans, drops, roots = _torso_measures(target_seq, (1.0, 1.0))
    h_m = lower_median(spans)
    v_m = lower_median(drops)
    if h_m <= 1.0 or v_m <= 1.0:
        raise DegenerateShoulders(
            f"median body spans ({h_m:.3f}, {v_m:.3f}) px are too small"
        )
    root_y = lower_median([r[1] for r in roots])
    return ProportionProfile(
        h_m=h_m,
        v_m=v_m,
        x_pct=h_m / SPAN,
        y_pct=v_m / SPAN,
        root_rel_y=root_y / SPAN,
    )


def source_crop(source_seq, profile):
    """Fixed source box sized so the source body matches the target profile.

    Box width is (median source shoulder distance) / x_pct and likewise for
    the height, centered horizontally on the median root and anchored
    vertically so the root keeps the target's relative height.
    """
    spans, drops, roots = _torso_measures(
        source_seq, (float(source_seq.width), float(source_seq.height))
    )
    d_h = lower_median(spans)
    d_v = lower_median(drops)
    if d_h <= 1.0 or d_v <= 1.0:
        raise DegenerateShoulders(
            f"median source spans ({d_h:.3f}, {d_v:.3f}) px are too small"
        )
    dx = d_h / profile.x_pct
    dy = d_v / profile.y_pct
    root_x = lower_median([r[0] for r in roots])
    root_y = lower_median([r[1] for r in roots])
    x_min = root_x - 0.5 * dx
    y_min = root_y - profile.root_rel_y * dy
    box = _clamp_box(
        x_min, y_min, x_min + dx, y_min + dy, source_seq.width, source_seq.height
    )
    return CropSpec(box[0], box[1], box[2], box[3])


def apply_crop(seq, crop):
    """Remap a normalized sequence into 256-space pixel coordinates.

    x and y are mapped affinely so the box corners land on (0, 0) and
    (255, 255); z is scaled by the mean of the two total scale factors.
    Flags and frame indices are preserved; the output frame size is 256x256.
    """
    sx, sy = crop.scale_x, crop.scale_y
    zf = 0.5 * (seq.width * sx + seq.height * sy)
    frames = []
    for frame in seq:
        lm = frame.landmarks.copy()
        lm[:, 0] = (lm[:, 0] * seq.width - crop.x_min) * sx
        lm[:, 1] = (lm[:, 1] * seq.height - crop.y_min) * sy
        lm[:, 2] = lm[:, 2] * zf
        frames.append(PoseFrame(frame.frame_index, lm, frame.status))
    return PoseSequence(tuple(frames), seq.fps, crop.out_size, crop.out_size)
