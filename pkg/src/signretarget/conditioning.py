"""Color-coded body rasterization and eye-gaze images.

Each joint owns one fixed RGB color: R and G encode where the joint sits
on a template body (its XY quantized to 8 bits), B names the body part.
A pose is rendered as fixed-radius disks, with a few interpolated disks
along each bone drawn first so limbs stay connected.  The gaze image
draws the two eye contours as closed white polylines plus one colored
pupil disk each.  Everything is integer rasterization on a black 256x256
canvas: the same frame always produces the same bytes.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .crop import OUT_SIZE, SPAN, lower_median
from .errors import MissingLandmarks, PartNeverDetected
from .landmarks import (
    LAYOUT,
    PART_NAMES,
    TOTAL_JOINTS,
    PartStatus,
    PoseFrame,
    root_point,
)

# part constants for the blue channel; head is the brightest
PART_B = {"torso": 64, "lhand": 128, "rhand": 192, "face": 255}

EYE_CONTOUR_COLOR = (255, 255, 255)
LEFT_PUPIL_COLOR = (255, 0, 0)
RIGHT_PUPIL_COLOR = (0, 255, 0)

_TORSO_EDGES = ((1, 2), (1, 3), (3, 5), (2, 4), (4, 6), (7, 8))
# 21-landmark hand topology: thumb, four fingers, palm ring
_HAND_EDGES = (
    (0, 1), (1, 2), (2, 3), (3, 4),
    (5, 6), (6, 7), (7, 8),
    (9, 10), (10, 11), (11, 12),
    (13, 14), (14, 15), (15, 16),
    (17, 18), (18, 19), (19, 20),
    (0, 5), (5, 9), (9, 13), (13, 17), (0, 17),
)


def default_bones():
    """Global-index bone list: torso edges plus both hand topologies."""
    bones = list(_TORSO_EDGES)
    for part in ("lhand", "rhand"):
        offset = LAYOUT.slices[part].start
        bones.extend((a + offset, b + offset) for a, b in _HAND_EDGES)
    return tuple(bones)


def _part_of(joint):
    for name in PART_NAMES:
        sl = LAYOUT.slices[name]
        if sl.start <= joint < sl.stop:
            return name
    raise IndexError(f"joint {joint} outside the layout")


_JOINT_PART = tuple(_part_of(j) for j in range(TOTAL_JOINTS))


def _quantize(value):
    """Round half away from zero, clamped to the 8-bit range."""
    q = np.floor(abs(value) + 0.5) * np.sign(value)
    return int(min(255.0, max(0.0, q)))


@dataclass(frozen=True)
class ColorScheme:
    """Immutable joint color table plus the bone interpolation recipe."""

    joint_colors: np.ndarray  # (529, 3) uint8
    bones: tuple              # global joint index pairs
    m: int                    # interpolated disks per bone
    part_b: dict              # part name -> blue channel constant

    def __post_init__(self):
        colors = np.asarray(self.joint_colors, dtype=np.uint8)
        if colors.shape != (TOTAL_JOINTS, 3):
            raise ValueError(f"joint_colors must be ({TOTAL_JOINTS}, 3)")
        if len({tuple(c) for c in colors}) != TOTAL_JOINTS:
            raise ValueError("joint colors are not unique")
        for name in PART_NAMES:
            block = colors[LAYOUT.slices[name]]
            if not np.all(block[:, 2] == self.part_b[name]):
                raise ValueError(f"part '{name}' blue channel is not {self.part_b[name]}")
        colors.setflags(write=False)
        object.__setattr__(self, "joint_colors", colors)
        object.__setattr__(self, "bones", tuple(tuple(b) for b in self.bones))
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "part_b", dict(self.part_b))
        if self.m < 0:
            raise ValueError("m must be non-negative")

    def interpolated_colors(self, a, b):
        """Colors of the m disks along bone (a, b), nearest-a first."""
        ca = self.joint_colors[a].astype(np.float64)
        cb = self.joint_colors[b].astype(np.float64)
        out = np.empty((self.m, 3), dtype=np.uint8)
        for i in range(1, self.m + 1):
            t = i / (self.m + 1)
            mix = (1.0 - t) * ca + t * cb
            out[i - 1] = [_quantize(v) for v in mix]
        return out

    def save(self, path):
        doc = {
            "m": self.m,
            "part_b": self.part_b,
            "bones": [list(b) for b in self.bones],
            "joint_colors": self.joint_colors.tolist(),
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, path):
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        return cls(
            joint_colors=np.asarray(doc["joint_colors"], dtype=np.uint8),
            bones=tuple(tuple(b) for b in doc["bones"]),
            m=int(doc["m"]),
            part_b={k: int(v) for k, v in doc["part_b"].items()},
        )


def build_color_scheme(template_pose, part_b=None, bones=None, m=4):
    """Assign every joint its color from a template pose in 256-space.

    R and G come from the template XY normalized to [0, 1] and quantized;
    B is the part constant.  Color collisions are resolved by stepping the
    red channel (wrapping, then stepping green) in joint-index order, so
    the scheme is a pure function of the template.
    """
    if part_b is None:
        part_b = dict(PART_B)
    if set(part_b) != set(PART_NAMES):
        raise ValueError(f"part_b must cover exactly {PART_NAMES}")
    if len(set(part_b.values())) != len(PART_NAMES):
        raise ValueError("part blue constants must be distinct")
    if bones is None:
        bones = default_bones()
    missing = [n for n in PART_NAMES if not template_pose.present(n)]
    if missing:
        raise MissingLandmarks(f"template pose is missing {missing}")
    lm = template_pose.landmarks
    colors = np.empty((TOTAL_JOINTS, 3), dtype=np.uint8)
    seen = set()
    for j in range(TOTAL_JOINTS):
        xn = min(1.0, max(0.0, lm[j, 0] / SPAN))
        yn = min(1.0, max(0.0, lm[j, 1] / SPAN))
        r = _quantize(xn * 255.0)
        g = _quantize(yn * 255.0)
        b = int(part_b[_JOINT_PART[j]])
        attempts = 0
        while (r, g, b) in seen:
            r = (r + 1) % 256
            attempts += 1
            if attempts % 256 == 0:
                g = (g + 1) % 256
            if attempts > 1 << 16:
                raise ValueError("could not find a unique color")  # unreachable
        seen.add((r, g, b))
        colors[j] = (r, g, b)
    return ColorScheme(joint_colors=colors, bones=bones, m=m, part_b=part_b)


def median_template_pose(seq):
    """Componentwise lower-median pose over detected frames, root-anchored.

    Each part's median uses only frames where that part was truly
    detected; the assembled skeleton is then translated so its root sits
    at the sequence's median root location.
    """
    lm = np.empty((TOTAL_JOINTS, 3))
    for name in PART_NAMES:
        sl = LAYOUT.slices[name]
        blocks = [
            f.landmarks[sl]
            for f in seq.frames
            if f.status[name] is PartStatus.DETECTED
        ]
        if not blocks:
            raise PartNeverDetected(f"part '{name}' is never detected")
        stack = np.sort(np.stack(blocks), axis=0)
        lm[sl] = stack[(len(blocks) - 1) // 2]
    roots = np.asarray(
        [
            root_point(f.landmarks)
            for f in seq.frames
            if f.status["torso"] is PartStatus.DETECTED
        ]
    )
    anchor = np.array([lower_median(roots[:, a]) for a in range(3)])
    lm += anchor - root_point(lm)
    return PoseFrame(0, lm, {name: PartStatus.DETECTED for name in PART_NAMES})


def _draw_disk(img, cx, cy, radius, color):
    if not (np.isfinite(cx) and np.isfinite(cy)):
        return
    h, w = img.shape[:2]
    x0 = max(0, int(np.ceil(cx - radius)))
    x1 = min(w - 1, int(np.floor(cx + radius)))
    y0 = max(0, int(np.ceil(cy - radius)))
    y1 = min(h - 1, int(np.floor(cy + radius)))
    if x0 > x1 or y0 > y1:
        return
    xs = np.arange(x0, x1 + 1, dtype=np.float64)
    ys = np.arange(y0, y1 + 1, dtype=np.float64)
    mask = (xs[None, :] - cx) ** 2 + (ys[:, None] - cy) ** 2 <= radius * radius
    img[y0 : y1 + 1, x0 : x1 + 1][mask] = color


def _round_coord(v):
    return int(np.floor(abs(v) + 0.5) * np.sign(v))


def _line_pixels(x0, y0, x1, y1):
    """Integer line walk (Bresenham), endpoint-inclusive, all octants."""
    dx = abs(x1 - x0)
    sx = 1 if x0 < x1 else -1
    dy = -abs(y1 - y0)
    sy = 1 if y0 < y1 else -1
    err = dx + dy
    while True:
        yield x0, y0
        if x0 == x1 and y0 == y1:
            return
        e2 = 2 * err
        if e2 >= dy:
            err += dy
            x0 += sx
        if e2 <= dx:
            err += dx
            y0 += sy


def _draw_segment(img, pa, pb, color, width):
    if not (np.all(np.isfinite(pa)) and np.all(np.isfinite(pb))):
        return
    h, w = img.shape[:2]
    offsets = range(-(width // 2), width - width // 2)
    for x, y in _line_pixels(
        _round_coord(pa[0]), _round_coord(pa[1]),
        _round_coord(pb[0]), _round_coord(pb[1]),
    ):
        for oy in offsets:
            for ox in offsets:
                px, py = x + ox, y + oy
                if 0 <= px < w and 0 <= py < h:
                    img[py, px] = color


def rasterize_ccbr(frame, scheme, radius=2.0, strict=False):
    """Render the color-coded body image for one frame.

    Bones go down first (m interpolated disks each, colors blending from
    one endpoint to the other), then every joint disk in part order torso,
    head, left hand, right hand, ascending index within a part.  Missing
    parts raise in strict mode and are skipped otherwise.
    """
    missing = {n for n in PART_NAMES if not frame.present(n)}
    if strict and missing:
        raise MissingLandmarks(f"frame {frame.frame_index} is missing {sorted(missing)}")
    img = np.zeros((OUT_SIZE, OUT_SIZE, 3), dtype=np.uint8)
    lm = frame.landmarks
    for a, b in scheme.bones:
        if _JOINT_PART[a] in missing or _JOINT_PART[b] in missing:
            continue
        colors = scheme.interpolated_colors(a, b)
        for i in range(scheme.m):
            t = (i + 1) / (scheme.m + 1)
            cx = (1.0 - t) * lm[a, 0] + t * lm[b, 0]
            cy = (1.0 - t) * lm[a, 1] + t * lm[b, 1]
            _draw_disk(img, cx, cy, radius, colors[i])
    for name in ("torso", "face", "lhand", "rhand"):
        if name in missing:
            continue
        sl = LAYOUT.slices[name]
        for j in range(sl.start, sl.stop):
            _draw_disk(img, lm[j, 0], lm[j, 1], radius, scheme.joint_colors[j])
    return img


def rasterize_gaze(frame, pupil_radius=2.0, line_width=1, strict=False):
    """Render the eye image: closed white contours, one disk per pupil."""
    img = np.zeros((OUT_SIZE, OUT_SIZE, 3), dtype=np.uint8)
    if not frame.present("face"):
        if strict:
            raise MissingLandmarks(f"frame {frame.frame_index} has no face")
        return img
    lm = frame.landmarks
    for loop in (LAYOUT.left_eye_loop, LAYOUT.right_eye_loop):
        for i, a in enumerate(loop):
            b = loop[(i + 1) % len(loop)]
            _draw_segment(img, lm[a], lm[b], EYE_CONTOUR_COLOR, line_width)
    for j, color in (
        (LAYOUT.left_pupil, LEFT_PUPIL_COLOR),
        (LAYOUT.right_pupil, RIGHT_PUPIL_COLOR),
    ):
        _draw_disk(img, lm[j, 0], lm[j, 1], pupil_radius, color)
    return img


@dataclass(frozen=True)
class ConditioningFrame:
    """The 6-channel conditional input: CCBR channels first, gaze after."""

    ccbr: np.ndarray
    gaze: np.ndarray

    def __post_init__(self):
        for name in ("ccbr", "gaze"):
            arr = np.asarray(getattr(self, name), dtype=np.uint8)
            if arr.shape != (OUT_SIZE, OUT_SIZE, 3):
                raise ValueError(f"{name} must be ({OUT_SIZE}, {OUT_SIZE}, 3)")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def tensor(self):
        return np.concatenate([self.ccbr, self.gaze], axis=2)

    def raw_bytes(self):
        """Row-major HxWx6 uint8 dump; reshape(256, 256, 6) reads it back."""
        return self.tensor().tobytes()


def compose_conditioning(
    frame, scheme, radius=2.0, pupil_radius=2.0, line_width=1, strict=False
):
    return ConditioningFrame(
        ccbr=rasterize_ccbr(frame, scheme, radius=radius, strict=strict),
        gaze=rasterize_gaze(
            frame, pupil_radius=pupil_radius, line_width=line_width, strict=strict
        ),
    )
