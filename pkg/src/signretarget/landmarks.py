"""Joint layout, pose containers, JSONL interchange, and gap filling.

A skeleton is a fixed stack of 529 joints: 9 torso points, a 478-point face
mesh, and two 21-point hands.  Coordinates are stored as (x, y, z) float64
triples.  Raw tracker output is normalized to the frame (x relative to width,
y relative to height, z on the x-comparable scale); after cropping the same
containers carry 256-space pixel coordinates.  The I/O layer treats values as
opaque floats either way.

Interchange format: one JSON object per line (UTF-8, LF), keys
``frame``/``w``/``h`` on every line, ``fps`` on line 0, and one array or null
per part.  A ``filled`` key lists parts whose values were held from a
neighboring frame, so provenance survives a round trip.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    EmptySequence,
    LayoutMismatch,
    MalformedRecord,
    PartNeverDetected,
)

PART_NAMES = ("torso", "face", "lhand", "rhand")
PART_SIZES = {"torso": 9, "face": 478, "lhand": 21, "rhand": 21}
TOTAL_JOINTS = 529

_COORD_FORMAT = ".9g"  # survives a decimal round trip bit-exactly


class PartStatus(enum.Enum):
    DETECTED = "detected"
    FILLED = "filled"
    MISSING = "missing"


# ==== joint layout =========================================================

# torso joint order
NOSE = 0
LEFT_SHOULDER = 1
RIGHT_SHOULDER = 2
LEFT_ELBOW = 3
RIGHT_ELBOW = 4
LEFT_WRIST = 5
RIGHT_WRIST = 6
LEFT_HIP = 7
RIGHT_HIP = 8

# 478-point face mesh conventions (mesh-local indices)
FACE_NOSE_TIP_MESH = 1
LEFT_PUPIL_MESH = 473
RIGHT_PUPIL_MESH = 468
# closed eye contours, loop order (last point connects back to the first)
LEFT_EYE_LOOP_MESH = (
    263, 249, 390, 373, 374, 380, 381, 382, 362,
    398, 384, 385, 386, 387, 388, 466,
)
RIGHT_EYE_LOOP_MESH = (
    33, 7, 163, 144, 145, 153, 154, 155, 133,
    173, 157, 158, 159, 160, 161, 246,
)
# nose bridge, inner/outer eye corners, and temple points: a subset that moves
# rigidly with the skull, used to estimate head pose
RIGID_FACE_MESH = (6, 168, 197, 195, 33, 133, 263, 362, 127, 356, 234, 454)


def _part_slices():
    slices = {}
    start = 0
    for name in PART_NAMES:
        slices[name] = slice(start, start + PART_SIZES[name])
        start += PART_SIZES[name]
    return slices


@dataclass(frozen=True)
class JointLayout:
    """Index arithmetic for the 529-joint stack."""

    sizes: dict = field(default_factory=lambda: dict(PART_SIZES))
    slices: dict = field(default_factory=_part_slices)

    @property
    def total(self):
        return sum(self.sizes.values())

    def part_indices(self, part):
        s = self.slices[part]
        return np.arange(s.start, s.stop)

    def face_index(self, mesh_index):
        """Global index of a face-mesh point."""
        return self.slices["face"].start + mesh_index

    @property
    def face_nose_tip(self):
        return self.face_index(FACE_NOSE_TIP_MESH)

    @property
    def left_pupil(self):
        return self.face_index(LEFT_PUPIL_MESH)

    @property
    def right_pupil(self):
        return self.face_index(RIGHT_PUPIL_MESH)

    @property
    def left_eye_loop(self):
        return tuple(self.face_index(i) for i in LEFT_EYE_LOOP_MESH)

    @property
    def right_eye_loop(self):
        return tuple(self.face_index(i) for i in RIGHT_EYE_LOOP_MESH)

    @property
    def rigid_face(self):
        return tuple(self.face_index(i) for i in RIGID_FACE_MESH)

    @property
    def rigid_torso(self):
        return (LEFT_SHOULDER, RIGHT_SHOULDER, LEFT_HIP, RIGHT_HIP)


LAYOUT = JointLayout()


def root_point(landmarks):
    """Root joint: midpoint of the shoulders."""
    return 0.5 * (landmarks[LEFT_SHOULDER] + landmarks[RIGHT_SHOULDER])


# ==== containers ===========================================================


@dataclass(frozen=True, eq=False)
class PoseFrame:
    """One frame of the 529-joint stack plus per-part provenance flags.

    A part flagged missing has every coordinate set to NaN; detected and
    filled parts are all-finite.  Instances are immutable.
    """

    frame_index: int
    landmarks: np.ndarray
    status: dict

    def __post_init__(self):
        arr = np.asarray(self.landmarks, dtype=np.float64)
        if arr.shape != (TOTAL_JOINTS, 3):
            raise LayoutMismatch(
                f"landmarks must have shape ({TOTAL_JOINTS}, 3), got {arr.shape}"
            )
        if set(self.status) != set(PART_NAMES):
            raise ValueError(f"status must cover exactly {PART_NAMES}")
        arr = arr.copy()
        for name, st in self.status.items():
            block = arr[LAYOUT.slices[name]]
            if st is PartStatus.MISSING:
                block[:] = np.nan
            elif not np.all(np.isfinite(block)):
                raise ValueError(f"part '{name}' is {st.value} but has non-finite values")
        arr.setflags(write=False)
        object.__setattr__(self, "landmarks", arr)
        object.__setattr__(self, "status", dict(self.status))

    def part(self, name):
        return self.landmarks[LAYOUT.slices[name]]

    def present(self, name):
        return self.status[name] is not PartStatus.MISSING

    def __eq__(self, other):
        if not isinstance(other, PoseFrame):
            return NotImplemented
        return (
            self.frame_index == other.frame_index
            and self.status == other.status
            and np.array_equal(self.landmarks, other.landmarks, equal_nan=True)
        )


@dataclass(frozen=True, eq=False)
class PoseSequence:
    """An ordered run of frames sharing frame size and rate."""

    frames: tuple
    fps: float
    width: int
    height: int

    def __post_init__(self):
        frames = tuple(self.frames)
        for a, b in zip(frames, frames[1:]):
            if b.frame_index <= a.frame_index:
                raise MalformedRecord(
                    b.frame_index, "frame indices must be strictly increasing"
                )
        object.__setattr__(self, "frames", frames)

    def __len__(self):
        return len(self.frames)

    def __iter__(self):
        return iter(self.frames)

    def __eq__(self, other):
        if not isinstance(other, PoseSequence):
            return NotImplemented
        return (
            self.fps == other.fps
            and self.width == other.width
            and self.height == other.height
            and self.frames == other.frames
        )

    def with_frames(self, frames):
        return PoseSequence(tuple(frames), self.fps, self.width, self.height)

    def stacked(self):
        """All landmarks as one (n_frames, 529, 3) array."""
        return np.stack([f.landmarks for f in self.frames])


# ==== JSONL parse / serialize ==============================================


def _require_int(record, key, line_no):
    v = record.get(key)
    if not isinstance(v, int) or isinstance(v, bool):
        raise MalformedRecord(line_no, f"'{key}' must be an integer")
    return v


def _parse_part(record, name, line_no):
    """Returns ((n, 3) float array, status) for one part block."""
    n = PART_SIZES[name]
    block = record.get(name, None)
    if block is None:
        return np.full((n, 3), np.nan), PartStatus.MISSING
    if not isinstance(block, list) or len(block) != n:
        raise LayoutMismatch(
            f"line {line_no}: part '{name}' must be null or {n} triples"
        )
    arr = np.empty((n, 3), dtype=np.float64)
    for j, triple in enumerate(block):
        if not isinstance(triple, list) or len(triple) != 3:
            raise LayoutMismatch(
                f"line {line_no}: part '{name}' entry {j} is not an [x, y, z] triple"
            )
        for k, v in enumerate(triple):
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise MalformedRecord(line_no, f"part '{name}' has a non-numeric value")
            arr[j, k] = float(v)
    # a non-finite coordinate invalidates the whole part
    if not np.all(np.isfinite(arr)):
        return np.full((n, 3), np.nan), PartStatus.MISSING
    return arr, PartStatus.DETECTED


def parse_sequence(data):
    """Parse JSONL bytes (or str) into a PoseSequence.

    Raises MalformedRecord/LayoutMismatch with the offending line number and
    EmptySequence when no records are present.
    """
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    lines = [ln for ln in data.split("\n") if ln.strip()]
    if not lines:
        raise EmptySequence("no records")

    frames = []
    fps = None
    width = height = None
    last_index = None
    for line_no, line in enumerate(lines):
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedRecord(line_no, f"invalid JSON ({exc.msg})") from exc
        if not isinstance(record, dict):
            raise MalformedRecord(line_no, "record is not an object")

        idx = _require_int(record, "frame", line_no)
        w = _require_int(record, "w", line_no)
        h = _require_int(record, "h", line_no)
        if line_no == 0:
            if not isinstance(record.get("fps"), (int, float)) or isinstance(
                record.get("fps"), bool
            ):
                raise MalformedRecord(line_no, "'fps' must be a number on line 0")
            fps = float(record["fps"])
            width, height = w, h
        else:
            if (w, h) != (width, height):
                raise MalformedRecord(line_no, "frame size differs from line 0")
        if last_index is not None and idx <= last_index:
            raise MalformedRecord(line_no, "frame indices must be strictly increasing")
        last_index = idx

        filled = record.get("filled", [])
        if not isinstance(filled, list) or any(p not in PART_NAMES for p in filled):
            raise MalformedRecord(line_no, "'filled' must list known part names")

        blocks = []
        status = {}
        for name in PART_NAMES:
            arr, st = _parse_part(record, name, line_no)
            if st is PartStatus.DETECTED and name in filled:
                st = PartStatus.FILLED
            blocks.append(arr)
            status[name] = st
        frames.append(PoseFrame(idx, np.vstack(blocks), status))

    return PoseSequence(tuple(frames), fps, width, height)


def _fmt(v):
    return format(float(v), _COORD_FORMAT)


def _part_text(arr):
    return "[" + ",".join(
        "[%s,%s,%s]" % (_fmt(r[0]), _fmt(r[1]), _fmt(r[2])) for r in arr
    ) + "]"


def serialize_sequence(seq):
    """Serialize to JSONL bytes; output re-parses to an equal sequence.

    Coordinates are written with 9 significant decimal digits, which reparses
    to the identical double for any value that itself came from the
    interchange format.
    """
    out = []
    for i, frame in enumerate(seq.frames):
        parts_text = []
        for name in PART_NAMES:
            if frame.status[name] is PartStatus.MISSING:
                parts_text.append(f'"{name}":null')
            else:
                parts_text.append(f'"{name}":{_part_text(frame.part(name))}')
        filled = [n for n in PART_NAMES if frame.status[n] is PartStatus.FILLED]
        head = f'"frame":{frame.frame_index},"w":{seq.width},"h":{seq.height}'
        if i == 0:
            head += f',"fps":{_fmt(seq.fps)}'
        line = "{" + head + "," + ",".join(parts_text)
        if filled:
            line += ',"filled":[' + ",".join(f'"{n}"' for n in filled) + "]"
        line += "}"
        out.append(line)
    return ("\n".join(out) + ("\n" if out else "")).encode("utf-8")


def load_sequence(path):
    with open(path, "rb") as fh:
        return parse_sequence(fh.read())


def save_sequence(seq, path):
    with open(path, "wb") as fh:
        fh.write(serialize_sequence(seq))


# ==== gap filling ==========================================================


def fill_missing(seq):
    """Replace missing parts with the most recent available value.

    Leading gaps are back-filled from the first available frame.  Newly
    filled parts are flagged FILLED; frames with data are left untouched.
    Raises PartNeverDetected if a part has no value anywhere.
    """
    n = len(seq.frames)
    new_landmarks = [f.landmarks.copy() for f in seq.frames]
    new_status = [dict(f.status) for f in seq.frames]
    for name in PART_NAMES:
        sl = LAYOUT.slices[name]
        present = [i for i, f in enumerate(seq.frames) if f.present(name)]
        if not present:
            raise PartNeverDetected(f"part '{name}' has no value in any frame")
        for i in range(n):
            if seq.frames[i].present(name):
                continue
            # most recent frame with a value, else the first one after i
            earlier = [j for j in present if j < i]
            src = earlier[-1] if earlier else present[0]
            new_landmarks[i][sl] = seq.frames[src].landmarks[sl]
            new_status[i][name] = PartStatus.FILLED
    frames = [
        PoseFrame(f.frame_index, lm, st)
        for f, lm, st in zip(seq.frames, new_landmarks, new_status)
    ]
    return seq.with_frames(frames)
