"""Motion transfer between two cropped pose sequences.

The skeleton is split into two parts, each carrying a small rigid landmark
subset.  Calibration aligns every frame's rigid subset onto a shared shape
template, summarizes both sequences by geometric medians in that aligned
space, and fits per-axis scales between them.  Per-frame transfer then maps
a source frame into template space, re-proportions it, and rotates it back
with the source frame's own orientation; translation is dropped because
unification re-anchors the skeleton at the target's median root.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .crop import lower_median
from .errors import (
    DegenerateConfiguration,
    EmptySequence,
    InsufficientFrames,
)
from .geometry import (
    AxisScales,
    fit_axis_scales,
    geometric_median,
    gpa_template,
    umeyama,
)
from .landmarks import (
    FACE_NOSE_TIP_MESH,
    LAYOUT,
    LEFT_SHOULDER,
    NOSE,
    PART_NAMES,
    PART_SIZES,
    RIGHT_SHOULDER,
    RIGID_FACE_MESH,
    PartStatus,
    PoseFrame,
    PoseSequence,
    fill_missing,
    root_point,
)

_RANK_RTOL = 1e-12  # matches the rotation-ambiguity cutoff in geometry


@dataclass(frozen=True)
class PartSpec:
    """A transferable skeleton part and its rigid anchor landmarks.

    full_indices: global joint indices making up the part.
    rigid_local: row indices INTO the part block whose landmarks move
        rigidly and define the part's alignment.
    status_parts: landmark-group names the part spans (for flagging).
    rigid_part: the landmark group that hosts the rigid subset.
    """

    name: str
    full_indices: np.ndarray
    rigid_local: np.ndarray
    status_parts: tuple
    rigid_part: str

    def __post_init__(self):
        full = np.asarray(self.full_indices, dtype=np.intp)
        rigid = np.asarray(self.rigid_local, dtype=np.intp)
        if rigid.size < 3:
            raise DegenerateConfiguration("rigid subset needs at least 3 landmarks")
        if np.any(rigid < 0) or np.any(rigid >= full.size):
            raise IndexError("rigid_local indexes outside the part block")
        full.setflags(write=False)
        rigid.setflags(write=False)
        object.__setattr__(self, "full_indices", full)
        object.__setattr__(self, "rigid_local", rigid)
        object.__setattr__(self, "status_parts", tuple(self.status_parts))


def default_parts(rigid_face=None):
    """The two-part split: full face mesh, and torso plus both hands.

    rigid_face overrides the face-mesh indices anchoring the head part;
    the torso part is always anchored on shoulders and hips.
    """
    if rigid_face is None:
        rigid_face = RIGID_FACE_MESH
    face_sl = LAYOUT.slices["face"]
    head = PartSpec(
        name="head",
        full_indices=np.arange(face_sl.start, face_sl.stop),
        rigid_local=np.asarray(rigid_face, dtype=np.intp),
        status_parts=("face",),
        rigid_part="face",
    )
    torso_sl = LAYOUT.slices["torso"]
    lhand_sl = LAYOUT.slices["lhand"]
    torso_hands = PartSpec(
        name="torso_hands",
        full_indices=np.concatenate(
            [
                np.arange(torso_sl.start, torso_sl.stop),
                np.arange(lhand_sl.start, LAYOUT.slices["rhand"].stop),
            ]
        ),
        rigid_local=np.asarray(LAYOUT.rigid_torso, dtype=np.intp),
        status_parts=("torso", "lhand", "rhand"),
        rigid_part="torso",
    )
    return [head, torso_hands]


def _is_degenerate(points):
    """True when the point set cannot fix a rotation (umeyama would raise)."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.shape[0] < 3:
        return True
    centered = pts - pts.mean(axis=0)
    sv = np.linalg.svd(centered, compute_uv=False)
    return sv[0] == 0.0 or sv[1] <= _RANK_RTOL * sv[0]


@dataclass(frozen=True)
class PartCalibration:
    """Per-part transfer statistics in template-aligned space."""

    template: np.ndarray       # (k, 3) centered, unit Frobenius norm
    source_median: np.ndarray  # (k, 3) geometric median of aligned source rigids
    target_median: np.ndarray  # (k, 3) same for the target
    axis_scales: AxisScales    # source_median -> target_median per-axis fit
    median_scale: float        # lower median of target per-frame alignment scales

    def __post_init__(self):
        for field_name in ("template", "source_median", "target_median"):
            arr = np.asarray(getattr(self, field_name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, field_name, arr)
        object.__setattr__(self, "median_scale", float(self.median_scale))


@dataclass(frozen=True)
class RetargetCalibration:
    """Everything retarget_part_frame and unify_frame need, immutable."""

    parts: dict
    root: np.ndarray  # target median root, (3,)

    def __post_init__(self):
        root = np.asarray(self.root, dtype=np.float64).reshape(3)
        root.setflags(write=False)
        object.__setattr__(self, "root", root)
        object.__setattr__(self, "parts", dict(self.parts))

    def save(self, path):
        doc = {"root": self.root.tolist(), "parts": {}}
        for name, pc in self.parts.items():
            doc["parts"][name] = {
                "template": pc.template.tolist(),
                "source_median": pc.source_median.tolist(),
                "target_median": pc.target_median.tolist(),
                "axis_scales": list(pc.axis_scales.as_array()),
                "median_scale": pc.median_scale,
            }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, path):
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        parts = {}
        for name, block in doc["parts"].items():
            parts[name] = PartCalibration(
                template=np.asarray(block["template"], dtype=np.float64),
                source_median=np.asarray(block["source_median"], dtype=np.float64),
                target_median=np.asarray(block["target_median"], dtype=np.float64),
                axis_scales=AxisScales(*(float(v) for v in block["axis_scales"])),
                median_scale=float(block["median_scale"]),
            )
        return cls(parts=parts, root=np.asarray(doc["root"], dtype=np.float64))


def _usable_rigids(seq, part):
    """Rigid subsets of frames where the anchoring group is truly detected."""
    rigids = []
    for frame in seq.frames:
        if frame.status[part.rigid_part] is not PartStatus.DETECTED:
            continue
        rigid = frame.landmarks[part.full_indices][part.rigid_local]
        if _is_degenerate(rigid):
            continue
        rigids.append(rigid)
    return rigids


def calibrate(source_seq, target_seq, parts=None, tol=1e-9, max_iter=1000):
    """Build transfer statistics for every part from two cropped sequences.

    For each part the target frames define a shape template; all rigid
    subsets of both sequences are aligned onto it, reduced to geometric
    medians, and related by a per-axis scale fit.  The target's per-frame
    alignment scales yield the median body scale, and the target roots the
    median anchoring point.  Frames whose anchoring group is missing, filled,
    or geometrically degenerate are skipped; fewer than two usable frames on
    either side raises InsufficientFrames.
    """
    if parts is None:
        parts = default_parts()
    part_cals = {}
    for part in parts:
        src_rigids = _usable_rigids(source_seq, part)
        dst_rigids = _usable_rigids(target_seq, part)
        for label, rigids in (("source", src_rigids), ("target", dst_rigids)):
            if len(rigids) < 2:
                raise InsufficientFrames(
                    f"part '{part.name}': {label} sequence has "
                    f"{len(rigids)} usable frames, need at least 2"
                )
        template = gpa_template(dst_rigids)
        src_aligned = [umeyama(r, template).apply(r) for r in src_rigids]
        dst_scales = []
        dst_aligned = []
        for rigid in dst_rigids:
            tf = umeyama(rigid, template)
            dst_aligned.append(tf.apply(rigid))
            dst_scales.append(tf.s)
        s_m = geometric_median(src_aligned, tol=tol, max_iter=max_iter)
        t_m = geometric_median(dst_aligned, tol=tol, max_iter=max_iter)
        part_cals[part.name] = PartCalibration(
            template=template,
            source_median=s_m,
            target_median=t_m,
            axis_scales=fit_axis_scales(s_m, t_m),
            median_scale=lower_median(dst_scales),
        )
    roots = [
        root_point(f.landmarks)
        for f in target_seq.frames
        if f.status["torso"] is PartStatus.DETECTED
    ]
    if len(roots) < 2:
        raise InsufficientFrames(
            f"target sequence has {len(roots)} frames with a detected torso"
        )
    roots = np.asarray(roots)
    root = np.array([lower_median(roots[:, a]) for a in range(3)])
    return RetargetCalibration(parts=part_cals, root=root)


def retarget_part_frame(frame_landmarks, part, cal, transform=None):
    """Transfer one part of one source frame into the target's proportions.

    Aligns the frame's rigid subset onto the part template, carries the
    whole part block through that similarity, applies the calibrated
    per-axis scales in aligned space, and rotates back by the alignment's
    inverse rotation divided by the target's median scale.  The alignment
    translation is dropped on the way back; unify_frame re-anchors.

    A precomputed `transform` skips the alignment (degenerate-frame reuse).
    """
    pc = cal.parts[part.name]
    x = np.asarray(frame_landmarks, dtype=np.float64)
    if transform is None:
        transform = umeyama(x[part.rigid_local], pc.template)
    aligned = transform.apply(x)
    scaled = aligned * pc.axis_scales.as_array()
    return (1.0 / pc.median_scale) * scaled @ transform.R.T


def _pin_root(full, root):
    """Translate the skeleton so the shoulder midpoint IS `root`, bit-exact.

    A plain translation leaves the midpoint within an ulp of the target;
    the shoulders are then nudged over the last rounding step.  The right
    shoulder is reflected through the root, and if the midpoint still
    rounds off target both shoulder coordinates walk a few neighboring
    floats until 0.5 * (left + right) lands exactly.
    """
    out = full + (root - root_point(full))
    if np.array_equal(root_point(out), root):
        return out
    left = out[LEFT_SHOULDER].copy()
    right = out[RIGHT_SHOULDER].copy()
    for a in range(3):
        target = root[a]
        lo = left[a]
        best = None
        for _ in range(64):
            hi = 2.0 * target - lo
            cands = [hi]
            up = down = hi
            for _ in range(3):
                up = np.nextafter(up, np.inf)
                down = np.nextafter(down, -np.inf)
                cands += [up, down]
            for cand in cands:
                if 0.5 * (lo + cand) == target:
                    best = (lo, cand)
                    break
            if best is not None:
                break
            lo = np.nextafter(lo, target)  # co-adjust onto a kinder grid
        if best is None:  # pathological magnitudes; keep the ulp residual
            best = (lo, 2.0 * target - lo)
        left[a], right[a] = best
    out[LEFT_SHOULDER] = left
    out[RIGHT_SHOULDER] = right
    return out


def unify_frame(head, torso_hands, cal, frame_index=0, status=None):
    """Stitch retargeted parts into one frame anchored at the median root.

    The head block is translated so its nose tip coincides with the torso's
    nose joint, then the assembled skeleton is translated so the shoulder
    midpoint equals the calibration root exactly.
    """
    head = np.asarray(head, dtype=np.float64)
    torso_hands = np.asarray(torso_hands, dtype=np.float64)
    if head.shape != (PART_SIZES["face"], 3):
        raise ValueError(f"head block must be ({PART_SIZES['face']}, 3)")
    if torso_hands.shape != (51, 3):
        raise ValueError("torso_hands block must be (51, 3)")
    attached = torso_hands[NOSE] + (head - head[FACE_NOSE_TIP_MESH])
    full = np.empty((LAYOUT.total, 3))
    full[LAYOUT.slices["torso"]] = torso_hands[:9]
    full[LAYOUT.slices["face"]] = attached
    full[LAYOUT.slices["lhand"]] = torso_hands[9:30]
    full[LAYOUT.slices["rhand"]] = torso_hands[30:51]
    full = _pin_root(full, cal.root)
    if status is None:
        status = {name: PartStatus.DETECTED for name in PART_NAMES}
    return PoseFrame(frame_index, full, status)


def retarget_sequence(source_seq, target_seq, calibration=None, parts=None):
    """Transfer a whole source sequence onto the target's body and location.

    Missing source parts are held from neighboring frames first; frames
    whose rigid subset is degenerate reuse the previous frame's alignment
    (the first frames fall back to the next good one) and are flagged
    FILLED.  Output length, frame indices, and fps follow the source.
    """
    if not source_seq.frames:
        raise EmptySequence("source sequence has no frames")
    if parts is None:
        parts = default_parts()
    if calibration is None:
        calibration = calibrate(source_seq, target_seq, parts=parts)
    src = fill_missing(source_seq)

    # per part: alignment transform per frame, degenerate frames reuse the
    # previous good one (leading ones borrow the first good one)
    transforms = {}
    reused = {}
    for part in parts:
        pc = calibration.parts[part.name]
        per_frame = []
        for frame in src.frames:
            rigid = frame.landmarks[part.full_indices][part.rigid_local]
            if _is_degenerate(rigid):
                per_frame.append(None)
            else:
                per_frame.append(umeyama(rigid, pc.template))
        good = [i for i, tf in enumerate(per_frame) if tf is not None]
        if not good:
            raise DegenerateConfiguration(
                f"part '{part.name}': every source frame is degenerate"
            )
        reused[part.name] = {i for i, tf in enumerate(per_frame) if tf is None}
        for i in sorted(reused[part.name]):
            earlier = [j for j in good if j < i]
            per_frame[i] = per_frame[earlier[-1] if earlier else good[0]]
        transforms[part.name] = per_frame

    out_frames = []
    by_name = {p.name: p for p in parts}
    for i, frame in enumerate(src.frames):
        status = dict(frame.status)
        blocks = {}
        for name, part in by_name.items():
            x = frame.landmarks[part.full_indices]
            blocks[name] = retarget_part_frame(
                x, part, calibration, transform=transforms[name][i]
            )
            if i in reused[name]:
                for group in part.status_parts:
                    status[group] = PartStatus.FILLED
        out_frames.append(
            unify_frame(
                blocks["head"],
                blocks["torso_hands"],
                calibration,
                frame_index=frame.frame_index,
                status=status,
            )
        )
    return PoseSequence(tuple(out_frames), src.fps, src.width, src.height)
