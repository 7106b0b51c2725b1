"""Synthetic skeleton sequences for tests, fixtures, and demos.

Base skeletons are laid out in 256-space with two properties that make
retargeting math exact on them: the face-mesh nose tip coincides with the
torso nose joint, and both rigid subsets have diagonal centered second
moments (their principal axes line up with the coordinate axes).  Rigid
motion sequences rotate the base about its root with an identity rotation on
frame 0, so per-frame alignment scales stay constant.
"""
from __future__ import annotations

import numpy as np

from .landmarks import (
    FACE_NOSE_TIP_MESH,
    LAYOUT,
    LEFT_ELBOW,
    LEFT_HIP,
    LEFT_SHOULDER,
    LEFT_WRIST,
    NOSE,
    PART_NAMES,
    RIGID_FACE_MESH,
    RIGHT_ELBOW,
    RIGHT_HIP,
    RIGHT_SHOULDER,
    RIGHT_WRIST,
    TOTAL_JOINTS,
    PartStatus,
    PoseFrame,
    PoseSequence,
    root_point,
)


def rotation_about(axis, angle):
    """Rodrigues rotation matrix for a row-vector convention (X @ R)."""
    u = np.asarray(axis, dtype=np.float64)
    u = u / np.linalg.norm(u)
    k = np.array(
        [[0.0, -u[2], u[1]], [u[2], 0.0, -u[0]], [-u[1], u[0], 0.0]]
    )
    r = np.eye(3) + np.sin(angle) * k + (1.0 - np.cos(angle)) * (k @ k)
    return r.T  # transpose: rows act from the right


def _principal_axes(points):
    """Rotation aligning the centered point cloud with the coordinate axes."""
    centered = points - points.mean(axis=0)
    _, vecs = np.linalg.eigh(centered.T @ centered)
    if np.linalg.det(vecs) < 0:
        vecs[:, 0] = -vecs[:, 0]
    return vecs


def base_skeleton(seed=0, root=(128.0, 100.0, 8.0)):
    """A plausible 529-joint upper body in 256-space pixel coordinates."""
    rng = np.random.default_rng(seed)
    r = np.asarray(root, dtype=np.float64)
    lm = np.zeros((TOTAL_JOINTS, 3))

    half, drop, tilt = 45.0, 70.0, 6.0
    torso = np.zeros((9, 3))
    torso[NOSE] = r + (0.0, -40.0, -4.0)
    # alternating z offsets keep the shoulder/hip cross moments zero
    torso[LEFT_SHOULDER] = r + (-half, 0.0, tilt)
    torso[RIGHT_SHOULDER] = r + (half, 0.0, -tilt)
    torso[LEFT_HIP] = r + (-half, drop, -tilt)
    torso[RIGHT_HIP] = r + (half, drop, tilt)
    torso[LEFT_ELBOW] = r + (-58.0, 35.0, 2.0)
    torso[RIGHT_ELBOW] = r + (58.0, 35.0, -2.0)
    torso[LEFT_WRIST] = r + (-66.0, 68.0, 4.0)
    torso[RIGHT_WRIST] = r + (66.0, 68.0, -4.0)
    lm[LAYOUT.slices["torso"]] = torso

    face_center = r + (0.0, -48.0, -2.0)
    face = face_center + rng.uniform(-1.0, 1.0, size=(478, 3)) * (22.0, 26.0, 12.0)
    rigid = list(RIGID_FACE_MESH)
    axes = _principal_axes(face[rigid])
    c = face[rigid].mean(axis=0)
    face = (face - c) @ axes + c
    face += torso[NOSE] - face[FACE_NOSE_TIP_MESH]  # pin the nose tip exactly
    lm[LAYOUT.slices["face"]] = face

    lm[LAYOUT.slices["lhand"]] = torso[LEFT_WRIST] + rng.uniform(
        -1.0, 1.0, size=(21, 3)
    ) * (10.0, 12.0, 5.0)
    lm[LAYOUT.slices["rhand"]] = torso[RIGHT_WRIST] + rng.uniform(
        -1.0, 1.0, size=(21, 3)
    ) * (10.0, 12.0, 5.0)
    return lm


def axis_scaled(base, scales):
    """Scale a skeleton per axis about its root; the root stays put."""
    r = root_point(base)
    return r + (base - r) * np.asarray(scales, dtype=np.float64)


def rigid_motion_sequence(base, n_frames=30, seed=1, max_angle=0.12, fps=30.0):
    """Rotate the base about its root; frame 0 keeps the identity pose."""
    rng = np.random.default_rng(seed)
    r = root_point(base)
    status = {n: PartStatus.DETECTED for n in PART_NAMES}
    frames = []
    for i in range(n_frames):
        if i == 0:
            q = np.eye(3)
        else:
            axis = rng.standard_normal(3)
            q = rotation_about(axis, float(rng.uniform(-max_angle, max_angle)))
        frames.append(PoseFrame(i, (base - r) @ q + r, status))
    return PoseSequence(tuple(frames), fps, 256, 256)


def embed_normalized(seq, width, height, scale=1.0, offset=(0.0, 0.0)):
    """Place a 256-space sequence inside a larger frame, tracker-normalized.

    Landmarks become x/width, y/height with z kept on the width-comparable
    scale, which is what raw tracker output looks like before cropping.
    """
    ox, oy = offset
    frames = []
    for frame in seq:
        lm = frame.landmarks.copy()
        lm[:, 0] = (lm[:, 0] * scale + ox) / width
        lm[:, 1] = (lm[:, 1] * scale + oy) / height
        lm[:, 2] = lm[:, 2] * scale / width
        frames.append(PoseFrame(frame.frame_index, lm, frame.status))
    return PoseSequence(tuple(frames), seq.fps, width, height)
