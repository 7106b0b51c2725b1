"""Color scheme construction and conditioning-image rasterization.

The color oracles are closed forms (quantization and linear interpolation
computed by hand); raster correctness is checked structurally: center
pixels, channel partitions, and a flood-fill connectivity probe for the
eye contours.
"""
from __future__ import annotations

from collections import deque
from pathlib import Path

import numpy as np
import pytest

from signretarget.conditioning import (
    PART_B,
    ColorScheme,
    build_color_scheme,
    compose_conditioning,
    median_template_pose,
    rasterize_ccbr,
    rasterize_gaze,
    LEFT_PUPIL_COLOR,
    RIGHT_PUPIL_COLOR,
)
from signretarget.errors import MissingLandmarks
from signretarget.landmarks import (
    LAYOUT,
    LEFT_EYE_LOOP_MESH,
    LEFT_PUPIL_MESH,
    PART_NAMES,
    RIGHT_EYE_LOOP_MESH,
    RIGHT_PUPIL_MESH,
    TOTAL_JOINTS,
    PartStatus,
    PoseFrame,
    PoseSequence,
)
from signretarget.pngio import encode_png, read_png, write_png
from signretarget.synth import base_skeleton


def detected():
    return {name: PartStatus.DETECTED for name in PART_NAMES}


def grid_landmarks():
    """All 529 joints on an 11 px grid: no color collisions, no overlap."""
    lm = np.zeros((TOTAL_JOINTS, 3))
    idx = np.arange(TOTAL_JOINTS)
    lm[:, 0] = 6.0 + 11.0 * (idx % 23)
    lm[:, 1] = 6.0 + 11.0 * (idx // 23)
    return lm


@pytest.fixture(scope="module")
def grid_frame():
    return PoseFrame(0, grid_landmarks(), detected())


@pytest.fixture(scope="module")
def grid_scheme(grid_frame):
    return build_color_scheme(grid_frame)


def test_quantization_boundary_and_half():
    lm = grid_landmarks()
    lm[0, :2] = (0.0, 0.0)            # nose, first torso joint
    lm[9, :2] = (127.5, 63.75)        # first face joint: (0.5, 0.25) of 255
    scheme = build_color_scheme(PoseFrame(0, lm, detected()))
    assert tuple(scheme.joint_colors[0]) == (0, 0, PART_B["torso"])
    assert tuple(scheme.joint_colors[9]) == (128, 64, PART_B["face"])


def test_collision_resolved_by_r_nudge():
    lm = grid_landmarks()
    face = LAYOUT.slices["face"].start
    lm[face + 4, :2] = (55.0, 99.0)
    lm[face + 7, :2] = (55.0, 99.0)
    scheme = build_color_scheme(PoseFrame(0, lm, detected()))
    first = scheme.joint_colors[face + 4]
    second = scheme.joint_colors[face + 7]
    assert tuple(first) == (55, 99, PART_B["face"])
    assert tuple(second) == (56, 99, PART_B["face"])


def test_scheme_colors_unique_and_b_constants(grid_scheme):
    colors = {tuple(c) for c in grid_scheme.joint_colors}
    assert len(colors) == TOTAL_JOINTS
    for name in PART_NAMES:
        block = grid_scheme.joint_colors[LAYOUT.slices[name]]
        assert np.all(block[:, 2] == PART_B[name])


def test_scheme_missing_part_raises(grid_frame):
    status = detected()
    status["rhand"] = PartStatus.MISSING
    frame = PoseFrame(0, grid_frame.landmarks, status)
    with pytest.raises(MissingLandmarks):
        build_color_scheme(frame)


def test_bone_interpolation_closed_form():
    """Endpoints R=0 and R=255 with m=3 give interior R = 64, 128, 191."""
    lm = grid_landmarks()
    lm[1, :2] = (0.0, 0.0)      # left shoulder
    lm[2, :2] = (255.0, 0.0)    # right shoulder, bone (1, 2)
    scheme = build_color_scheme(PoseFrame(0, lm, detected()), m=3)
    colors = scheme.interpolated_colors(1, 2)
    assert [int(c[0]) for c in colors] == [64, 128, 191]
    assert np.all(colors[:, 1] == 0)
    assert np.all(colors[:, 2] == PART_B["torso"])


def test_bone_interpolation_monotone(grid_scheme):
    for a, b in grid_scheme.bones:
        colors = grid_scheme.interpolated_colors(a, b).astype(np.int64)
        path = np.vstack(
            [
                grid_scheme.joint_colors[a].astype(np.int64),
                colors,
                grid_scheme.joint_colors[b].astype(np.int64),
            ]
        )
        for ch in range(3):
            diffs = np.diff(path[:, ch])
            assert np.all(diffs >= 0) or np.all(diffs <= 0)


def test_interpolated_colors_are_convex(grid_scheme):
    for a, b in grid_scheme.bones:
        ca = grid_scheme.joint_colors[a].astype(np.float64)
        cb = grid_scheme.joint_colors[b].astype(np.float64)
        lo = np.minimum(ca, cb) - 0.5
        hi = np.maximum(ca, cb) + 0.5
        for c in grid_scheme.interpolated_colors(a, b).astype(np.float64):
            assert np.all(c >= lo) and np.all(c <= hi)


def test_center_pixels_carry_scheme_colors(grid_frame, grid_scheme):
    img = rasterize_ccbr(grid_frame, grid_scheme)
    for j in range(TOTAL_JOINTS):
        x, y = int(grid_frame.landmarks[j, 0]), int(grid_frame.landmarks[j, 1])
        assert tuple(img[y, x]) == tuple(grid_scheme.joint_colors[j]), j


def test_nonblack_b_channel_is_a_part_constant(grid_frame, grid_scheme):
    img = rasterize_ccbr(grid_frame, grid_scheme)
    nonblack = img[np.any(img != 0, axis=2)]
    assert nonblack.size > 0
    assert set(np.unique(nonblack[:, 2])) <= set(PART_B.values())


def test_ccbr_strict_and_lenient(grid_frame, grid_scheme):
    status = detected()
    status["lhand"] = PartStatus.MISSING
    frame = PoseFrame(0, grid_frame.landmarks, status)
    with pytest.raises(MissingLandmarks):
        rasterize_ccbr(frame, grid_scheme, strict=True)
    img = rasterize_ccbr(frame, grid_scheme)
    assert not np.any(img[:, :, 2] == PART_B["lhand"])
    full = rasterize_ccbr(grid_frame, grid_scheme)
    assert np.any(full[:, :, 2] == PART_B["lhand"])


def test_out_of_frame_joints_are_clipped(grid_scheme):
    lm = grid_landmarks()
    lm[:, 0] += 500.0  # everything far right of the raster
    img = rasterize_ccbr(PoseFrame(0, lm, detected()), grid_scheme)
    assert img.shape == (256, 256, 3)
    assert not np.any(img)


def test_rasterize_determinism(grid_frame, grid_scheme):
    a = rasterize_ccbr(grid_frame, grid_scheme)
    b = rasterize_ccbr(grid_frame, grid_scheme)
    assert np.array_equal(a, b)
    assert encode_png(a) == encode_png(b)
    g1 = rasterize_gaze(grid_frame)
    g2 = rasterize_gaze(grid_frame)
    assert np.array_equal(g1, g2)


def eye_test_frame():
    """Both eye contours laid out as 16-point circles, pupils centered."""
    lm = grid_landmarks()
    face = LAYOUT.slices["face"].start
    for center, loop, pupil in (
        ((80.0, 80.0), LEFT_EYE_LOOP_MESH, LEFT_PUPIL_MESH),
        ((170.0, 80.0), RIGHT_EYE_LOOP_MESH, RIGHT_PUPIL_MESH),
    ):
        angles = 2.0 * np.pi * np.arange(16) / 16.0
        for mesh, t in zip(loop, angles):
            lm[face + mesh, 0] = center[0] + 10.0 * np.cos(t)
            lm[face + mesh, 1] = center[1] + 10.0 * np.sin(t)
        lm[face + pupil, :2] = center
    return PoseFrame(0, lm, detected())


def flood_from_border(img):
    """4-neighborhood reach of exact-black pixels starting at the border."""
    black = ~np.any(img != 0, axis=2)
    visited = np.zeros(black.shape, dtype=bool)
    queue = deque()
    h, w = black.shape
    for x in range(w):
        for y in (0, h - 1):
            if black[y, x] and not visited[y, x]:
                visited[y, x] = True
                queue.append((y, x))
    for y in range(h):
        for x in (0, w - 1):
            if black[y, x] and not visited[y, x]:
                visited[y, x] = True
                queue.append((y, x))
    while queue:
        y, x = queue.popleft()
        for dy, dx in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            ny, nx = y + dy, x + dx
            if 0 <= ny < h and 0 <= nx < w and black[ny, nx] and not visited[ny, nx]:
                visited[ny, nx] = True
                queue.append((ny, nx))
    return visited


def test_eye_contours_enclose_interiors():
    img = rasterize_gaze(eye_test_frame())
    reach = flood_from_border(img)
    # pupil disks cover the centers; probe just beside them, still inside
    assert not reach[80, 84]
    assert not reach[80, 174]
    assert reach[5, 5]          # background stays connected
    assert reach[128, 128]      # area between the eyes is outside both loops


def test_pupil_center_colors():
    img = rasterize_gaze(eye_test_frame())
    assert tuple(img[80, 80]) == LEFT_PUPIL_COLOR
    assert tuple(img[80, 170]) == RIGHT_PUPIL_COLOR
    assert LEFT_PUPIL_COLOR != RIGHT_PUPIL_COLOR


def test_gaze_face_missing(grid_frame):
    status = detected()
    status["face"] = PartStatus.MISSING
    frame = PoseFrame(0, grid_frame.landmarks, status)
    with pytest.raises(MissingLandmarks):
        rasterize_gaze(frame, strict=True)
    assert not np.any(rasterize_gaze(frame))


def test_compose_channels_and_raw_round_trip(grid_frame, grid_scheme):
    cond = compose_conditioning(grid_frame, grid_scheme)
    assert np.array_equal(cond.ccbr, rasterize_ccbr(grid_frame, grid_scheme))
    assert np.array_equal(cond.gaze, rasterize_gaze(grid_frame))
    tensor = cond.tensor()
    assert tensor.shape == (256, 256, 6)
    assert np.array_equal(tensor[:, :, :3], cond.ccbr)
    assert np.array_equal(tensor[:, :, 3:], cond.gaze)
    raw = cond.raw_bytes()
    back = np.frombuffer(raw, dtype=np.uint8).reshape(256, 256, 6)
    assert np.array_equal(back, tensor)


def test_scheme_json_round_trip(grid_scheme, tmp_path):
    path = tmp_path / "scheme.json"
    grid_scheme.save(path)
    again = ColorScheme.load(path)
    assert np.array_equal(again.joint_colors, grid_scheme.joint_colors)
    assert again.bones == grid_scheme.bones
    assert again.m == grid_scheme.m
    assert again.part_b == grid_scheme.part_b


def test_png_round_trip(tmp_path, rng):
    img = rng.integers(0, 256, size=(16, 16, 3), dtype=np.uint8)
    data = encode_png(img)
    assert data == encode_png(img)
    path = tmp_path / "t.png"
    write_png(path, img)
    assert path.read_bytes() == data
    assert np.array_equal(read_png(path), img)


def test_median_template_pose():
    base = grid_landmarks()
    frames = []
    for i in range(3):
        frames.append(PoseFrame(i, base + float(i), detected()))
    status = detected()
    status["rhand"] = PartStatus.MISSING
    lm = base.copy()
    lm += 50.0  # an outlier frame whose rhand does not count
    frames.append(PoseFrame(3, lm, status))
    seq = PoseSequence(tuple(frames), 30.0, 256, 256)
    template = median_template_pose(seq)
    sl = LAYOUT.slices["rhand"]
    # four frames elsewhere: lower median is base + 1; rhand sees only three
    assert np.allclose(template.landmarks[sl], base[sl] + 1.0)


def test_golden_conditioning_images():
    frame = PoseFrame(0, base_skeleton(seed=0), detected())
    scheme = build_color_scheme(frame)
    golden = Path(__file__).parent / "golden"
    assert encode_png(rasterize_ccbr(frame, scheme)) == (
        golden / "ccbr_base.png"
    ).read_bytes()
    assert encode_png(rasterize_gaze(frame)) == (
        golden / "gaze_base.png"
    ).read_bytes()
