"""Regenerate the golden conditioning images under tests/golden/.

Run from the repository root after an INTENTIONAL rendering change:

    python3 scripts/generate_goldens.py

The test suite compares fresh renders byte-for-byte against these files,
so regenerating them redefines what correct output looks like.
"""
from pathlib import Path

from signretarget.conditioning import build_color_scheme, rasterize_ccbr, rasterize_gaze
from signretarget.landmarks import PART_NAMES, PartStatus, PoseFrame
from signretarget.pngio import write_png
from signretarget.synth import base_skeleton


def main():
    out_dir = Path(__file__).resolve().parent.parent / "tests" / "golden"
    out_dir.mkdir(parents=True, exist_ok=True)
    frame = PoseFrame(
        0, base_skeleton(seed=0), {n: PartStatus.DETECTED for n in PART_NAMES}
    )
    scheme = build_color_scheme(frame)
    write_png(out_dir / "ccbr_base.png", rasterize_ccbr(frame, scheme))
    write_png(out_dir / "gaze_base.png", rasterize_gaze(frame))
    print(f"wrote goldens to {out_dir}")


if __name__ == "__main__":
    main()
