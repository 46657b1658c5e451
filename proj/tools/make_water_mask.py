#!/usr/bin/env python3
"""Downsample the global-land-mask GLOBE ocean mask into a WMSK file.

usage: make_water_mask.py globe_combined_mask_compressed.npz CELL_DEG OUT.wmsk

A cell is water (1) when at least half of its source samples are ocean.
"""
import struct
import sys

import numpy as np


def main():
    src, cell_deg, out = sys.argv[1], float(sys.argv[2]), sys.argv[3]
    ocean = np.load(src)["mask"]  # (21600, 43200), True = ocean, row 0 at +90
    rows, cols = int(round(180 / cell_deg)), int(round(360 / cell_deg))
    fy, fx = ocean.shape[0] // rows, ocean.shape[1] // cols
    frac = ocean[: rows * fy, : cols * fx].reshape(rows, fy, cols, fx).mean(axis=(1, 3))
    water = (frac >= 0.5).astype(np.uint8)
    packed = np.packbits(water, axis=1)  # MSB-first, each row padded to a byte
    with open(out, "wb") as f:
        f.write(b"WMSK" + struct.pack("<III", rows, cols, 0))
        f.write(packed.tobytes())
    print(f"{out}: {rows}x{cols}, land fraction {1 - water.mean():.3f}")


if __name__ == "__main__":
    main()
