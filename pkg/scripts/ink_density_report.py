#!/usr/bin/env python3
"""Measure per-level sketch ink density over a procedural photo corpus.

This is the experiment behind the level ordering: ink (any pixel below the
250 paper band) should grow abstract -> intermediate -> advanced on most
photos. Run:

    python scripts/ink_density_report.py --photos 10 --size 128
"""

import argparse

from artvista.genai import BackendConfig, GenRequest, generate_reference_images
from artvista.raster import downscale_for_analysis
from artvista.sketcher import LEVELS, generate_sketch

PAPER = 250


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--photos", type=int, default=10)
    parser.add_argument("--size", type=int, default=128)
    args = parser.parse_args()

    cfg = BackendConfig()
    wins = 0
    print(f"{'photo':>5}  {'abstract':>9}  {'intermediate':>12}  {'advanced':>9}  ordered")
    for i in range(args.photos):
        img = generate_reference_images(
            cfg, GenRequest(prompt=f"corpus photo {i}", count=1, seed=i)
        )[0]
        img = downscale_for_analysis(img, args.size)
        density = [
            float((generate_sketch(img, level, seed=i).strokes < PAPER).mean())
            for level in LEVELS
        ]
        ordered = density[0] < density[1] < density[2]
        wins += ordered
        print(
            f"{i:>5}  {density[0]:>9.4f}  {density[1]:>12.4f}  {density[2]:>9.4f}  "
            f"{'yes' if ordered else 'NO'}"
        )
    print(f"\nordered on {wins}/{args.photos} photos")


if __name__ == "__main__":
    main()
