#!/usr/bin/env python3
"""Compare template region counts for the default (16) and simplified (8)
palette presets over a procedural corpus.

    python scripts/region_count_vs_k.py --photos 50 --size 96
"""

import argparse

from artvista.genai import BackendConfig, GenRequest, generate_reference_images
from artvista.raster import downscale_for_analysis
from artvista.regionizer import build_template


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--photos", type=int, default=50)
    parser.add_argument("--size", type=int, default=96)
    args = parser.parse_args()

    cfg = BackendConfig()
    fewer_or_equal = 0
    r16_all, r8_all = [], []
    for i in range(args.photos):
        img = generate_reference_images(
            cfg, GenRequest(prompt=f"corpus photo {i}", count=1, seed=i)
        )[0]
        img = downscale_for_analysis(img, args.size)
        r16 = len(build_template(img, k=16, seed=i).regions)
        r8 = len(build_template(img, k=8, seed=i).regions)
        r16_all.append(r16)
        r8_all.append(r8)
        fewer_or_equal += r8 <= r16
    r16_all.sort()
    r8_all.sort()
    n = args.photos
    print(f"k=16 regions: median {r16_all[n // 2]}, range {r16_all[0]}..{r16_all[-1]}")
    print(f"k=8  regions: median {r8_all[n // 2]}, range {r8_all[0]}..{r8_all[-1]}")
    print(f"k=8 <= k=16 on {fewer_or_equal}/{n} photos ({100 * fewer_or_equal / n:.0f}%)")


if __name__ == "__main__":
    main()
