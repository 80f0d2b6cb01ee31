#!/usr/bin/env python3
"""Produce a full demo set into an output directory: a mock reference image,
its paint-by-number template (JSON/SVG/PNG, plus a fully painted preview),
and the three sketch levels.

    python scripts/render_demo.py --out demo --seed 7
"""

import argparse
from pathlib import Path

from artvista.exporter import (
    render_filled_png,
    render_template_png,
    render_template_svg,
    template_to_json,
)
from artvista.genai import BackendConfig, GenRequest, generate_reference_images
from artvista.raster import encode_gray_png, save_png
from artvista.regionizer import build_template
from artvista.sketcher import LEVELS, generate_sketch


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="demo")
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--colors", type=int, default=8)
    parser.add_argument(
        "--prompt", default="a Japanese tower and mountain in spring"
    )
    args = parser.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    cfg = BackendConfig.from_env()
    img = generate_reference_images(
        cfg, GenRequest(prompt=args.prompt, count=1, seed=args.seed)
    )[0]
    save_png(img, out / "reference.png")

    template = build_template(img, k=args.colors, seed=args.seed)
    (out / "template.json").write_bytes(template_to_json(template))
    (out / "template.svg").write_bytes(render_template_svg(template))
    save_png(render_template_png(template), out / "template.png")
    fills = {r.id: r.number for r in template.regions}
    save_png(render_filled_png(template, fills), out / "template_painted.png")

    for level in LEVELS:
        sketch = generate_sketch(img, level, seed=args.seed)
        (out / f"sketch_{level}.png").write_bytes(encode_gray_png(sketch.strokes))

    print(f"wrote demo set to {out}/ ({len(template.regions)} regions, "
          f"{len(template.palette.entries)} colors)")


if __name__ == "__main__":
    main()
