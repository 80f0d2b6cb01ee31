"""Command-line front door for every pipeline stage.

Exit codes: 0 success, 1 validation error, 2 I/O error. All commands are
deterministic for a fixed --seed.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import __version__


class _Parser(argparse.ArgumentParser):
    # argument mistakes are validation errors (exit 1), not I/O errors
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="artvista",
        description="Paint-by-number templates, sketches, and reference images.",
    )
    parser.add_argument("--version", action="version", version=f"artvista {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    pbn = sub.add_parser(
        "pbn",
        help="build a paint-by-number template from an image",
        description="Build a numbered paint-by-number template from IMAGE.",
    )
    pbn.add_argument("image", metavar="IMAGE", help="input PNG or JPEG")
    pbn.add_argument("--colors", type=int, default=16, metavar="K",
                     help="palette size; 16 is the default, 8 the simplified preset (default: %(default)s)")
    pbn.add_argument("--min-region", type=float, default=0.05, metavar="PCT",
                     help="merge regions smaller than PCT%% of the canvas (default: %(default)s)")
    pbn.add_argument("--seed", type=int, default=0, help="deterministic seed (default: %(default)s)")
    pbn.add_argument("--simplify", type=float, default=0.0, metavar="PX",
                     help="contour simplification tolerance in pixels (default: %(default)s)")
    pbn.add_argument("--svg", metavar="OUT.svg", help="write the template as SVG")
    pbn.add_argument("--json", metavar="OUT.json", help="write the template document as JSON")
    pbn.add_argument("--png", metavar="OUT.png", help="write the outline template as PNG")

    sketch = sub.add_parser(
        "sketch",
        help="extract a line sketch at a difficulty level",
        description="Extract a line sketch from IMAGE at the chosen difficulty level.",
    )
    sketch.add_argument("image", metavar="IMAGE", help="input PNG or JPEG")
    sketch.add_argument("--level", choices=("abstract", "intermediate", "advanced"),
                        default="intermediate", help="sketch difficulty (default: %(default)s)")
    sketch.add_argument("--seed", type=int, default=0, help="deterministic seed (default: %(default)s)")
    sketch.add_argument("--out", required=True, metavar="OUT.png", help="output PNG path")

    palette = sub.add_parser(
        "palette",
        help="print the extracted palette as a table",
        description="Print the palette of IMAGE: number, hex, pixel share.",
    )
    palette.add_argument("image", metavar="IMAGE", help="input PNG or JPEG")
    palette.add_argument("--colors", type=int, default=16, metavar="K",
                         help="palette size (default: %(default)s)")
    palette.add_argument("--seed", type=int, default=0, help="deterministic seed (default: %(default)s)")

    generate = sub.add_parser(
        "generate",
        help="generate reference images (mock unless ARTVISTA_GENAI_URL is set)",
        description="Generate reference images from a text prompt.",
    )
    generate.add_argument("--prompt", required=True, help="text description of the scene")
    generate.add_argument("--count", type=int, default=1, help="number of images, 1..8 (default: %(default)s)")
    generate.add_argument("--seed", type=int, default=0, help="deterministic seed (default: %(default)s)")
    generate.add_argument("--style", choices=("realistic", "colorful", "watercolor", "oil"),
                          default=None, help="optional style tag")
    generate.add_argument("--out-dir", required=True, metavar="DIR", help="directory for the PNGs")

    serve = sub.add_parser(
        "serve",
        help="run the HTTP service",
        description="Run the artvista HTTP service.",
    )
    serve.add_argument("--port", type=int, default=None,
                       help="listen port (default: $ARTVISTA_PORT or 8080)")
    serve.add_argument("--data-dir", default=None, metavar="DIR",
                       help="object store root (default: $ARTVISTA_DATA_DIR or ./artvista-data)")
    return parser


def _load(path):
    from .raster import load_image_file

    return load_image_file(path)


def _cmd_pbn(args) -> int:
    from . import exporter
    from .raster import save_png
    from .regionizer import build_template

    if args.colors < 1:
        print("artvista pbn: error: --colors must be >= 1", file=sys.stderr)
        return 1
    if not 0 <= args.min_region < 100:
        print("artvista pbn: error: --min-region must be in [0, 100)", file=sys.stderr)
        return 1
    if args.simplify < 0:
        print("artvista pbn: error: --simplify must be >= 0", file=sys.stderr)
        return 1
    img = _load(args.image)
    template = build_template(
        img,
        k=args.colors,
        seed=args.seed,
        min_area_fraction=args.min_region / 100.0,
        simplify_tolerance=args.simplify,
    )
    if args.json:
        with open(args.json, "wb") as fh:
            fh.write(exporter.template_to_json(template))
    if args.svg:
        with open(args.svg, "wb") as fh:
            fh.write(exporter.render_template_svg(template))
    if args.png:
        save_png(exporter.render_template_png(template), args.png)
    print(
        f"template: {len(template.regions)} regions, "
        f"{len(template.palette.entries)} colors, canvas {template.canvas[0]}x{template.canvas[1]}"
    )
    return 0


def _cmd_sketch(args) -> int:
    from .raster import encode_gray_png
    from .sketcher import generate_sketch

    img = _load(args.image)
    sketch = generate_sketch(img, args.level, seed=args.seed)
    with open(args.out, "wb") as fh:
        fh.write(encode_gray_png(sketch.strokes))
    print(f"sketch: level {sketch.level}, {sketch.strokes.shape[1]}x{sketch.strokes.shape[0]}")
    return 0


def _cmd_palette(args) -> int:
    import numpy as np

    from .colorquant import quantize_colors

    if args.colors < 1:
        print("artvista palette: error: --colors must be >= 1", file=sys.stderr)
        return 1
    img = _load(args.image)
    palette, imap = quantize_colors(img, args.colors, seed=args.seed)
    counts = np.bincount(imap.indices.ravel(), minlength=len(palette.entries))
    total = imap.indices.size
    print("number  hex      share")
    for e in palette.entries:
        share = counts[e.number - 1] / total
        print(f"{e.number:>6}  #{e.srgb[0]:02x}{e.srgb[1]:02x}{e.srgb[2]:02x}  {share:6.2%}")
    return 0


def _cmd_generate(args) -> int:
    from .genai import BackendConfig, GenRequest, generate_reference_images
    from .raster import save_png

    req = GenRequest(prompt=args.prompt, count=args.count, seed=args.seed, style=args.style)
    cfg = BackendConfig.from_env()
    images = generate_reference_images(cfg, req)
    os.makedirs(args.out_dir, exist_ok=True)
    for i, img in enumerate(images):
        path = os.path.join(args.out_dir, f"reference-{args.seed}-{i}.png")
        save_png(img, path)
        print(path)
    return 0


def _cmd_serve(args) -> int:
    import logging

    import uvicorn

    from .service import create_app

    port = args.port if args.port is not None else int(os.environ.get("ARTVISTA_PORT", "8080"))
    data_dir = args.data_dir or os.environ.get("ARTVISTA_DATA_DIR", "./artvista-data")
    # structured request logs go to stdout, one JSON object per line
    handler = logging.StreamHandler(sys.stdout)
    handler.setFormatter(logging.Formatter("%(message)s"))
    service_log = logging.getLogger("artvista.service")
    service_log.addHandler(handler)
    service_log.setLevel(logging.INFO)
    app = create_app(data_dir)
    uvicorn.run(app, host="127.0.0.1", port=port, log_level="warning")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handler = {
        "pbn": _cmd_pbn,
        "sketch": _cmd_sketch,
        "palette": _cmd_palette,
        "generate": _cmd_generate,
        "serve": _cmd_serve,
    }[args.command]
    try:
        return handler(args)
    except ValueError as exc:
        print(f"artvista {args.command}: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"artvista {args.command}: i/o error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
