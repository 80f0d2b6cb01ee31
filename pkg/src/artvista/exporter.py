"""Template serialization and rendering.

The JSON document (`version: "pbn/1"`, schema in docs/template-schema.md)
is canonical: keys sorted, floats rounded to 3 decimals, compact
separators, so identical templates always serialize to identical bytes.

SVG rendering emits one even-odd path per region (outer ring plus holes in
a single `d`), a text element per non-omitted label, and a legend strip of
numbered swatches. PNG rendering rasterizes regions exactly with an
even-odd scanline fill and draws numbers with a built-in 5x7 digit face so
no font files are needed.
"""

from __future__ import annotations

import json

import numpy as np

from .colorquant import LabColor, Palette, PaletteEntry
from .raster import RasterImage
from .regionizer import Contour, PbnTemplate, TemplateRegion, TEMPLATE_VERSION


class TemplateParseError(ValueError):
    """Payload is not a well-formed template document."""


class UnsupportedVersionError(TemplateParseError):
    """Document version tag is not pbn/1."""


class TemplateValidationError(ValueError):
    """Structurally valid JSON that violates a template invariant."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


def _round3(x: float) -> float:
    return round(float(x), 3)


def _hex(srgb: tuple[int, int, int]) -> str:
    return "#{:02x}{:02x}{:02x}".format(*srgb)


def template_to_document(t: PbnTemplate) -> dict:
    return {
        "version": t.version,
        "canvas": {"width": t.canvas[0], "height": t.canvas[1]},
        "palette": [
            {
                "number": e.number,
                "hex": _hex(e.srgb),
                "lab": {"l": _round3(e.lab.L), "a": _round3(e.lab.a), "b": _round3(e.lab.b)},
            }
            for e in t.palette.entries
        ],
        "regions": [
            {
                "id": r.id,
                "number": r.number,
                "area": r.area,
                "label_omitted": r.label_omitted,
                "anchor": None
                if r.label_anchor is None
                else {
                    "x": r.label_anchor[0],
                    "y": r.label_anchor[1],
                    "clearance": _round3(r.clearance),
                },
                "contours": [
                    {"kind": c.kind, "points": [[int(x), int(y)] for x, y in c.points]}
                    for c in r.contours
                ],
            }
            for r in t.regions
        ],
    }


def template_to_json(t: PbnTemplate) -> bytes:
    doc = template_to_document(t)
    return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode("utf-8")


def _parse_hex(h: str) -> tuple[int, int, int]:
    if not (isinstance(h, str) and len(h) == 7 and h[0] == "#"):
        raise TemplateParseError(f"bad hex color {h!r}")
    return int(h[1:3], 16), int(h[3:5], 16), int(h[5:7], 16)


def template_from_json(data: bytes) -> PbnTemplate:
    """Parse and validate a pbn/1 document.

    Raises TemplateParseError for malformed payloads, UnsupportedVersionError
    for any version other than pbn/1, and TemplateValidationError (naming the
    offending field) for invariant violations.
    """
    try:
        doc = json.loads(data)
    except (ValueError, UnicodeDecodeError) as exc:
        raise TemplateParseError(f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise TemplateParseError("document root must be an object")
    version = doc.get("version")
    if version != TEMPLATE_VERSION:
        raise UnsupportedVersionError(f"unsupported version {version!r}")

    try:
        canvas = (int(doc["canvas"]["width"]), int(doc["canvas"]["height"]))
        palette_docs = list(doc["palette"])
        region_docs = list(doc["regions"])
    except (KeyError, TypeError) as exc:
        raise TemplateParseError(f"missing required field: {exc}") from exc
    if canvas[0] < 1 or canvas[1] < 1:
        raise TemplateValidationError("canvas", "dimensions must be >= 1")

    entries = []
    for i, p in enumerate(palette_docs):
        try:
            lab = p["lab"]
            entries.append(
                PaletteEntry(
                    number=int(p["number"]),
                    srgb=_parse_hex(p["hex"]),
                    lab=LabColor(float(lab["l"]), float(lab["a"]), float(lab["b"])),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, TemplateParseError):
                raise
            raise TemplateParseError(f"palette[{i}]: {exc}") from exc
        if entries[-1].number != i + 1:
            raise TemplateValidationError(
                f"palette[{i}].number", f"numbers must be contiguous from 1, got {entries[-1].number}"
            )
    palette = Palette(entries=tuple(entries), k_requested=len(entries))
    if not entries:
        raise TemplateValidationError("palette", "palette is empty")

    regions = []
    total_area = 0
    for i, r in enumerate(region_docs):
        try:
            contours = tuple(
                Contour(points=tuple((int(x), int(y)) for x, y in c["points"]), kind=str(c["kind"]))
                for c in r["contours"]
            )
            anchor_doc = r["anchor"]
            region = TemplateRegion(
                id=int(r["id"]),
                number=int(r["number"]),
                contours=contours,
                label_anchor=None
                if anchor_doc is None
                else (int(anchor_doc["x"]), int(anchor_doc["y"])),
                clearance=None if anchor_doc is None else float(anchor_doc["clearance"]),
                label_omitted=bool(r["label_omitted"]),
                area=int(r["area"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise TemplateParseError(f"regions[{i}]: {exc}") from exc
        if region.id != i:
            raise TemplateValidationError(f"regions[{i}].id", f"ids must be dense, got {region.id}")
        if not 1 <= region.number <= len(entries):
            raise TemplateValidationError(
                f"regions[{i}].number",
                f"palette number {region.number} out of range 1..{len(entries)}",
            )
        if region.area < 1:
            raise TemplateValidationError(f"regions[{i}].area", "area must be >= 1")
        for j, c in enumerate(region.contours):
            if c.kind not in ("outer", "hole"):
                raise TemplateValidationError(f"regions[{i}].contours[{j}].kind", f"bad kind {c.kind!r}")
            if len(c.points) < 4:
                raise TemplateValidationError(f"regions[{i}].contours[{j}].points", "need >= 4 points")
            if c.points[0] != c.points[-1]:
                raise TemplateValidationError(f"regions[{i}].contours[{j}].points", "contour is not closed")
        if sum(1 for c in region.contours if c.kind == "outer") != 1:
            raise TemplateValidationError(f"regions[{i}].contours", "exactly one outer contour required")
        if region.label_anchor is not None and not _point_in_region(region, region.label_anchor):
            raise TemplateValidationError(f"regions[{i}].anchor", "anchor lies outside its region")
        total_area += region.area
        regions.append(region)
    if not regions:
        raise TemplateValidationError("regions", "template has no regions")
    if total_area != canvas[0] * canvas[1]:
        raise TemplateValidationError(
            "regions", f"region areas sum to {total_area}, canvas has {canvas[0] * canvas[1]} pixels"
        )
    return PbnTemplate(canvas=canvas, palette=palette, regions=tuple(regions), version=version)


def _crossings(contours, yc: float) -> list[float]:
    xs = []
    for c in contours:
        pts = c.points
        for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
            if y0 == y1:
                continue
            lo, hi = (y0, y1) if y0 < y1 else (y1, y0)
            if lo < yc < hi:
                xs.append(x0 + (yc - y0) * (x1 - x0) / (y1 - y0))
    return xs


def _point_in_region(region: TemplateRegion, pt: tuple[int, int]) -> bool:
    """Even-odd test at the pixel center of `pt` against all contours."""
    xs = _crossings(region.contours, pt[1] + 0.5)
    return sum(1 for x in xs if x <= pt[0] + 0.5) % 2 == 1


def rasterize_regions(t: PbnTemplate) -> np.ndarray:
    """Region-id grid recovered from contours by even-odd scanline filling.

    Exact for unsimplified (crack) contours; with a simplification tolerance
    the grid is the polygon rasterization, faithful to within tolerance.
    """
    w, h = t.canvas
    grid = np.full((h, w), -1, np.int32)
    for region in t.regions:
        ys = [p[1] for c in region.contours for p in c.points]
        for row in range(max(0, min(ys)), min(h, max(ys))):
            xs = sorted(_crossings(region.contours, row + 0.5))
            for i in range(0, len(xs) - 1, 2):
                a = int(np.ceil(xs[i] - 0.5))
                b = int(np.floor(xs[i + 1] - 0.5))
                if b >= a:
                    grid[row, max(a, 0) : min(b, w - 1) + 1] = region.id
    return grid


# 5x7 digit face, row-major strings ('#' = ink)
_DIGITS = {
    "0": (" ### ", "#   #", "#  ##", "# # #", "##  #", "#   #", " ### "),
    "1": ("  #  ", " ##  ", "  #  ", "  #  ", "  #  ", "  #  ", " ### "),
    "2": (" ### ", "#   #", "    #", "   # ", "  #  ", " #   ", "#####"),
    "3": (" ### ", "#   #", "    #", "  ## ", "    #", "#   #", " ### "),
    "4": ("   # ", "  ## ", " # # ", "#  # ", "#####", "   # ", "   # "),
    "5": ("#####", "#    ", "#### ", "    #", "    #", "#   #", " ### "),
    "6": (" ### ", "#    ", "#    ", "#### ", "#   #", "#   #", " ### "),
    "7": ("#####", "    #", "   # ", "  #  ", " #   ", " #   ", " #   "),
    "8": (" ### ", "#   #", "#   #", " ### ", "#   #", "#   #", " ### "),
    "9": (" ### ", "#   #", "#   #", " ####", "    #", "    #", " ### "),
}


def _draw_number(canvas: np.ndarray, number: int, cx: int, cy: int, cell: int) -> None:
    """Stamp `number` centered at (cx, cy) with `cell` px per font pixel."""
    text = str(number)
    gw = (5 * len(text) + (len(text) - 1)) * cell
    gh = 7 * cell
    x = cx - gw // 2
    y = cy - gh // 2
    h, w = canvas.shape[:2]
    for ch in text:
        glyph = _DIGITS[ch]
        for gy in range(7):
            for gx in range(5):
                if glyph[gy][gx] == "#":
                    y0, y1 = y + gy * cell, y + (gy + 1) * cell
                    x0, x1 = x + gx * cell, x + (gx + 1) * cell
                    canvas[max(y0, 0) : min(y1, h), max(x0, 0) : min(x1, w)] = (0, 0, 0, 255)
        x += 6 * cell


def _boundary_mask(grid: np.ndarray) -> np.ndarray:
    """Canvas frame plus a 1-px line on the lower-coordinate side of cracks."""
    ink = np.zeros(grid.shape, bool)
    ink[:, :-1] |= grid[:, :-1] != grid[:, 1:]
    ink[:-1, :] |= grid[:-1, :] != grid[1:, :]
    ink[0, :] = ink[-1, :] = True
    ink[:, 0] = ink[:, -1] = True
    return ink


def render_template_png(t: PbnTemplate, scale: int = 1) -> RasterImage:
    """Outline template: white regions, black boundaries, numbered labels."""
    if scale < 1:
        raise ValueError("scale must be >= 1")
    grid = np.repeat(np.repeat(rasterize_regions(t), scale, 0), scale, 1)
    h, w = grid.shape
    out = np.full((h, w, 4), 255, np.uint8)
    out[_boundary_mask(grid)] = (0, 0, 0, 255)
    for region in t.regions:
        if region.label_anchor is None:
            continue
        ax, ay = region.label_anchor
        cell = max(1, round(scale * (region.clearance or 3.0) / 6.0))
        _draw_number(out, region.number, ax * scale + scale // 2, ay * scale + scale // 2, cell)
    return RasterImage(width=w, height=h, pixels=out)


def render_filled_png(t: PbnTemplate, fills: dict[int, int], scale: int = 1) -> RasterImage:
    """Template with chosen regions painted in their filled palette color.

    `fills` maps region id -> palette number (what the painter actually
    chose, right or wrong). Numbers are not drawn: filling paints over them.
    """
    if scale < 1:
        raise ValueError("scale must be >= 1")
    by_id = {r.id: r for r in t.regions}
    for rid, number in fills.items():
        if rid not in by_id:
            raise ValueError(f"unknown region id {rid}")
        if not 1 <= number <= len(t.palette.entries):
            raise ValueError(f"unknown palette number {number}")
    grid = np.repeat(np.repeat(rasterize_regions(t), scale, 0), scale, 1)
    h, w = grid.shape
    out = np.full((h, w, 4), 255, np.uint8)
    for rid, number in sorted(fills.items()):
        r, g, b = t.palette.entries[number - 1].srgb
        out[grid == rid] = (r, g, b, 255)
    out[_boundary_mask(grid)] = (0, 0, 0, 255)
    return RasterImage(width=w, height=h, pixels=out)


_LEGEND_SWATCH = 18
_LEGEND_PAD = 4


def render_template_svg(t: PbnTemplate, stroke_width: float = 1.0) -> bytes:
    """SVG with one even-odd path per region, labels, and a legend strip."""
    if stroke_width <= 0:
        raise ValueError("stroke_width must be > 0")
    w, h = t.canvas
    per_row = max(1, w // (_LEGEND_SWATCH * 3))
    rows = (len(t.palette.entries) + per_row - 1) // per_row
    legend_h = rows * (_LEGEND_SWATCH + _LEGEND_PAD) + _LEGEND_PAD
    total_h = h + legend_h

    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{total_h}" '
        f'viewBox="0 0 {w} {total_h}">',
        f'<g id="regions" fill="#ffffff" fill-rule="evenodd" stroke="#000000" '
        f'stroke-width="{stroke_width:g}" stroke-linejoin="miter">',
    ]
    for region in t.regions:
        subpaths = []
        for c in region.contours:
            coords = " L ".join(f"{x} {y}" for x, y in c.points[:-1])
            subpaths.append(f"M {coords} Z")
        parts.append(f'<path id="region-{region.id}" d="{" ".join(subpaths)}"/>')
    parts.append("</g>")
    parts.append('<g id="labels" font-family="sans-serif" fill="#000000" text-anchor="middle">')
    for region in t.regions:
        if region.label_anchor is None:
            continue
        ax, ay = region.label_anchor
        size = max(4, round((region.clearance or 3.0) * 1.2))
        parts.append(
            f'<text x="{ax}.5" y="{ay}.5" font-size="{size}" '
            f'dominant-baseline="central">{region.number}</text>'
        )
    parts.append("</g>")
    parts.append(f'<g id="legend" font-family="sans-serif" font-size="{_LEGEND_SWATCH - 6}">')
    for i, e in enumerate(t.palette.entries):
        row, col = divmod(i, per_row)
        x = _LEGEND_PAD + col * (_LEGEND_SWATCH * 3)
        y = h + _LEGEND_PAD + row * (_LEGEND_SWATCH + _LEGEND_PAD)
        parts.append(
            f'<rect class="swatch" x="{x}" y="{y}" width="{_LEGEND_SWATCH}" '
            f'height="{_LEGEND_SWATCH}" fill="{_hex(e.srgb)}" stroke="#000000"/>'
        )
        parts.append(
            f'<text x="{x + _LEGEND_SWATCH + 4}" y="{y + _LEGEND_SWATCH - 5}">{e.number}</text>'
        )
    parts.append("</g>")
    parts.append("</svg>")
    return "\n".join(parts).encode("utf-8")
