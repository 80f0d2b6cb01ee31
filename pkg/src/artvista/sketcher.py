"""Line sketches at three difficulty levels.

abstract      region boundaries after aggressive quantize-and-merge; a few
              large shapes, good for beginners
intermediate  abstract boundaries fused with Canny edges
advanced      extended difference-of-Gaussians (XDoG) line art

Sketch rasters are grayscale uint8 with 0 = ink and 255 = paper. All levels
are pure functions of (image, level, seed).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .raster import RasterImage, downscale_for_analysis
from .regionizer import segment_image

LEVELS = ("abstract", "intermediate", "advanced")

ABSTRACT_COLORS = 6
ABSTRACT_MIN_AREA_FRACTION = 0.005
INTERMEDIATE_CANNY = dict(sigma=1.4, low=0.1, high=0.2)


@dataclass(frozen=True)
class Sketch:
    level: str
    strokes: np.ndarray = field(repr=False)  # (h, w) uint8, 0=ink 255=paper


_SOBEL_X = np.array([[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]], np.float64)
_SOBEL_Y = np.array([[-1, -2, -1], [0, 0, 0], [1, 2, 1]], np.float64)


def canny_edges(
    img: RasterImage, sigma: float = 1.4, low: float = 0.1, high: float = 0.2
) -> np.ndarray:
    """Classic Canny: blur, Sobel, non-maximum suppression, hysteresis.

    `low` and `high` are fractions of the maximum gradient magnitude.
    Returns uint8 with 255 at edge pixels, 0 elsewhere.
    """
    if sigma <= 0:
        raise ValueError("sigma must be > 0")
    if not 0 < low < high <= 1:
        raise ValueError("thresholds must satisfy 0 < low < high <= 1")
    gray = ndimage.gaussian_filter(img.luminance(), sigma=sigma, mode="nearest")
    gx = ndimage.convolve(gray, _SOBEL_X, mode="nearest")
    gy = ndimage.convolve(gray, _SOBEL_Y, mode="nearest")
    mag = np.hypot(gx, gy)
    gmax = float(mag.max())
    # flat images leave only float-precision ripple after blurring; treat
    # anything below a micro-luma floor as no gradient at all
    if gmax < 1e-6:
        return np.zeros(gray.shape, np.uint8)

    # quantize gradient direction to 4 bins and compare against the two
    # neighbors across the edge; ties keep the higher-coordinate pixel so a
    # perfectly symmetric step yields a single-pixel line
    angle = np.mod(np.arctan2(gy, gx), np.pi)
    bins = ((angle + np.pi / 8) // (np.pi / 4)).astype(np.int64) % 4
    offsets = {0: (0, 1), 1: (1, 1), 2: (1, 0), 3: (1, -1)}  # (dy, dx) per bin
    nms = np.zeros_like(mag)
    padded = np.pad(mag, 1)
    for b, (dy, dx) in offsets.items():
        sel = bins == b
        fwd = padded[1 + dy : padded.shape[0] - 1 + dy, 1 + dx : padded.shape[1] - 1 + dx]
        bwd = padded[1 - dy : padded.shape[0] - 1 - dy, 1 - dx : padded.shape[1] - 1 - dx]
        keep = sel & (mag >= fwd) & (mag > bwd)
        nms[keep] = mag[keep]

    strong = nms >= high * gmax
    weak = nms >= low * gmax
    labels, _ = ndimage.label(weak, structure=np.ones((3, 3), bool))
    strong_labels = np.unique(labels[strong])
    edges = weak & np.isin(labels, strong_labels[strong_labels > 0])
    return np.where(edges, 255, 0).astype(np.uint8)


def xdog_lineart(
    img: RasterImage,
    sigma: float = 1.0,
    k_ratio: float = 1.6,
    tau: float = 0.99,
    epsilon: float = 0.01,
    phi: float = 10.0,
) -> np.ndarray:
    """Extended difference-of-Gaussians line art, uint8 grayscale.

    S = G_sigma - tau * G_{k*sigma} on 0..1 luminance. The paper-white
    branch fires where S >= epsilon * G_{k*sigma} (the threshold is relative
    to the local base response, so flat fields of any brightness map to
    exactly 255); elsewhere the soft edge 255 * (1 + tanh(phi * u)) with
    u = S - epsilon * G_{k*sigma} shades the stroke.
    """
    if sigma <= 0:
        raise ValueError("sigma must be > 0")
    if k_ratio <= 1:
        raise ValueError("k_ratio must be > 1")
    if phi <= 0:
        raise ValueError("phi must be > 0")
    gray = img.luminance() / 255.0
    g1 = ndimage.gaussian_filter(gray, sigma=sigma, mode="nearest")
    g2 = ndimage.gaussian_filter(gray, sigma=k_ratio * sigma, mode="nearest")
    u = (g1 - tau * g2) - epsilon * g2
    soft = 1.0 + np.tanh(phi * u)
    out = np.where(u >= 0.0, 1.0, soft)
    return np.floor(np.clip(out, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)


def _region_boundary_ink(region_of: np.ndarray) -> np.ndarray:
    """1-px ink mask along cracks between differing regions.

    The lower-coordinate pixel of each differing pair takes the ink; the
    canvas frame is not drawn, so a single-region map stays blank.
    """
    ink = np.zeros(region_of.shape, bool)
    ink[:, :-1] |= region_of[:, :-1] != region_of[:, 1:]
    ink[:-1, :] |= region_of[:-1, :] != region_of[1:, :]
    return ink


def generate_sketch(
    img: RasterImage, level: str, seed: int = 0, max_analysis_dim: int = 1024
) -> Sketch:
    """Render one sketch level; see module docstring for the recipes."""
    if level not in LEVELS:
        raise ValueError(f"level must be one of {LEVELS}")
    analyzed = downscale_for_analysis(img, max_analysis_dim)
    if level == "advanced":
        return Sketch(level=level, strokes=xdog_lineart(analyzed))

    _, _, rm = segment_image(
        analyzed,
        k=ABSTRACT_COLORS,
        seed=seed,
        min_area_fraction=ABSTRACT_MIN_AREA_FRACTION,
        max_analysis_dim=max_analysis_dim,
    )
    ink = _region_boundary_ink(rm.region_of)
    if level == "intermediate":
        ink = ink | (canny_edges(analyzed, **INTERMEDIATE_CANNY) > 0)
    return Sketch(level=level, strokes=np.where(ink, 0, 255).astype(np.uint8))
