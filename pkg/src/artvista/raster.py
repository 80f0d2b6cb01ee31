"""Raster image container plus the PNG/JPEG boundary helpers.

Everything downstream (quantization, sketching, rendering) works on
`RasterImage`: an owned row-major RGBA uint8 buffer. File decoding and
encoding live here so the rest of the package never touches Pillow.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np
from PIL import Image


@dataclass(frozen=True)
class RasterImage:
    """Owned RGBA pixel buffer, 8 bits per channel, row-major."""

    width: int
    height: int
    pixels: np.ndarray = field(repr=False)  # shape (height, width, 4), uint8

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("image dimensions must be >= 1")
        if self.pixels.shape != (self.height, self.width, 4):
            raise ValueError(
                f"pixel buffer shape {self.pixels.shape} does not match "
                f"{self.height}x{self.width}x4"
            )
        if self.pixels.dtype != np.uint8:
            raise ValueError("pixel buffer must be uint8")

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "RasterImage":
        """Build from (h, w, 3|4) uint8; RGB gets an opaque alpha channel."""
        arr = np.asarray(arr, dtype=np.uint8)
        if arr.ndim == 2:
            arr = np.stack([arr] * 3, axis=-1)
        if arr.shape[2] == 3:
            alpha = np.full(arr.shape[:2] + (1,), 255, np.uint8)
            arr = np.concatenate([arr, alpha], axis=2)
        return cls(width=arr.shape[1], height=arr.shape[0], pixels=arr)

    @classmethod
    def solid(cls, width: int, height: int, rgba=(255, 255, 255, 255)) -> "RasterImage":
        px = np.empty((height, width, 4), np.uint8)
        px[:] = np.asarray(rgba, np.uint8)
        return cls(width=width, height=height, pixels=px)

    def rgb_over_white(self) -> np.ndarray:
        """RGB (h, w, 3) float64 in 0..255 with alpha composited over white.

        Templates and sketches are destined for white paper, so analysis
        always sees the white-composited colors.
        """
        rgb = self.pixels[:, :, :3].astype(np.float64)
        a = self.pixels[:, :, 3:4].astype(np.float64) / 255.0
        return rgb * a + 255.0 * (1.0 - a)

    def luminance(self) -> np.ndarray:
        """Rec. 709 luma of the white-composited image, float64 in 0..255."""
        rgb = self.rgb_over_white()
        return 0.2126 * rgb[:, :, 0] + 0.7152 * rgb[:, :, 1] + 0.0722 * rgb[:, :, 2]


def load_image(data: bytes) -> RasterImage:
    """Decode PNG/JPEG bytes into a RasterImage.

    Raises ValueError when the payload is not a decodable image.
    """
    try:
        with Image.open(io.BytesIO(data)) as im:
            rgba = im.convert("RGBA")
            arr = np.asarray(rgba, dtype=np.uint8)
    except Exception as exc:
        raise ValueError(f"could not decode image: {exc}") from exc
    return RasterImage.from_array(arr)


def load_image_file(path) -> RasterImage:
    with open(path, "rb") as fh:
        return load_image(fh.read())


def encode_png(img: RasterImage) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(img.pixels, mode="RGBA").save(buf, format="PNG")
    return buf.getvalue()


def encode_gray_png(gray: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(np.asarray(gray, np.uint8), mode="L").save(buf, format="PNG")
    return buf.getvalue()


def save_png(img: RasterImage, path) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_png(img))


def _box_average_axis(values: np.ndarray, new_size: int, axis: int) -> np.ndarray:
    """Exact area-average resampling along one axis.

    Works for any src/dst ratio by integrating the running sum between the
    fractional cell boundaries of each output texel.
    """
    src = values.shape[axis]
    if src == new_size:
        return values
    moved = np.moveaxis(values, axis, 0).astype(np.float64)
    csum = np.concatenate([np.zeros((1,) + moved.shape[1:]), np.cumsum(moved, axis=0)])
    bounds = np.arange(new_size + 1, dtype=np.float64) * (src / new_size)
    lo = np.minimum(np.floor(bounds).astype(np.int64), src - 1)
    frac = bounds - lo
    # running sum linearly interpolated at a fractional coordinate
    s = csum[lo] + moved[lo] * frac.reshape((-1,) + (1,) * (moved.ndim - 1))
    out = (s[1:] - s[:-1]) / (src / new_size)
    return np.moveaxis(out, 0, axis)


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def downscale_for_analysis(img: RasterImage, max_dim: int = 1024) -> RasterImage:
    """Box-filter downscale so max(w, h) == max_dim; no-op when already under.

    Aspect ratio is preserved; the minor axis rounds half-up and is clamped
    to at least 1 pixel.
    """
    if max_dim < 16:
        raise ValueError("max_dim must be >= 16")
    w, h = img.width, img.height
    if max(w, h) <= max_dim:
        return img
    scale = max_dim / max(w, h)
    if w >= h:
        nw, nh = max_dim, max(1, _round_half_up(h * scale))
    else:
        nw, nh = max(1, _round_half_up(w * scale)), max_dim
    out = _box_average_axis(img.pixels, nh, axis=0)
    out = _box_average_axis(out, nw, axis=1)
    out = np.floor(out + 0.5).clip(0, 255).astype(np.uint8)
    return RasterImage(width=nw, height=nh, pixels=out)
