"""Client for a text-to-image / stylization backend, with an offline mock.

When `BackendConfig.base_url` is unset every call is served in-process by a
deterministic procedural generator, so pipelines and tests never need a
model or a socket. With a base_url the client speaks a small versioned
JSON-over-HTTP protocol:

    POST {base}/v1/txt2img   {"prompt", "count", "seed", "style"}
                             -> {"images": [<base64 PNG>, ...]}
    POST {base}/v1/stylize   {"image": <base64 PNG>, "style", "seed"}
                             -> {"image": <base64 PNG>}

Failures map to exactly one error kind each: TransportError (unreachable
after retries), BackendError (non-2xx, carries status and a body excerpt),
GatewayTimeoutError (deadline exceeded after retries).
"""

from __future__ import annotations

import base64
import hashlib
import os
import random
import time
from dataclasses import dataclass

import httpx
import numpy as np

from .prng import SplitMix64
from .raster import RasterImage, encode_png, load_image

STYLES = ("realistic", "colorful", "watercolor", "oil")
MOCK_SIZE = 512

ENV_URL = "ARTVISTA_GENAI_URL"
ENV_TIMEOUT = "ARTVISTA_GENAI_TIMEOUT_S"

_BACKOFF_BASE_S = 0.25
_BACKOFF_JITTER = 0.2


class GatewayError(Exception):
    """Base class for backend client failures."""


class TransportError(GatewayError):
    pass


class GatewayTimeoutError(GatewayError):
    pass


class BackendError(GatewayError):
    def __init__(self, status: int, body: bytes):
        excerpt = body[:200].decode("utf-8", "replace")
        super().__init__(f"backend returned {status}: {excerpt}")
        self.status = status
        self.body_excerpt = excerpt


@dataclass(frozen=True)
class GenRequest:
    prompt: str
    count: int = 1
    seed: int = 0
    style: str | None = None

    def __post_init__(self):
        if not self.prompt.strip():
            raise ValueError("prompt must be non-empty")
        if not 1 <= self.count <= 8:
            raise ValueError("count must be in 1..8")
        if self.style is not None and self.style not in STYLES:
            raise ValueError(f"style must be one of {STYLES}")


@dataclass(frozen=True)
class BackendConfig:
    base_url: str | None = None
    timeout_s: float = 30.0
    retries: int = 2

    @classmethod
    def from_env(cls) -> "BackendConfig":
        return cls(
            base_url=os.environ.get(ENV_URL) or None,
            timeout_s=float(os.environ.get(ENV_TIMEOUT, "30")),
        )


def _prompt_hash(prompt: str) -> int:
    return int.from_bytes(hashlib.sha256(prompt.encode("utf-8")).digest()[:8], "big")


def _value_noise(rng: SplitMix64, h: int, w: int, gh: int, gw: int) -> np.ndarray:
    """Bilinearly enlarged random grid in [-0.5, 0.5], shape (h, w)."""
    gh, gw = max(2, gh), max(2, gw)
    grain = np.array([[rng.next_float() - 0.5 for _ in range(gw)] for _ in range(gh)])
    ky = np.linspace(0, gh - 1, h)
    kx = np.linspace(0, gw - 1, w)
    y0 = np.minimum(ky.astype(np.int64), gh - 2)
    x0 = np.minimum(kx.astype(np.int64), gw - 2)
    fy = (ky - y0)[:, None]
    fx = (kx - x0)[None, :]
    return (
        grain[y0][:, x0] * (1 - fy) * (1 - fx)
        + grain[y0 + 1][:, x0] * fy * (1 - fx)
        + grain[y0][:, x0 + 1] * (1 - fy) * fx
        + grain[y0 + 1][:, x0 + 1] * fy * fx
    )


def _mock_image(prompt: str, seed: int, index: int) -> RasterImage:
    """Procedural 512x512 stand-in: seeded gradient, prompt-keyed hue bands,
    soft blobs, and multi-octave texture so edge detectors, quantization and
    region analysis all get photo-like content to work on."""
    rng = SplitMix64(seed ^ _prompt_hash(prompt) ^ (index * 0x9E3779B9))
    n = MOCK_SIZE
    yy, xx = np.mgrid[0:n, 0:n].astype(np.float64) / (n - 1)

    base = np.array([rng.next_float() * 255 for _ in range(3)])
    top = np.array([rng.next_float() * 255 for _ in range(3)])
    img = base[None, None, :] * (1 - yy)[:, :, None] + top[None, None, :] * yy[:, :, None]

    bands = 3 + rng.next_u64() % 4
    band_of = np.minimum((xx * bands).astype(np.int64), bands - 1)
    for b in range(int(bands)):
        tint = np.array([rng.next_float() * 255 for _ in range(3)])
        mask = band_of == b
        img[mask] = 0.55 * img[mask] + 0.45 * tint

    for _ in range(6):
        cx, cy = rng.next_float(), rng.next_float()
        radius = 0.08 + 0.15 * rng.next_float()
        tint = np.array([rng.next_float() * 255 for _ in range(3)])
        blob = np.exp(-(((xx - cx) ** 2 + (yy - cy) ** 2) / (2 * radius**2)))
        img = img * (1 - 0.6 * blob[:, :, None]) + tint[None, None, :] * 0.6 * blob[:, :, None]

    # luminance texture, coarse to fine
    texture = (
        40.0 * _value_noise(rng, n, n, 8, 8)
        + 28.0 * _value_noise(rng, n, n, 32, 32)
        + 22.0 * _value_noise(rng, n, n, 128, 128)
    )
    img += texture[:, :, None]

    rgba = np.empty((n, n, 4), np.uint8)
    rgba[:, :, :3] = np.floor(img + 0.5).clip(0, 255).astype(np.uint8)
    rgba[:, :, 3] = 255
    return RasterImage(width=n, height=n, pixels=rgba)


_TONE_CURVES = {
    # (gain, lift, gamma) per channel triple applied to 0..1 RGB
    "realistic": ((1.05, 0.0, 1.0), (1.02, 0.0, 1.0), (1.0, 0.0, 1.0)),
    "colorful": ((1.25, 0.0, 0.9), (1.2, 0.0, 0.9), (1.25, 0.0, 0.9)),
    "watercolor": ((0.9, 0.12, 1.1), (0.9, 0.12, 1.1), (0.95, 0.12, 1.1)),
    "oil": ((1.15, -0.02, 0.8), (1.1, -0.02, 0.85), (1.05, -0.02, 0.9)),
}


def _mock_stylize(img: RasterImage, style: str, seed: int) -> RasterImage:
    rng = SplitMix64(seed ^ _prompt_hash(style))
    rgb = img.pixels[:, :, :3].astype(np.float64) / 255.0
    out = np.empty_like(rgb)
    for ch in range(3):
        gain, lift, gamma = _TONE_CURVES[style][ch]
        out[:, :, ch] = np.clip(rgb[:, :, ch] ** gamma * gain + lift, 0.0, 1.0)
    # coarse seeded texture overlay, bilinearly enlarged so it stays soft
    g = _value_noise(rng, img.height, img.width, img.height // 32, img.width // 32)
    out = np.clip(out + 0.08 * g[:, :, None], 0.0, 1.0)
    rgba = img.pixels.copy()
    rgba[:, :, :3] = np.floor(out * 255.0 + 0.5).astype(np.uint8)
    return RasterImage(width=img.width, height=img.height, pixels=rgba)


def _post_with_retries(cfg: BackendConfig, url: str, payload: dict, sleep=time.sleep) -> dict:
    attempts = cfg.retries + 1
    jitter = random.Random()
    last_exc: Exception | None = None
    for attempt in range(attempts):
        if attempt:
            delay = _BACKOFF_BASE_S * (2 ** (attempt - 1))
            delay *= 1.0 + _BACKOFF_JITTER * (2 * jitter.random() - 1)
            sleep(delay)
        try:
            resp = httpx.post(url, json=payload, timeout=cfg.timeout_s)
        except httpx.TimeoutException as exc:
            last_exc = GatewayTimeoutError(f"backend timed out after {cfg.timeout_s}s: {exc}")
            continue
        except httpx.HTTPError as exc:
            last_exc = TransportError(f"backend unreachable: {exc}")
            continue
        if 200 <= resp.status_code < 300:
            return resp.json()
        if 500 <= resp.status_code < 600 and attempt < attempts - 1:
            last_exc = BackendError(resp.status_code, resp.content)
            continue
        raise BackendError(resp.status_code, resp.content)
    raise last_exc  # type: ignore[misc]


def generate_reference_images(cfg: BackendConfig, req: GenRequest) -> list[RasterImage]:
    """Exactly req.count images; identical requests are byte-identical on the
    mock backend."""
    if cfg.base_url is None:
        return [_mock_image(req.prompt, req.seed, i) for i in range(req.count)]
    body = _post_with_retries(
        cfg,
        cfg.base_url.rstrip("/") + "/v1/txt2img",
        {"prompt": req.prompt, "count": req.count, "seed": req.seed, "style": req.style},
    )
    images = body.get("images")
    if not isinstance(images, list) or len(images) != req.count:
        raise BackendError(502, b"backend returned a malformed image list")
    return [load_image(base64.b64decode(b64)) for b64 in images]


def stylize_image(
    cfg: BackendConfig, img: RasterImage, style: str, seed: int = 0
) -> RasterImage:
    """Re-tone an image toward a painting style; dimensions are preserved."""
    if style not in STYLES:
        raise ValueError(f"style must be one of {STYLES}")
    if cfg.base_url is None:
        return _mock_stylize(img, style, seed)
    body = _post_with_retries(
        cfg,
        cfg.base_url.rstrip("/") + "/v1/stylize",
        {"image": base64.b64encode(encode_png(img)).decode("ascii"), "style": style, "seed": seed},
    )
    encoded = body.get("image")
    if not isinstance(encoded, str):
        raise BackendError(502, b"backend returned a malformed image")
    out = load_image(base64.b64decode(encoded))
    if (out.width, out.height) != (img.width, img.height):
        raise BackendError(502, b"backend changed image dimensions")
    return out
