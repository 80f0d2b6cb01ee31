import numpy as np
import pytest

from artvista.genai import BackendConfig, GenRequest, generate_reference_images
from artvista.raster import RasterImage, downscale_for_analysis


def corpus_photo(i: int, size: int = 128) -> RasterImage:
    """Deterministic photo-like test image #i (procedural, no files)."""
    img = generate_reference_images(
        BackendConfig(), GenRequest(prompt=f"corpus photo {i}", count=1, seed=i)
    )[0]
    return downscale_for_analysis(img, size)


def random_rgb_image(rng: np.random.Generator, w: int, h: int, colors) -> RasterImage:
    """Image whose pixels are drawn uniformly from a fixed color list."""
    palette = np.asarray(colors, np.uint8)
    picks = rng.integers(0, len(palette), (h, w))
    px = np.concatenate(
        [palette[picks], np.full((h, w, 1), 255, np.uint8)], axis=2
    )
    return RasterImage.from_array(px)


@pytest.fixture(scope="session")
def small_photo():
    return corpus_photo(0, size=96)
