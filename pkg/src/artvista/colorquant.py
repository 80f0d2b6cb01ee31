"""Perceptual color quantization: sRGB <-> CIELAB and seeded k-means.

The palette is extracted in CIELAB (D65) because nearest-color matching for
painting has to be perceptual; squared Euclidean Lab distance is the metric
throughout. Lloyd's algorithm runs on the image's distinct colors weighted
by their pixel counts, which is exactly equivalent to running on all pixels
(identical colors always share an assignment) but far cheaper.

Determinism: initialization is k-means++ driven by the splitmix64 stream in
:mod:`artvista.prng`. A master stream seeded with `seed` emits one sub-seed
per restart, and each restart consumes exactly one float per centroid
choice, so identical `(pixels, k, seed, restarts)` give byte-identical
output. Ties anywhere (nearest centroid, farthest point, palette order)
break toward the lowest index.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .prng import SplitMix64
from .raster import RasterImage

# sRGB (D65) <-> XYZ matrices and CIELAB constants, IEC 61966-2-1 / CIE 15.
_RGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
_XYZ_TO_RGB = np.array(
    [
        [3.2404542, -1.5371385, -0.4985314],
        [-0.9692660, 1.8760108, 0.0415560],
        [0.0556434, -0.2040259, 1.0572252],
    ]
)
_WHITE = np.array([0.95047, 1.00000, 1.08883])
_LAB_EPS = 216.0 / 24389.0
_LAB_KAPPA = 24389.0 / 27.0

MAX_LLOYD_ITERATIONS = 64
DEFAULT_COLORS = 16        # paint-by-number default palette size
SIMPLIFIED_COLORS = 8      # the "simplified" preset


@dataclass(frozen=True)
class LabColor:
    L: float
    a: float
    b: float


@dataclass(frozen=True)
class PaletteEntry:
    number: int                      # painter-facing label, 1-based
    srgb: tuple[int, int, int]
    lab: LabColor


@dataclass(frozen=True)
class Palette:
    entries: tuple[PaletteEntry, ...]
    k_requested: int

    def __len__(self) -> int:
        return len(self.entries)

    def lab_array(self) -> np.ndarray:
        return np.array([[e.lab.L, e.lab.a, e.lab.b] for e in self.entries])

    def srgb_array(self) -> np.ndarray:
        return np.array([e.srgb for e in self.entries], dtype=np.uint8)


@dataclass(frozen=True)
class IndexMap:
    width: int
    height: int
    indices: np.ndarray = field(repr=False)  # shape (height, width), int32


def srgb_array_to_lab(rgb: np.ndarray) -> np.ndarray:
    """Vectorized sRGB (0..255, any shape ending in 3) -> CIELAB float64."""
    c = np.asarray(rgb, dtype=np.float64) / 255.0
    lin = np.where(c <= 0.04045, c / 12.92, ((c + 0.055) / 1.055) ** 2.4)
    xyz = lin @ _RGB_TO_XYZ.T
    t = xyz / _WHITE
    f = np.where(t > _LAB_EPS, np.cbrt(t), (_LAB_KAPPA * t + 16.0) / 116.0)
    L = 116.0 * f[..., 1] - 16.0
    a = 500.0 * (f[..., 0] - f[..., 1])
    b = 200.0 * (f[..., 1] - f[..., 2])
    return np.stack([L, a, b], axis=-1)


def lab_array_to_srgb(lab: np.ndarray) -> np.ndarray:
    """Vectorized CIELAB -> sRGB uint8, channels clamped to 0..255."""
    lab = np.asarray(lab, dtype=np.float64)
    L, a, b = lab[..., 0], lab[..., 1], lab[..., 2]
    fy = (L + 16.0) / 116.0
    fx = fy + a / 500.0
    fz = fy - b / 200.0

    def finv(f):
        f3 = f**3
        return np.where(f3 > _LAB_EPS, f3, (116.0 * f - 16.0) / _LAB_KAPPA)

    y = np.where(L > _LAB_KAPPA * _LAB_EPS, fy**3, L / _LAB_KAPPA)
    xyz = np.stack([finv(fx) * _WHITE[0], y * _WHITE[1], finv(fz) * _WHITE[2]], axis=-1)
    lin = np.clip(xyz @ _XYZ_TO_RGB.T, 0.0, 1.0)
    c = np.where(lin <= 0.0031308, 12.92 * lin, 1.055 * lin ** (1.0 / 2.4) - 0.055)
    return np.floor(c * 255.0 + 0.5).clip(0, 255).astype(np.uint8)


def srgb_to_cielab(c) -> LabColor:
    """Convert one (r, g, b) triple in 0..255 to CIELAB."""
    r, g, b = c
    for ch in (r, g, b):
        if not 0 <= ch <= 255:
            raise ValueError("sRGB channels must be in 0..255")
    lab = srgb_array_to_lab(np.array([r, g, b], dtype=np.float64))
    return LabColor(float(lab[0]), float(lab[1]), float(lab[2]))


def cielab_to_srgb(c: LabColor) -> tuple[int, int, int]:
    rgb = lab_array_to_srgb(np.array([c.L, c.a, c.b]))
    return int(rgb[0]), int(rgb[1]), int(rgb[2])


def _distinct_colors(img: RasterImage) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """White-composited distinct colors, pixel counts, and per-pixel inverse."""
    rgb = np.floor(img.rgb_over_white() + 0.5).astype(np.uint8).reshape(-1, 3)
    colors, inverse, counts = np.unique(
        rgb, axis=0, return_inverse=True, return_counts=True
    )
    return colors, counts.astype(np.float64), inverse.reshape(img.height, img.width)


def _kmeans_pp_init(
    labs: np.ndarray, weights: np.ndarray, k: int, rng: SplitMix64
) -> np.ndarray:
    """k-means++ seeding: first center pixel-uniform, then weight ~ w * D^2."""
    n = labs.shape[0]
    centers = np.empty((k, 3))
    cum = np.cumsum(weights)
    first = int(np.searchsorted(cum, rng.next_float() * cum[-1], side="right"))
    centers[0] = labs[min(first, n - 1)]
    d2 = np.sum((labs - centers[0]) ** 2, axis=1)
    for j in range(1, k):
        probs = weights * d2
        cum = np.cumsum(probs)
        if cum[-1] <= 0.0:
            # all mass already covered; duplicate-free input makes this rare
            centers[j] = centers[j - 1]
            continue
        pick = int(np.searchsorted(cum, rng.next_float() * cum[-1], side="right"))
        centers[j] = labs[min(pick, n - 1)]
        d2 = np.minimum(d2, np.sum((labs - centers[j]) ** 2, axis=1))
    return centers


@dataclass
class LloydResult:
    centroids: np.ndarray      # (k, 3) Lab
    assignment: np.ndarray     # (n,) int32
    sse: float
    sse_history: list[float]   # SSE after every assignment step


def _assign(labs: np.ndarray, centers: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # argmin over squared Lab distance; np.argmin takes the first minimum,
    # which is the lowest-ordinal tie-break the contract requires. The
    # point-norm term is constant per point, so it is added only afterwards
    # (keeps the hot matrix to one matmul + one broadcast add).
    partial = labs @ (-2.0 * centers.T)
    partial += np.sum(centers**2, axis=1)[None, :]
    assignment = np.argmin(partial, axis=1).astype(np.int32)
    rows = np.arange(labs.shape[0])
    mind = partial[rows, assignment] + np.sum(labs**2, axis=1)
    return assignment, np.maximum(mind, 0.0)


def lloyd(
    labs: np.ndarray,
    weights: np.ndarray,
    init_centers: np.ndarray,
    max_iter: int = MAX_LLOYD_ITERATIONS,
) -> LloydResult:
    """Weighted Lloyd iteration until assignments stop changing.

    Empty clusters are re-seeded to the point farthest from its current
    centroid (highest weighted residual wins nothing; raw distance is used,
    ties to the lowest point index). A cluster that is still empty when the
    loop stops is dropped by the caller.
    """
    centers = init_centers.copy()
    k = centers.shape[0]
    assignment = np.full(labs.shape[0], -1, dtype=np.int32)
    history: list[float] = []
    for _ in range(max_iter):
        new_assignment, mind = _assign(labs, centers)
        history.append(float(np.sum(weights * mind)))
        if np.array_equal(new_assignment, assignment):
            break
        assignment = new_assignment
        counts = np.bincount(assignment, weights=weights, minlength=k)
        sums = np.stack(
            [np.bincount(assignment, weights=weights * labs[:, d], minlength=k)
             for d in range(3)],
            axis=1,
        )
        nonempty = counts > 0
        centers[nonempty] = sums[nonempty] / counts[nonempty, None]
        empties = np.flatnonzero(~nonempty)
        if empties.size:
            claimed = set()
            for j in empties:
                order = np.argsort(-mind, kind="stable")
                pick = next((int(i) for i in order if int(i) not in claimed), None)
                if pick is None:
                    break
                claimed.add(pick)
                centers[j] = labs[pick]
                mind = np.minimum(mind, np.sum((labs - centers[j]) ** 2, axis=1))
    else:
        # iteration budget exhausted after an update step: refresh the
        # assignment so the returned pair is self-consistent
        assignment, mind = _assign(labs, centers)
        history.append(float(np.sum(weights * mind)))
    return LloydResult(centers, assignment, history[-1], history)


def _build_palette(
    centers: np.ndarray,
    labs: np.ndarray,
    weights: np.ndarray,
    k_requested: int,
) -> tuple[Palette, np.ndarray]:
    """Order centroids light-to-dark, dedupe identical sRGB, renumber.

    Returns the palette and the final per-distinct-color assignment computed
    against the ordered palette (so tie-breaks match painter numbering).
    """
    centers = centers.copy()
    while True:
        # drop sRGB collisions (centroids within rounding of each other)
        srgb = lab_array_to_srgb(centers)
        _, keep_idx = np.unique(srgb, axis=0, return_index=True)
        if len(keep_idx) < centers.shape[0]:
            centers = centers[np.sort(keep_idx)]
        # sort by L descending; ties by a, then b, then original position
        order = np.lexsort(
            (np.arange(centers.shape[0]), centers[:, 2], centers[:, 1], -centers[:, 0])
        )
        centers = centers[order]
        assignment, _ = _assign(labs, centers)
        owned = np.bincount(assignment, minlength=centers.shape[0]) > 0
        if owned.all():
            break
        centers = centers[owned]
    srgb = lab_array_to_srgb(centers)
    entries = tuple(
        PaletteEntry(
            number=i + 1,
            srgb=(int(srgb[i, 0]), int(srgb[i, 1]), int(srgb[i, 2])),
            lab=LabColor(float(centers[i, 0]), float(centers[i, 1]), float(centers[i, 2])),
        )
        for i in range(centers.shape[0])
    )
    return Palette(entries=entries, k_requested=k_requested), assignment


def quantize_colors(
    img: RasterImage, k: int, seed: int = 0, restarts: int = 1
) -> tuple[Palette, IndexMap]:
    """Extract a <=k color palette and per-pixel palette indices.

    Runs `restarts` independent k-means++ seedings and keeps the lowest-SSE
    result (first seen wins exact ties). Images with fewer distinct colors
    than k get exactly one palette entry per distinct color.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    if img.width < 1 or img.height < 1 or img.pixels.size == 0:
        raise ValueError("image has no pixels")

    colors, counts, inverse = _distinct_colors(img)
    labs = srgb_array_to_lab(colors)

    if colors.shape[0] <= k:
        palette, assignment = _build_palette(labs, labs, counts, k)
    else:
        master = SplitMix64(seed)
        sub_seeds = [master.next_u64() for _ in range(restarts)]
        best: LloydResult | None = None
        for sub in sub_seeds:
            init = _kmeans_pp_init(labs, counts, k, SplitMix64(sub))
            result = lloyd(labs, counts, init)
            if best is None or result.sse < best.sse:
                best = result
        survivors = np.unique(best.assignment)
        palette, assignment = _build_palette(
            best.centroids[survivors], labs, counts, k
        )

    index_grid = assignment[inverse].astype(np.int32)
    return palette, IndexMap(width=img.width, height=img.height, indices=index_grid)
