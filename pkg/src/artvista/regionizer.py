"""From palette indices to a numbered template.

Pipeline: connected-component labeling (BFS flood fill over row runs),
small-region compression (smallest-first priority merge), crack-following
boundary tracing, Ramer-Douglas-Peucker simplification, and chamfer 3-4
label anchors. All stages are deterministic; ties break toward the lowest
id / raster position.

Coordinates: pixels are (row, col); contour points are pixel-corner (x, y)
with x right and y down, so pixel (r, c) spans corners (c, r)..(c+1, r+1).
Outer contours carry positive shoelace area, holes negative.
"""

from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .colorquant import IndexMap, Palette, quantize_colors
from .raster import RasterImage, downscale_for_analysis

TEMPLATE_VERSION = "pbn/1"
DEFAULT_MIN_AREA_FRACTION = 0.0005   # 0.05% of the canvas
MIN_LABEL_CLEARANCE = 3.0            # px; below this the number is omitted


@dataclass
class Region:
    id: int
    palette_index: int
    area: int
    bbox: tuple[int, int, int, int]          # (min_x, min_y, max_x, max_y)
    neighbors: set[int] = field(default_factory=set)


@dataclass
class RegionMap:
    width: int
    height: int
    region_of: np.ndarray = field(repr=False)  # (height, width) int32
    regions: list[Region] = field(default_factory=list)


@dataclass(frozen=True)
class Contour:
    points: tuple[tuple[int, int], ...]   # closed: first == last
    kind: str                             # "outer" | "hole"


@dataclass(frozen=True)
class TemplateRegion:
    id: int
    number: int                           # painter-facing palette number
    contours: tuple[Contour, ...]
    label_anchor: tuple[int, int] | None  # (x, y) pixel holding the number
    clearance: float | None
    label_omitted: bool
    area: int


@dataclass(frozen=True)
class PbnTemplate:
    canvas: tuple[int, int]               # (width, height)
    palette: Palette
    regions: tuple[TemplateRegion, ...]
    version: str = TEMPLATE_VERSION


def _row_runs(grid: np.ndarray):
    """Maximal same-value row segments of a (h, w) grid, in raster order.

    Returns flat-start, flat-end (exclusive, both in raveled coordinates)
    and the per-run value; runs never span rows.
    """
    h, w = grid.shape
    flat = grid.ravel()
    change = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    starts = np.unique(np.concatenate([np.arange(h, dtype=np.int64) * w, change]))
    ends = np.append(starts[1:], h * w)
    return starts, ends, flat[starts]


def _neighbor_sets(region_of: np.ndarray, count: int) -> list[set[int]]:
    """Symmetric 4-adjacency sets between differing regions."""
    a = np.concatenate([region_of[:, :-1].ravel(), region_of[:-1, :].ravel()])
    b = np.concatenate([region_of[:, 1:].ravel(), region_of[1:, :].ravel()])
    differ = a != b
    lo = np.minimum(a[differ], b[differ]).astype(np.int64)
    hi = np.maximum(a[differ], b[differ]).astype(np.int64)
    codes = np.unique(lo * count + hi)
    left = (codes // count).astype(np.int64)
    right = (codes % count).astype(np.int64)
    # both directions, grouped by source region
    src = np.concatenate([left, right])
    dst = np.concatenate([right, left])
    order = np.argsort(src, kind="stable")
    src, dst = src[order], dst[order]
    starts = np.searchsorted(src, np.arange(count + 1))
    return [set(dst[starts[i] : starts[i + 1]].tolist()) for i in range(count)]


def _regions_from_grid(
    region_of: np.ndarray, palette_index_of: np.ndarray
) -> list[Region]:
    h, w = region_of.shape
    count = int(region_of.max()) + 1
    flat = region_of.ravel()
    areas = np.bincount(flat, minlength=count)
    # group pixel positions by region id once; reduceat beats minimum.at
    order = np.argsort(flat, kind="stable")
    bounds = np.searchsorted(flat[order], np.arange(count))
    rows, cols = np.divmod(order, w)
    min_x = np.minimum.reduceat(cols, bounds)
    max_x = np.maximum.reduceat(cols, bounds)
    min_y = np.minimum.reduceat(rows, bounds)
    max_y = np.maximum.reduceat(rows, bounds)
    nbrs = _neighbor_sets(region_of, count)
    return [
        Region(
            id=i,
            palette_index=int(palette_index_of[i]),
            area=int(areas[i]),
            bbox=(int(min_x[i]), int(min_y[i]), int(max_x[i]), int(max_y[i])),
            neighbors=nbrs[i],
        )
        for i in range(count)
    ]


def label_regions(im: IndexMap, connectivity: int = 4) -> RegionMap:
    """Connected components of equal palette index via BFS flood fill.

    The fill runs over row runs with an explicit queue (no recursion), so
    megapixel regions are fine. Region ids follow the raster order of each
    component's first pixel. Neighbor sets always use 4-adjacency, whatever
    the labeling connectivity.
    """
    if connectivity not in (4, 8):
        raise ValueError("connectivity must be 4 or 8")
    grid = im.indices
    h, w = grid.shape
    if grid.size == 0:
        raise ValueError("index map has no pixels")

    starts, ends, values_arr = _row_runs(grid)
    nruns = len(starts)
    run_row = (starts // w).astype(np.int64)
    col_start_arr = (starts % w).astype(np.int64)
    col_end_arr = col_start_arr + (ends - starts)
    row_first = np.searchsorted(run_row, np.arange(h + 1))

    # interval overlap: strict for 4-connectivity, touch-allowed for 8
    slack = 0 if connectivity == 4 else 1
    # per run, the first run in the row above/below whose span can reach it
    # (runs partition each row, so searchsorted over starts is exact)
    probe = np.maximum(col_start_arr - slack, 0)
    up_from = np.full(nruns, -1, np.int64)
    down_from = np.full(nruns, -1, np.int64)
    for r in range(h):
        lo, hi = row_first[r], row_first[r + 1]
        if r > 0:
            plo, phi = row_first[r - 1], row_first[r]
            up_from[lo:hi] = (
                np.maximum(
                    np.searchsorted(col_start_arr[plo:phi], probe[lo:hi], "right") - 1, 0
                )
                + plo
            )
        if r < h - 1:
            nlo, nhi = row_first[r + 1], row_first[r + 2]
            down_from[lo:hi] = (
                np.maximum(
                    np.searchsorted(col_start_arr[nlo:nhi], probe[lo:hi], "right") - 1, 0
                )
                + nlo
            )

    # hot loop on plain lists; numpy scalar indexing is several times slower
    col_start = col_start_arr.tolist()
    col_end = col_end_arr.tolist()
    values = values_arr.tolist()
    up_list = up_from.tolist()
    down_list = down_from.tolist()
    row_stop = [int(row_first[r + 1]) for r in range(h)]
    run_row_list = run_row.tolist()

    labels = [-1] * nruns
    next_id = 0
    queue: deque[int] = deque()
    for seed in range(nruns):
        if labels[seed] != -1:
            continue
        labels[seed] = next_id
        queue.append(seed)
        while queue:
            j = queue.popleft()
            s = col_start[j]
            e = col_end[j]
            v = values[j]
            r = run_row_list[j]
            reach = e + slack
            for i0, stop in (
                (up_list[j], row_stop[r - 1] if r > 0 else -1),
                (down_list[j], row_stop[r + 1] if r < h - 1 else -1),
            ):
                if i0 < 0:
                    continue
                i = i0
                while i < stop and col_start[i] < reach:
                    if labels[i] == -1 and values[i] == v and col_end[i] + slack > s:
                        labels[i] = next_id
                        queue.append(i)
                    i += 1
        next_id += 1

    labels = np.asarray(labels, np.int64)
    region_of = np.repeat(labels, ends - starts).reshape(h, w).astype(np.int32)
    palette_index_of = np.zeros(next_id, np.int64)
    palette_index_of[labels] = values
    regions = _regions_from_grid(region_of, palette_index_of)
    return RegionMap(width=w, height=h, region_of=region_of, regions=regions)


def merge_small_regions(rm: RegionMap, palette: Palette, min_area: int) -> RegionMap:
    """Fold regions below `min_area` into their perceptually closest neighbor.

    Repeatedly the smallest under-threshold region (ties: lowest id) merges
    into the adjacent region with nearest palette Lab color (ties: larger
    neighbor area, then lower id); its pixels adopt the target's palette
    index. Stops when nothing is under threshold or one region remains.
    Ids are re-densified in surviving-id order.
    """
    if min_area < 1:
        raise ValueError("min_area must be >= 1")
    n = len(rm.regions)
    area = [r.area for r in rm.regions]
    pal = [r.palette_index for r in rm.regions]
    nbrs = [set(r.neighbors) for r in rm.regions]
    parent = list(range(n))
    alive = [True] * n
    alive_count = n
    lab = palette.lab_array()
    # palette-pairwise squared Lab distances, tiny and hit constantly below
    pal_d2 = np.sum((lab[:, None, :] - lab[None, :, :]) ** 2, axis=2).tolist()

    heap = [(area[i], i) for i in range(n) if area[i] < min_area]
    heapq.heapify(heap)
    while heap and alive_count > 1:
        a, i = heapq.heappop(heap)
        if not alive[i] or area[i] != a or area[i] >= min_area:
            continue
        row = pal_d2[pal[i]]
        target = min(nbrs[i], key=lambda x: (row[pal[x]], -area[x], x))
        parent[i] = target
        alive[i] = False
        alive_count -= 1
        area[target] += area[i]
        for x in nbrs[i]:
            nbrs[x].discard(i)
            if x != target:
                nbrs[x].add(target)
        nbrs[target].update(nbrs[i])
        nbrs[target].discard(target)
        nbrs[target].discard(i)
        nbrs[i] = set()
        if area[target] < min_area:
            heapq.heappush(heap, (area[target], target))

    def canon(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    roots = np.array([canon(i) for i in range(n)], np.int64)
    survivors = np.unique(roots)
    dense = np.zeros(n, np.int64)
    dense[survivors] = np.arange(len(survivors))
    region_of = dense[roots[rm.region_of]].astype(np.int32)
    palette_index_of = np.array([pal[s] for s in survivors], np.int64)
    regions = _regions_from_grid(region_of, palette_index_of)
    return RegionMap(width=rm.width, height=rm.height, region_of=region_of, regions=regions)


# crack directions: 0=+x, 1=+y(down), 2=-x, 3=-y(up)
_DX = (1, 0, -1, 0)
_DY = (0, 1, 0, -1)


def _shoelace2(points) -> int:
    s = 0
    for (x0, y0), (x1, y1) in zip(points, points[1:]):
        s += x0 * y1 - x1 * y0
    return s


def trace_boundaries(rm: RegionMap) -> list[list[Contour]]:
    """Exact crack boundaries for every region: one outer loop + holes.

    Walks directed pixel-edge cracks keeping the region on the right of the
    walking direction; at checkerboard corners the walk threads left so each
    enclosed island gets its own hole contour. Every inter-region crack is
    emitted once per side, border cracks once.
    """
    out: list[list[Contour]] = []
    for region in rm.regions:
        x0, y0, x1, y1 = region.bbox
        crop = rm.region_of[y0 : y1 + 1, x0 : x1 + 1] == region.id
        ch, cw = crop.shape
        padded = np.zeros((ch + 2, cw + 2), bool)
        padded[1:-1, 1:-1] = crop

        def inside(row: int, col: int) -> bool:
            return bool(padded[row + 1, col + 1])

        # candidate starting cracks in raster order: (row, col, edge)
        above = np.zeros_like(crop)
        above[1:] = crop[:-1]
        below = np.zeros_like(crop)
        below[:-1] = crop[1:]
        left = np.zeros_like(crop)
        left[:, 1:] = crop[:, :-1]
        right = np.zeros_like(crop)
        right[:, :-1] = crop[:, 1:]
        cand = []
        for edge, mask in enumerate((crop & ~above, crop & ~right, crop & ~below, crop & ~left)):
            rr, cc = np.nonzero(mask)
            cand.append(np.stack([rr, cc, np.full(rr.shape, edge)], axis=1))
        cand = np.concatenate(cand)
        cand = cand[np.lexsort((cand[:, 2], cand[:, 1], cand[:, 0]))]

        visited = np.zeros((ch + 1, cw + 1, 4), bool)
        contours: list[Contour] = []
        for rr, cc, edge in cand:
            # edge -> starting directed crack (corner, direction)
            if edge == 0:
                sx, sy, sd = cc, rr, 0
            elif edge == 1:
                sx, sy, sd = cc + 1, rr, 1
            elif edge == 2:
                sx, sy, sd = cc + 1, rr + 1, 2
            else:
                sx, sy, sd = cc, rr + 1, 3
            if visited[sy, sx, sd]:
                continue
            pts = [(int(sx), int(sy))]
            cx, cy, d = int(sx), int(sy), int(sd)
            while True:
                visited[cy, cx, d] = True
                nx, ny = cx + _DX[d], cy + _DY[d]
                pts.append((nx, ny))
                if d == 0:
                    al, ar = (ny - 1, nx), (ny, nx)
                elif d == 1:
                    al, ar = (ny, nx), (ny, nx - 1)
                elif d == 2:
                    al, ar = (ny, nx - 1), (ny - 1, nx - 1)
                else:
                    al, ar = (ny - 1, nx - 1), (ny - 1, nx)
                if inside(*al):
                    nd = (d + 3) % 4
                elif inside(*ar):
                    nd = d
                else:
                    nd = (d + 1) % 4
                cx, cy, d = nx, ny, nd
                if (cx, cy, d) == (sx, sy, sd):
                    break
            kind = "outer" if _shoelace2(pts) > 0 else "hole"
            global_pts = tuple((x + x0, y + y0) for x, y in pts)
            contours.append(Contour(points=global_pts, kind=kind))
        out.append(contours)
    return out


def _seg_dist(points: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Distance from each point to segment ab."""
    ab = b - a
    denom = float(ab @ ab)
    if denom == 0.0:
        return np.linalg.norm(points - a, axis=1)
    t = np.clip((points - a) @ ab / denom, 0.0, 1.0)
    proj = a + t[:, None] * ab
    return np.linalg.norm(points - proj, axis=1)


def rdp(points: list[tuple[float, float]], tolerance: float) -> list[tuple[float, float]]:
    """Ramer-Douglas-Peucker on an open chain; endpoints always kept.

    A point is dropped only when its whole span collapses onto the chord,
    i.e. every interior point is within `tolerance` of a segment of the
    result.
    """
    pts = np.asarray(points, dtype=np.float64)
    n = len(pts)
    keep = np.zeros(n, bool)
    keep[0] = keep[n - 1] = True
    stack = [(0, n - 1)]
    while stack:
        lo, hi = stack.pop()
        if hi - lo < 2:
            continue
        d = _seg_dist(pts[lo + 1 : hi], pts[lo], pts[hi])
        imax = int(np.argmax(d))
        if d[imax] > tolerance:
            mid = lo + 1 + imax
            keep[mid] = True
            stack.append((lo, mid))
            stack.append((mid, hi))
    return [points[i] for i in np.flatnonzero(keep)]


def _collapse_collinear(ring: list[tuple[int, int]]) -> list[tuple[int, int]]:
    """Drop ring vertices whose neighbors are collinear with them (cyclic)."""
    pts = np.asarray(ring, dtype=np.int64)
    prv = np.roll(pts, 1, axis=0)
    nxt = np.roll(pts, -1, axis=0)
    cross = (pts[:, 0] - prv[:, 0]) * (nxt[:, 1] - pts[:, 1]) - (
        pts[:, 1] - prv[:, 1]
    ) * (nxt[:, 0] - pts[:, 0])
    keep = np.flatnonzero(cross != 0)
    if len(keep) >= 3:
        return [ring[i] for i in keep]
    return ring


def simplify_contour(c: Contour, tolerance: float) -> Contour:
    """RDP for closed contours; closure preserved, deviation <= tolerance.

    Exactly collinear vertices are always dropped first (a pure subset
    operation with zero deviation). With tolerance 0 that is the whole job;
    otherwise the ring is split at its first point and the point farthest
    from it so both RDP anchors are stable.
    """
    if tolerance < 0:
        raise ValueError("tolerance must be >= 0")
    ring = _collapse_collinear(list(c.points[:-1]))
    if tolerance == 0 or len(ring) <= 3:
        return Contour(points=tuple(ring + [ring[0]]), kind=c.kind)
    pts = np.asarray(ring, dtype=np.float64)
    far = int(np.argmax(np.sum((pts - pts[0]) ** 2, axis=1)))
    chain_a = rdp(ring[: far + 1], tolerance)
    chain_b = rdp(ring[far:] + [ring[0]], tolerance)
    new_ring = chain_a[:-1] + chain_b[:-1]
    if len(new_ring) < 3:
        # keep a third anchor so the polygon stays two-dimensional
        third = int(np.argmax(_seg_dist(pts, pts[0], pts[far])))
        anchors = sorted({0, far, third})
        new_ring = [ring[i] for i in anchors]
    return Contour(points=tuple(new_ring + [new_ring[0]]), kind=c.kind)


def chamfer_3_4(mask: np.ndarray) -> np.ndarray:
    """Two-pass chamfer 3-4 distance to the complement of a boolean mask.

    Horizontal propagation inside each pass is the min-plus prefix scan
    d[j] = min(c[j], d[j-1] + 3), vectorized via the d - 3j transform.
    """
    big = np.int64(1) << 40
    d = np.where(mask, big, 0).astype(np.int64)
    h, w = d.shape
    cols3 = 3 * np.arange(w, dtype=np.int64)
    for r in range(h):
        cand = d[r].copy()
        if r > 0:
            up = d[r - 1]
            cand = np.minimum(cand, up + 3)
            cand[1:] = np.minimum(cand[1:], up[:-1] + 4)
            cand[:-1] = np.minimum(cand[:-1], up[1:] + 4)
        d[r] = np.minimum.accumulate(cand - cols3) + cols3
    for r in range(h - 1, -1, -1):
        cand = d[r].copy()
        if r < h - 1:
            dn = d[r + 1]
            cand = np.minimum(cand, dn + 3)
            cand[1:] = np.minimum(cand[1:], dn[:-1] + 4)
            cand[:-1] = np.minimum(cand[:-1], dn[1:] + 4)
        d[r] = np.minimum.accumulate((cand + cols3)[::-1])[::-1] - cols3
    return d


def compute_label_anchor(
    rm: RegionMap, region_id: int
) -> tuple[int, int, float] | None:
    """Most interior pixel of a region by chamfer 3-4 distance.

    Returns (x, y, clearance-in-px) or None when the region is too thin to
    hold a readable number. The canvas border counts as region complement.
    Ties take the first pixel in (row, column) order.
    """
    if not 0 <= region_id < len(rm.regions):
        raise ValueError(f"unknown region id {region_id}")
    x0, y0, x1, y1 = rm.regions[region_id].bbox
    crop = rm.region_of[y0 : y1 + 1, x0 : x1 + 1] == region_id
    padded = np.zeros((crop.shape[0] + 2, crop.shape[1] + 2), bool)
    padded[1:-1, 1:-1] = crop
    dist = chamfer_3_4(padded)[1:-1, 1:-1]
    dist[~crop] = -1
    flat_best = int(np.argmax(dist))
    r, c = divmod(flat_best, crop.shape[1])
    clearance = float(dist[r, c]) / 3.0
    if clearance < MIN_LABEL_CLEARANCE:
        return None
    return (x0 + c, y0 + r, clearance)


def segment_image(
    img: RasterImage,
    k: int,
    seed: int = 0,
    min_area_fraction: float = DEFAULT_MIN_AREA_FRACTION,
    restarts: int = 1,
    max_analysis_dim: int = 1024,
) -> tuple[RasterImage, Palette, RegionMap]:
    """Shared front half of the pipeline: downscale, quantize, label, merge."""
    if not 0 <= min_area_fraction < 1:
        raise ValueError("min_area_fraction must be in [0, 1)")
    analyzed = downscale_for_analysis(img, max_analysis_dim)
    palette, imap = quantize_colors(analyzed, k, seed=seed, restarts=restarts)
    rm = label_regions(imap, connectivity=4)
    min_area = max(1, math.ceil(min_area_fraction * analyzed.width * analyzed.height))
    rm = merge_small_regions(rm, palette, min_area)
    return analyzed, palette, rm


def build_template(
    img: RasterImage,
    k: int = 16,
    seed: int = 0,
    min_area_fraction: float = DEFAULT_MIN_AREA_FRACTION,
    simplify_tolerance: float = 0.0,
    restarts: int = 1,
    max_analysis_dim: int = 1024,
) -> PbnTemplate:
    """Full paint-by-number pipeline from a raster image to a template."""
    analyzed, palette, rm = segment_image(
        img, k, seed, min_area_fraction, restarts, max_analysis_dim
    )
    all_contours = trace_boundaries(rm)
    regions = []
    for region in rm.regions:
        contours = tuple(
            simplify_contour(c, simplify_tolerance) for c in all_contours[region.id]
        )
        anchor = compute_label_anchor(rm, region.id)
        regions.append(
            TemplateRegion(
                id=region.id,
                number=palette.entries[region.palette_index].number,
                contours=contours,
                label_anchor=None if anchor is None else (anchor[0], anchor[1]),
                clearance=None if anchor is None else anchor[2],
                label_omitted=anchor is None,
                area=region.area,
            )
        )
    return PbnTemplate(
        canvas=(analyzed.width, analyzed.height),
        palette=palette,
        regions=tuple(regions),
    )
