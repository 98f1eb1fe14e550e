"""Diffusion-friendly patch mining, quilted texture synthesis, and
fractal value noise.

A patch qualifies as diffusion-friendly when its mean color keeps a WCAG
contrast of at least 4.5 against every asset color and its per-channel
pixel standard deviation is at least 0.05. Quilting composes mined
patches with a minimum-error boundary cut, so every output pixel is an
exact copy of some source-patch pixel (no blending).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import raster
from .color import ColorRGB, contrast_ratio, relative_luminance

CONTRAST_GATE = 4.5
STD_GATE = 0.05
_CHOICE_TOLERANCE = 0.1

_TAG_X = 0x11
_TAG_Y = 0x22
_TAG_PICK = 0x33
_TAG_NOISE = 0x44


class PatchMiningError(RuntimeError):
    pass


@dataclass(frozen=True)
class PatchSet:
    """Mined square blocks: ``patches`` has shape (n, b, b, 3)."""

    patches: np.ndarray
    block_size: int
    source_positions: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        n, bh, bw = self.patches.shape[:3]
        if bh != self.block_size or bw != self.block_size:
            raise ValueError("patch array does not match block size")
        if n != len(self.source_positions):
            raise ValueError("positions do not match patch count")

    def __len__(self) -> int:
        return self.patches.shape[0]


def _linearize(c: np.ndarray) -> np.ndarray:
    return np.where(c <= 0.04045, c / 12.92, ((c + 0.055) / 1.055) ** 2.4)


def mine_patches(
    img: np.ndarray,
    asset_colors: list[ColorRGB],
    n: int,
    b: int,
    seed: int,
) -> PatchSet:
    """Mine up to ``n`` diffusion-friendly ``b x b`` patches.

    Candidate positions come from a seeded hash stream, capped at 50 * n
    attempts and evaluated in stream order. Gates are computed from
    mean-conditioned integral images with a small guard band, then each
    accepted patch is re-verified with direct per-pixel statistics, so
    independent recomputation always satisfies the thresholds. Raises
    :class:`PatchMiningError` when nothing qualifies.
    """
    h, w = img.shape[:2]
    if h < b or w < b:
        raise ValueError(f"image {w}x{h} smaller than patch size {b}")
    attempts = 50 * n
    idx = np.arange(attempts, dtype=np.uint64)
    xs = np.floor(raster.hash_u01(seed, idx, _TAG_X) * (w - b + 1)).astype(int)
    ys = np.floor(raster.hash_u01(seed, idx, _TAG_Y) * (h - b + 1)).astype(int)

    # Conditioning on the global mean keeps the variance subtraction
    # numerically tight; the 1e-7 band absorbs the residual error.
    band = 1e-7
    mu = img.mean(axis=(0, 1))
    shifted = img - mu
    area = float(b * b)
    pad = [(1, 0), (1, 0), (0, 0)]
    sat = np.pad(np.cumsum(np.cumsum(shifted, axis=0), axis=1), pad)
    satsq = np.pad(np.cumsum(np.cumsum(shifted * shifted, axis=0), axis=1), pad)

    def box(tab: np.ndarray, y: np.ndarray, x: np.ndarray) -> np.ndarray:
        return tab[y + b, x + b] - tab[y, x + b] - tab[y + b, x] + tab[y, x]

    mean_sh = box(sat, ys, xs) / area
    variances = np.maximum(box(satsq, ys, xs) / area - mean_sh * mean_sh, 0.0)
    ok = np.sqrt(variances).min(axis=1) >= STD_GATE + band

    means = np.clip(mean_sh + mu, 0.0, 1.0)
    lin = _linearize(means)
    lum = lin[:, 0] * 0.2126 + lin[:, 1] * 0.7152 + lin[:, 2] * 0.0722
    for color in asset_colors:
        lc = relative_luminance(color)
        hi = np.maximum(lum, lc)
        lo = np.minimum(lum, lc)
        ok &= (hi + 0.05) / (lo + 0.05) >= CONTRAST_GATE + band

    accepted: list[np.ndarray] = []
    positions: list[tuple[int, int]] = []
    for k in np.flatnonzero(ok):
        x, y = int(xs[k]), int(ys[k])
        patch = img[y : y + b, x : x + b]
        mean = ColorRGB(*(float(v) for v in patch.mean(axis=(0, 1))))
        if float(patch.std(axis=(0, 1)).min()) < STD_GATE or any(
            contrast_ratio(mean, ac) < CONTRAST_GATE for ac in asset_colors
        ):
            continue
        accepted.append(patch.copy())
        positions.append((x, y))
        if len(accepted) >= n:
            break
    if not accepted:
        raise PatchMiningError("no diffusion-friendly patches")
    return PatchSet(np.stack(accepted), b, tuple(positions))


def overlap_width(block_size: int) -> int:
    return max(1, round(block_size / 6))


def _min_cut_path(surface: np.ndarray) -> tuple[np.ndarray, float]:
    """Minimum-cost top-to-bottom path through an (h, ov) error surface.

    The path may move one column per row; ties keep the lowest column.
    Returns (per-row column indices, total path cost).
    """
    h, ov = surface.shape
    cost = surface[0].copy()
    back = np.zeros((h, ov), dtype=int)
    for i in range(1, h):
        prev = np.full((3, ov), np.inf)
        prev[1] = cost
        prev[0, 1:] = cost[:-1]  # from column j-1
        prev[2, :-1] = cost[1:]  # from column j+1
        pick = np.argmin(prev, axis=0)  # ties: prefer lower source column
        back[i] = np.arange(ov) + pick - 1
        cost = prev[pick, np.arange(ov)] + surface[i]
    j = int(np.argmin(cost))
    total = float(cost[j])
    path = np.zeros(h, dtype=int)
    for i in range(h - 1, -1, -1):
        path[i] = j
        j = back[i, j]
    return path, total


@dataclass
class BlockRecord:
    """Per-block synthesis record for seam verification."""

    y: int
    x: int
    patch_index: int
    v_surface: np.ndarray | None
    h_surface: np.ndarray | None
    v_cut: np.ndarray | None
    h_cut: np.ndarray | None
    v_cost: float
    h_cost: float


def quilt_texture_detailed(
    patches: PatchSet,
    out_w: int,
    out_h: int,
    seed: int,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, list[BlockRecord]]:
    """Quilt with full provenance: (image, patch_idx, src_y, src_x, records)."""
    if len(patches) == 0:
        raise ValueError("empty patch set")
    b = patches.block_size
    ov = overlap_width(b)
    step = b - ov
    bank = patches.patches

    def positions(extent: int) -> list[int]:
        pos = [0]
        while pos[-1] + b < extent:
            pos.append(pos[-1] + step)
        return pos

    out = np.zeros((out_h, out_w, 3), dtype=np.float64)
    prov_idx = np.full((out_h, out_w), -1, dtype=int)
    prov_y = np.zeros((out_h, out_w), dtype=int)
    prov_x = np.zeros((out_h, out_w), dtype=int)
    records: list[BlockRecord] = []

    # SSD via |p|^2 - 2 p.r + |r|^2 with precomputed bank norms for the
    # common full-size overlap strips; clipped edge blocks fall back to
    # the direct difference.
    left_flat = np.ascontiguousarray(bank[:, :, :ov, :].reshape(len(patches), -1))
    left_norm = (left_flat * left_flat).sum(axis=1)
    top_flat = np.ascontiguousarray(bank[:, :ov, :, :].reshape(len(patches), -1))
    top_norm = (top_flat * top_flat).sum(axis=1)

    def strip_ssd(region: np.ndarray, rows: int, cols: int, vertical: bool) -> np.ndarray:
        if vertical and rows == b and cols == ov:
            r = region.reshape(-1)
            return left_norm - 2.0 * (left_flat @ r) + r @ r
        if not vertical and rows == ov and cols == b:
            r = region.reshape(-1)
            return top_norm - 2.0 * (top_flat @ r) + r @ r
        diff = bank[:, :rows, :cols] - region[None]
        return (diff * diff).sum(axis=(1, 2, 3))

    counter = 0
    for r, y in enumerate(positions(out_h)):
        for c, x in enumerate(positions(out_w)):
            bh = min(b, out_h - y)
            bw = min(b, out_w - x)
            ov_v = min(ov, bw) if c > 0 else 0
            ov_h = min(ov, bh) if r > 0 else 0

            ssd = np.zeros(len(patches))
            if ov_v:
                region = out[y : y + bh, x : x + ov_v]
                ssd += strip_ssd(region, bh, ov_v, vertical=True)
            if ov_h:
                region = out[y : y + ov_h, x : x + bw]
                ssd += strip_ssd(region, ov_h, bw, vertical=False)
            if ov_v or ov_h:
                lo = float(ssd.min())
                cands = np.flatnonzero(ssd <= lo * (1.0 + _CHOICE_TOLERANCE) + 1e-12)
            else:
                cands = np.arange(len(patches))
            pick = float(raster.hash_u01(seed, counter, _TAG_PICK))
            k = int(cands[int(pick * len(cands)) % len(cands)])
            counter += 1
            patch = bank[k, :bh, :bw]

            v_cut = v_surf = h_cut = h_surf = None
            v_cost = h_cost = 0.0
            if ov_v:
                v_surf = ((out[y : y + bh, x : x + ov_v] - patch[:, :ov_v]) ** 2).sum(axis=2)
                v_cut, v_cost = _min_cut_path(v_surf)
            if ov_h:
                h_surf = ((out[y : y + ov_h, x : x + bw] - patch[:ov_h, :]) ** 2).sum(axis=2).T
                h_cut, h_cost = _min_cut_path(h_surf)

            take_new = np.ones((bh, bw), dtype=bool)
            if v_cut is not None:
                cols = np.arange(bw)[None, :]
                take_new &= (cols >= ov_v) | (cols >= v_cut[:, None])
            if h_cut is not None:
                rows = np.arange(bh)[:, None]
                take_new &= (rows >= ov_h) | (rows >= h_cut[None, :])

            yy, xx = np.nonzero(take_new)
            out[y + yy, x + xx] = patch[yy, xx]
            prov_idx[y + yy, x + xx] = k
            prov_y[y + yy, x + xx] = yy
            prov_x[y + yy, x + xx] = xx
            records.append(BlockRecord(y, x, k, v_surf, h_surf, v_cut, h_cut, v_cost, h_cost))

    return out, prov_idx, prov_y, prov_x, records


def quilt_texture(patches: PatchSet, out_w: int, out_h: int, seed: int) -> np.ndarray:
    """Synthesize an ``out_h x out_w`` texture tiled from the patch set."""
    return quilt_texture_detailed(patches, out_w, out_h, seed)[0]


def _fade(t: np.ndarray) -> np.ndarray:
    return t * t * t * (t * (t * 6.0 - 15.0) + 10.0)


def fractal_noise(w: int, h: int, octaves: int, seed: int) -> np.ndarray:
    """Seeded value-noise fBm in [0, 1]: persistence 0.5, lacunarity 2.

    Octave 0 uses an 8-cell lattice per axis; byte-identical for a fixed
    (w, h, octaves, seed) on any platform.
    """
    if w < 1 or h < 1:
        raise ValueError("noise extent must be at least 1x1")
    if octaves < 1:
        raise ValueError("octaves must be at least 1")
    total = np.zeros((h, w), dtype=np.float64)
    weight_sum = 0.0
    amp = 1.0
    for o in range(octaves):
        cells = 8 << o
        u = (np.arange(w, dtype=np.float64) + 0.5) * cells / w
        v = (np.arange(h, dtype=np.float64) + 0.5) * cells / h
        iu = np.floor(u).astype(np.uint64)
        iv = np.floor(v).astype(np.uint64)
        fu = _fade(u - np.floor(u))
        fv = _fade(v - np.floor(v))
        nodes_x = np.arange(int(iu.max()) + 2, dtype=np.uint64)
        nodes_y = np.arange(int(iv.max()) + 2, dtype=np.uint64)
        grid = raster.hash_u01(seed, nodes_y[:, None], nodes_x[None, :], _TAG_NOISE + o)
        ix = iu.astype(int)
        iy = iv.astype(int)
        v00 = grid[np.ix_(iy, ix)]
        v01 = grid[np.ix_(iy, ix + 1)]
        v10 = grid[np.ix_(iy + 1, ix)]
        v11 = grid[np.ix_(iy + 1, ix + 1)]
        top = v00 + (v01 - v00) * fu[None, :]
        bot = v10 + (v11 - v10) * fu[None, :]
        total += amp * (top + (bot - top) * fv[:, None])
        weight_sum += amp
        amp *= 0.5
    return total / weight_sum
