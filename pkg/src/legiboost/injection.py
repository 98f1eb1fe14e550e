"""Auxiliary image construction: luminance shift, contrasting color
injection, quilted texture, fractal noise, and the Gaussian edit mask.

The luminance delta is signed by the asset's luminance pole and applied
so the background moves the opposite way (a bright asset darkens its
region). Color injection blends the complement of the asset color into
segmented objects at full weight and into the rest of the region at half
weight. Texture and noise are confined to the Gaussian edit mask.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import raster
from .color import (
    ColorRGB,
    mean_color,
    opposite_color,
    relative_luminance,
    rgb_to_hsv,
)
from .prompts import Prompt
from .texture import PatchMiningError, PatchSet, fractal_noise, mine_patches, quilt_texture

MASK_TRUNCATION_RADIUS = 3.0  # sigmas; beyond this the edit mask is exactly 0

BBox = tuple[int, int, int, int]


@dataclass(frozen=True)
class CalibrationParams:
    """Injection bounds; alpha and beta derive from (min_inj, max_inj)."""

    min_inj: float = 0.2
    max_inj: float = 0.8

    def __post_init__(self) -> None:
        if not (0.0 < self.min_inj < self.max_inj <= 1.0):
            raise ValueError("calibration requires 0 < min_inj < max_inj <= 1")

    @property
    def alpha(self) -> float:
        return 1.0 / self.min_inj

    @property
    def beta(self) -> float:
        return self.alpha - 1.0 / self.max_inj


def luminance_delta(a: ColorRGB, b: ColorRGB, cal: CalibrationParams) -> float:
    """Signed luminance injection amount for asset color ``a`` over mean
    region color ``b``; magnitude lies in [min_inj, max_inj].

    The sign follows the asset's luminance pole; exactly mid-luminance
    assets take +1 by convention.
    """
    la = relative_luminance(a)
    lb = relative_luminance(b)
    sign = 1.0 if la >= 0.5 else -1.0
    return sign / (cal.alpha - cal.beta * abs(la - lb))


# --- vectorized sRGB <-> CIELAB used by the luminance pass -------------

_M_FWD = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
_M_INV = np.array(
    [
        [3.2404542, -1.5371385, -0.4985314],
        [-0.9692660, 1.8760108, 0.0415560],
        [0.0556434, -0.2040259, 1.0572252],
    ]
)
_WHITE = np.array([0.95047, 1.0, 1.08883])
_D = 6.0 / 29.0


def rgb_array_to_lab(rgb: np.ndarray) -> np.ndarray:
    """(N, 3) sRGB in [0, 1] to (N, 3) CIELAB (D65)."""
    lin = np.where(rgb <= 0.04045, rgb / 12.92, ((rgb + 0.055) / 1.055) ** 2.4)
    xyz = lin @ _M_FWD.T / _WHITE
    f = np.where(xyz > _D**3, np.cbrt(xyz), xyz / (3 * _D**2) + 4.0 / 29.0)
    lab = np.empty_like(rgb)
    lab[:, 0] = 116.0 * f[:, 1] - 16.0
    lab[:, 1] = 500.0 * (f[:, 0] - f[:, 1])
    lab[:, 2] = 200.0 * (f[:, 1] - f[:, 2])
    return lab


def lab_array_to_rgb(lab: np.ndarray) -> np.ndarray:
    """(N, 3) CIELAB to (N, 3) sRGB, clamped into gamut."""
    fy = (lab[:, 0] + 16.0) / 116.0
    f = np.stack([fy + lab[:, 1] / 500.0, fy, fy - lab[:, 2] / 200.0], axis=1)
    xyz = np.where(f > _D, f**3, 3 * _D**2 * (f - 4.0 / 29.0)) * _WHITE
    lin = np.clip(xyz @ _M_INV.T, 0.0, 1.0)
    srgb = np.where(lin <= 0.0031308, 12.92 * lin, 1.055 * lin ** (1.0 / 2.4) - 0.055)
    return np.clip(srgb, 0.0, 1.0)


def apply_luminance(img: np.ndarray, region: np.ndarray, delta_l: float) -> np.ndarray:
    """Shift region pixels by -delta_l * 100 in CIELAB L*, gamut-clamped.

    Pixels outside ``region`` are untouched; an empty region returns the
    image unchanged.
    """
    out = img.copy()
    if not region.any():
        return out
    px = out[region]
    lab = rgb_array_to_lab(px)
    lab[:, 0] = np.clip(lab[:, 0] - delta_l * 100.0, 0.0, 100.0)
    out[region] = lab_array_to_rgb(lab)
    return out


HUE_BAND_DEG = 18.0
SV_BAND = 0.25


def hsv_neighborhood_fraction(pixels: np.ndarray, c: ColorRGB) -> float:
    """Fraction of pixels whose HSV lies in the neighborhood of ``c``.

    The neighborhood is hue within +/-18 degrees (circular), saturation
    and value within +/-0.25.
    """
    pts = np.asarray(pixels, dtype=np.float64).reshape(-1, 3)
    if pts.shape[0] == 0:
        raise ValueError("empty region")
    target = rgb_to_hsv(c)
    mx = pts.max(axis=1)
    mn = pts.min(axis=1)
    d = mx - mn
    h = np.zeros(len(pts))
    nz = d > 0
    r, g, b = pts[:, 0], pts[:, 1], pts[:, 2]
    is_r = nz & (mx == r)
    is_g = nz & (mx == g) & ~is_r
    is_b = nz & ~is_r & ~is_g
    h[is_r] = (60.0 * (g[is_r] - b[is_r]) / d[is_r]) % 360.0
    h[is_g] = (60.0 * (b[is_g] - r[is_g]) / d[is_g] + 120.0) % 360.0
    h[is_b] = (60.0 * (r[is_b] - g[is_b]) / d[is_b] + 240.0) % 360.0
    s = np.where(mx > 0, d / np.maximum(mx, 1e-300), 0.0)
    dh = np.abs(h - target.h)
    dh = np.minimum(dh, 360.0 - dh)
    inside = (dh <= HUE_BAND_DEG) & (np.abs(s - target.s) <= SV_BAND) & (
        np.abs(mx - target.v) <= SV_BAND
    )
    return float(inside.mean())


def color_injection_weight(frac: float, cal: CalibrationParams) -> float:
    """Blend weight 1 / (alpha - beta * frac), in [min_inj, max_inj]."""
    if not (0.0 <= frac <= 1.0):
        raise ValueError("fraction must lie in [0, 1]")
    return 1.0 / (cal.alpha - cal.beta * frac)


class SegmentedObject:
    """A segmented region object with mask, confidence, and area share.

    The binary mask may be given directly or lazily materialized from
    pixel coordinates (the segmentation stand-in can produce thousands
    of components; only selected ones ever need a full raster).
    """

    def __init__(
        self,
        mask: np.ndarray | None = None,
        confidence: float = 0.0,
        area_fraction: float = 0.0,
        *,
        pixels: tuple[np.ndarray, np.ndarray] | None = None,
        shape: tuple[int, int] | None = None,
    ):
        if mask is None and (pixels is None or shape is None):
            raise ValueError("provide a mask or pixels+shape")
        if not (0.0 <= confidence <= 1.0):
            raise ValueError("confidence must lie in [0, 1]")
        if not (0.0 <= area_fraction <= 1.0):
            raise ValueError("area_fraction must lie in [0, 1]")
        self._mask = mask
        self._pixels = pixels
        self._shape = shape if shape is not None else (mask.shape if mask is not None else None)
        self.confidence = confidence
        self.area_fraction = area_fraction

    @property
    def mask(self) -> np.ndarray:
        if self._mask is None:
            m = np.zeros(self._shape, dtype=bool)
            m[self._pixels] = True
            self._mask = m
        return self._mask


CONFIDENCE_GATE = 0.8
AREA_GATE = 0.2


def select_objects(objs: list[SegmentedObject]) -> list[SegmentedObject]:
    """Keep objects with confidence >= 0.8 and area fraction >= 0.2."""
    return [o for o in objs if o.confidence >= CONFIDENCE_GATE and o.area_fraction >= AREA_GATE]


def segment_region(img: np.ndarray, region: np.ndarray, levels: int = 8) -> list[SegmentedObject]:
    """Deterministic segmentation stand-in: color-quantized connected
    components (4-connected) within the region.

    Confidence is 1 minus the within-component color standard deviation
    normalized by 0.5. Component labeling runs a vectorized union-find;
    masks materialize lazily.
    """
    h, w = region.shape
    ys, xs = np.nonzero(region)
    n = len(ys)
    if n == 0:
        return []
    q = np.minimum((img * levels).astype(int), levels - 1)
    keys = (q[..., 0] * levels + q[..., 1]) * levels + q[..., 2]
    index = -np.ones((h, w), dtype=np.int64)
    index[ys, xs] = np.arange(n)
    parent = np.arange(n)

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    right = region[:, :-1] & region[:, 1:] & (keys[:, :-1] == keys[:, 1:])
    down = region[:-1, :] & region[1:, :] & (keys[:-1, :] == keys[1:, :])
    edges = []
    ey, ex = np.nonzero(right)
    edges.append((index[ey, ex], index[ey, ex + 1]))
    ey, ex = np.nonzero(down)
    edges.append((index[ey, ex], index[ey + 1, ex]))
    for pa, pb in edges:
        for a, b in zip(pa.tolist(), pb.tolist()):
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[rb] = ra
    while True:
        squashed = parent[parent]
        if np.array_equal(squashed, parent):
            break
        parent = squashed

    roots, inverse, counts = np.unique(parent, return_inverse=True, return_counts=True)
    colors = img[ys, xs]
    sums = np.zeros((len(roots), 3))
    sumsq = np.zeros((len(roots), 3))
    np.add.at(sums, inverse, colors)
    np.add.at(sumsq, inverse, colors * colors)
    means = sums / counts[:, None]
    var = np.maximum(sumsq / counts[:, None] - means * means, 0.0)
    spread = np.sqrt(var).mean(axis=1)
    confidence = np.clip(1.0 - spread / 0.5, 0.0, 1.0)

    order = np.argsort(inverse, kind="stable")
    bounds = np.concatenate([[0], np.cumsum(counts)])
    objs = []
    for i in range(len(roots)):
        sel = order[bounds[i] : bounds[i + 1]]
        objs.append(
            SegmentedObject(
                confidence=float(confidence[i]),
                area_fraction=float(counts[i] / n),
                pixels=(ys[sel], xs[sel]),
                shape=(h, w),
            )
        )
    return objs


def load_segmentation(mask_path: str, region_area: int,
                      confidence: float | None = None) -> SegmentedObject:
    """Build a SegmentedObject from an external 8-bit mask file.

    Unless given explicitly, confidence comes from the JSON sidecar next
    to the mask (``<mask>.json`` with ``{"confidence": ...}``).
    """
    import json
    import os

    mask = raster.load_gray(mask_path) >= 0.5
    if confidence is None:
        sidecar = os.path.splitext(mask_path)[0] + ".json"
        with open(sidecar, encoding="utf-8") as fh:
            confidence = float(json.load(fh)["confidence"])
    return SegmentedObject(
        mask=mask,
        confidence=confidence,
        area_fraction=float(mask.sum()) / max(1, region_area),
    )


def apply_color_injection(
    img: np.ndarray,
    region: np.ndarray,
    objs: list[SegmentedObject],
    c: ColorRGB,
    weight: float,
) -> np.ndarray:
    """Blend color ``c`` into selected objects (full weight) and the rest
    of the region (half weight, the whole-mask consistency term)."""
    if not (0.0 < weight <= 1.0):
        raise ValueError("weight must lie in (0, 1]")
    out = img.copy()
    target = np.array(c, dtype=np.float64)
    obj_mask = np.zeros(region.shape, dtype=bool)
    for o in objs:
        obj_mask |= o.mask & region
    rest = region & ~obj_mask
    out[obj_mask] = (1.0 - weight) * out[obj_mask] + weight * target
    half = weight / 2.0
    out[rest] = (1.0 - half) * out[rest] + half * target
    return out


def gaussian_mask(bbox: BBox, canvas_w: int, canvas_h: int) -> np.ndarray:
    """Gaussian edit mask peaking at 1 over the bbox center.

    Sigma is (w/2, h/2) per axis, so the mask scales with the asset.
    Values beyond 3 sigma are exactly zero, which keeps pixels far from
    the asset bit-identical under mask-restricted editing.
    """
    x, y, w, h = bbox
    if w <= 0 or h <= 0 or x >= canvas_w or y >= canvas_h or x + w <= 0 or y + h <= 0:
        raise ValueError("bbox does not intersect canvas")
    # Pixel-index coordinates: the center of an even-sized box falls on a
    # pixel, so the peak value 1 and the +sigma value land on the raster.
    cx = x + w / 2.0
    cy = y + h / 2.0
    sx = w / 2.0
    sy = h / 2.0
    xs = (np.arange(canvas_w) - cx) / sx
    ys = (np.arange(canvas_h) - cy) / sy
    r2 = ys[:, None] ** 2 + xs[None, :] ** 2
    mask = np.exp(-0.5 * r2)
    mask[r2 > MASK_TRUNCATION_RADIUS**2] = 0.0
    return mask


@dataclass(frozen=True)
class InjectionConfig:
    """Weights for each contrast source; zero disables a source."""

    luminance_weight: float = 1.0
    color_weight: float = 1.0
    texture_weight: float = 0.35
    noise_amplitude: float = 0.15
    patch_count: int = 1000
    patch_block: int = 25
    noise_octaves: int = 5


@dataclass(frozen=True)
class AuxiliaryBundle:
    """Phase-one output handed to the generative backend."""

    aux_image: np.ndarray
    edit_mask: np.ndarray
    cleaned_prompt: Prompt
    strength: float
    provenance: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.aux_image.shape[:2] != self.edit_mask.shape:
            raise ValueError("mask dimensions must match the auxiliary image")
        if not (0.0 <= self.strength <= 1.0):
            raise ValueError("strength must lie in [0, 1]")


def compose_auxiliary(
    img: np.ndarray,
    *,
    target_bbox: BBox,
    target_color: ColorRGB,
    asset_colors: list[ColorRGB],
    cal: CalibrationParams,
    cfg: InjectionConfig,
    seed: int,
    cleaned_prompt: Prompt,
    strength: float,
    segmented: list[SegmentedObject] | None = None,
    patches: PatchSet | None = None,
    texture_skip: str | None = None,
) -> AuxiliaryBundle:
    """Build the auxiliary image and edit mask for one design asset.

    Injection order: luminance, color, quilted texture, fractal noise.
    Patch-mining failure is recorded in the provenance and skips texture
    injection instead of aborting. Callers may pass pre-mined ``patches``
    (or a ``texture_skip`` reason) to share mining across compositions.
    """
    h, w = img.shape[:2]
    bx, by, bw, bh = target_bbox
    if bx < 0 or by < 0 or bx + bw > w or by + bh > h:
        raise ValueError("target bbox outside canvas")
    region = np.zeros((h, w), dtype=bool)
    region[by : by + bh, bx : bx + bw] = True

    aux = img.copy()
    b_mean = mean_color(img[region])
    delta = luminance_delta(target_color, b_mean, cal)
    applied_delta = delta * cfg.luminance_weight
    if cfg.luminance_weight != 0.0:
        aux = apply_luminance(aux, region, applied_delta)

    complement = opposite_color(target_color)
    color_w = 0.0
    if cfg.color_weight != 0.0:
        frac = hsv_neighborhood_fraction(aux[region], complement)
        color_w = min(1.0, color_injection_weight(frac, cal) * cfg.color_weight)
        objs = segmented if segmented is not None else segment_region(aux, region)
        aux = apply_color_injection(aux, region, select_objects(objs), complement, color_w)

    mask = gaussian_mask(target_bbox, w, h)
    sup_ys, sup_xs = np.nonzero(mask > 0.0)
    y0, y1 = int(sup_ys.min()), int(sup_ys.max()) + 1
    x0, x1 = int(sup_xs.min()), int(sup_xs.max()) + 1
    sup_mask = mask[y0:y1, x0:x1, None]

    if cfg.texture_weight > 0.0 and texture_skip is None:
        if patches is None and min(h, w) < cfg.patch_block:
            texture_skip = "canvas smaller than patch block"
        else:
            try:
                if patches is None:
                    patches = mine_patches(
                        img, asset_colors, cfg.patch_count, cfg.patch_block,
                        raster.split_seed(seed, 1),
                    )
                tex = quilt_texture(patches, x1 - x0, y1 - y0, raster.split_seed(seed, 2))
                sub = aux[y0:y1, x0:x1]
                aux[y0:y1, x0:x1] = sub + cfg.texture_weight * sup_mask * (tex - sub)
            except PatchMiningError as exc:
                texture_skip = str(exc)

    if cfg.noise_amplitude > 0.0:
        noise = fractal_noise(x1 - x0, y1 - y0, cfg.noise_octaves, raster.split_seed(seed, 3))
        aux[y0:y1, x0:x1] += cfg.noise_amplitude * sup_mask * (2.0 * noise[:, :, None] - 1.0)

    np.clip(aux, 0.0, 1.0, out=aux)
    provenance = {
        "delta_l": applied_delta,
        "color_weight": color_w,
        "texture_weight": 0.0 if texture_skip else cfg.texture_weight,
        "noise_amplitude": cfg.noise_amplitude,
        "seed": seed,
        "texture_skipped": texture_skip,
    }
    return AuxiliaryBundle(aux, mask, cleaned_prompt, strength, provenance)
