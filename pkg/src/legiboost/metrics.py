"""Image quality metrics for evaluating edits: PSNR (capped), SSIM,
spectral angle, and the WCAG contrast gained under an asset.

Identical images report PSNR 100, SSIM 1, and spectral angle 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from skimage.metrics import structural_similarity

from .color import ColorRGB, contrast_ratio, mean_color

PSNR_CAP_DB = 100.0
SSIM_WINDOW = 7

BBox = tuple[int, int, int, int]


@dataclass(frozen=True)
class MetricsReport:
    psnr_db: float
    ssim: float
    sam_radians: float
    contrast_before: float
    contrast_after: float

    CSV_HEADER = "psnr_db,ssim,sam_radians,contrast_before,contrast_after"

    def csv_row(self) -> str:
        return (
            f"{self.psnr_db:.6f},{self.ssim:.6f},{self.sam_radians:.6f},"
            f"{self.contrast_before:.6f},{self.contrast_after:.6f}"
        )


def psnr(original: np.ndarray, edited: np.ndarray) -> float:
    """Peak signal-to-noise ratio in dB, capped at 100."""
    mse = float(np.mean((original - edited) ** 2))
    if mse < 1e-10:
        return PSNR_CAP_DB
    return min(PSNR_CAP_DB, 20.0 * np.log10(1.0 / np.sqrt(mse)))


def ssim(original: np.ndarray, edited: np.ndarray) -> float:
    """Structural similarity: 7x7 uniform window, K1=0.01, K2=0.03,
    averaged over channels."""
    return float(
        structural_similarity(
            original,
            edited,
            win_size=SSIM_WINDOW,
            K1=0.01,
            K2=0.03,
            data_range=1.0,
            channel_axis=2,
            gaussian_weights=False,
        )
    )


def spectral_angle(original: np.ndarray, edited: np.ndarray) -> float:
    """Mean per-pixel angle (radians) between the RGB vectors.

    Invariant to positive per-pixel scaling; pixel pairs where either
    vector is zero contribute angle 0. Computed from the chord between
    unit vectors, which is exact (0.0) for identical inputs where the
    arccos form would leave rounding residue.
    """
    a = original.reshape(-1, 3)
    b = edited.reshape(-1, 3)
    na = np.sqrt(np.sum(a * a, axis=1))
    nb = np.sqrt(np.sum(b * b, axis=1))
    valid = (na > 0) & (nb > 0)
    u = a[valid] / na[valid, None]
    v = b[valid] / nb[valid, None]
    chord = np.sqrt(np.sum((u - v) ** 2, axis=1))
    angles = np.zeros(len(a))
    angles[valid] = 2.0 * np.arcsin(np.minimum(chord / 2.0, 1.0))
    return float(np.mean(angles))


def region_mean_color(img: np.ndarray, bbox: BBox) -> ColorRGB:
    x, y, w, h = bbox
    return mean_color(img[y : y + h, x : x + w].reshape(-1, 3))


def compute_metrics(
    original: np.ndarray,
    edited: np.ndarray,
    asset_color: ColorRGB,
    asset_bbox: BBox,
) -> MetricsReport:
    """Full-image quality metrics plus the asset's contrast gain."""
    if original.shape != edited.shape:
        raise ValueError(
            f"image dimensions differ: {original.shape} vs {edited.shape}"
        )
    return MetricsReport(
        psnr_db=psnr(original, edited),
        ssim=ssim(original, edited),
        sam_radians=spectral_angle(original, edited),
        contrast_before=contrast_ratio(asset_color, region_mean_color(original, asset_bbox)),
        contrast_after=contrast_ratio(asset_color, region_mean_color(edited, asset_bbox)),
    )
