"""Saliency map approximation and the center-bias attention prior.

The built-in estimator is spectral-residual saliency computed at 64x64 and
upsampled; externally produced maps (e.g. from a learned attention model)
can be loaded from 8-bit grayscale PNG instead, with 255 mapping to
maximum saliency.
"""

from __future__ import annotations

import numpy as np

from . import raster

_WORK_SIZE = 64
_SMOOTH_SIGMA = 2.5
_CENTER_SIGMA_FRAC = 0.3


def compute_saliency(img: np.ndarray) -> np.ndarray:
    """Spectral-residual saliency of an image, normalized to [0, 1].

    Deterministic; a featureless input yields the all-zero map.
    """
    if img.size == 0:
        raise ValueError("empty image")
    gray = raster.to_gray(img)
    if gray.shape[0] < 2 or gray.shape[1] < 2:
        return np.zeros(gray.shape, dtype=np.float64)
    if float(gray.max() - gray.min()) < 1e-12:
        # A constant image has no spectral residual.
        return np.zeros(gray.shape, dtype=np.float64)

    small = raster.resize_bilinear(gray, _WORK_SIZE, _WORK_SIZE)
    spectrum = np.fft.fft2(small)
    log_amp = np.log(np.abs(spectrum) + 1e-8)
    phase = np.angle(spectrum)
    residual = log_amp - raster.box_blur(log_amp, 1)
    sal = np.abs(np.fft.ifft2(np.exp(residual + 1j * phase))) ** 2
    sal = raster.gaussian_blur(sal, _SMOOTH_SIGMA)
    sal = raster.resize_bilinear(sal, gray.shape[0], gray.shape[1])
    return normalize_map(sal)


def normalize_map(m: np.ndarray) -> np.ndarray:
    """Min-max normalize to [0, 1]; near-constant maps collapse to zero."""
    lo = float(m.min())
    hi = float(m.max())
    if hi - lo < 1e-12:
        return np.zeros_like(m, dtype=np.float64)
    return (m - lo) / (hi - lo)


def apply_center_bias(m: np.ndarray) -> np.ndarray:
    """Weight a saliency map by a centered anisotropic Gaussian prior.

    The prior peaks at 1.0 in the canvas center with sigma = 0.3 * extent
    per axis; the product is renormalized so the maximum is 1 again.
    """
    h, w = m.shape
    ys = np.arange(h, dtype=np.float64) - (h - 1) / 2.0
    xs = np.arange(w, dtype=np.float64) - (w - 1) / 2.0
    gy = np.exp(-0.5 * (ys / (_CENTER_SIGMA_FRAC * h)) ** 2)
    gx = np.exp(-0.5 * (xs / (_CENTER_SIGMA_FRAC * w)) ** 2)
    out = m * gy[:, None] * gx[None, :]
    peak = float(out.max())
    if peak < 1e-12:
        return np.zeros_like(m, dtype=np.float64)
    return out / peak


def load_saliency(path: str) -> np.ndarray:
    """Load an externally computed map from 8-bit grayscale PNG."""
    return raster.load_gray(path)
