"""Raster primitives shared across the pipeline.

Images are float64 numpy arrays in [0, 1]: ``(H, W, 3)`` for RGB, ``(H, W)``
for single-channel masks and maps, row-major. PNG files are quantized with
``round(v * 255)`` on save and divided by 255 on load, so values on the
8-bit lattice round-trip exactly.
"""

from __future__ import annotations

import numpy as np
from PIL import Image

U64 = np.uint64
_MASK64 = np.uint64(0xFFFFFFFFFFFFFFFF)


def load_image(path: str) -> np.ndarray:
    """Load an image file as an (H, W, 3) float array in [0, 1]."""
    with Image.open(path) as im:
        arr = np.asarray(im.convert("RGB"), dtype=np.float64)
    return arr / 255.0


def load_gray(path: str) -> np.ndarray:
    """Load a single-channel 8-bit image as an (H, W) float array in [0, 1]."""
    with Image.open(path) as im:
        arr = np.asarray(im.convert("L"), dtype=np.float64)
    return arr / 255.0


def save_image(arr: np.ndarray, path: str) -> None:
    """Write an (H, W, 3) or (H, W) float array in [0, 1] as 8-bit PNG."""
    q = np.clip(np.round(np.clip(arr, 0.0, 1.0) * 255.0), 0, 255).astype(np.uint8)
    mode = "RGB" if q.ndim == 3 else "L"
    Image.fromarray(q, mode=mode).save(path, format="PNG")


def quantize8(arr: np.ndarray) -> np.ndarray:
    """Snap a float array in [0, 1] to the 8-bit lattice (still float)."""
    return np.round(np.clip(arr, 0.0, 1.0) * 255.0) / 255.0


def white_canvas(h: int, w: int) -> np.ndarray:
    return np.ones((h, w, 3), dtype=np.float64)


def to_gray(img: np.ndarray) -> np.ndarray:
    """Collapse RGB to a single luma channel (0.2126/0.7152/0.0722)."""
    if img.ndim == 2:
        return img.astype(np.float64, copy=True)
    return img[..., 0] * 0.2126 + img[..., 1] * 0.7152 + img[..., 2] * 0.0722


def resize_bilinear(arr: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resize of a 2-D or 3-D array, pixel-center aligned."""
    in_h, in_w = arr.shape[:2]
    if (in_h, in_w) == (out_h, out_w):
        return arr.astype(np.float64, copy=True)
    ys = (np.arange(out_h) + 0.5) * in_h / out_h - 0.5
    xs = (np.arange(out_w) + 0.5) * in_w / out_w - 0.5
    y0 = np.clip(np.floor(ys).astype(int), 0, in_h - 1)
    x0 = np.clip(np.floor(xs).astype(int), 0, in_w - 1)
    y1 = np.minimum(y0 + 1, in_h - 1)
    x1 = np.minimum(x0 + 1, in_w - 1)
    fy = np.clip(ys - y0, 0.0, 1.0)
    fx = np.clip(xs - x0, 0.0, 1.0)
    if arr.ndim == 3:
        fy = fy[:, None, None]
        fx = fx[None, :, None]
    else:
        fy = fy[:, None]
        fx = fx[None, :]
    a = arr[np.ix_(y0, x0)]
    b = arr[np.ix_(y0, x1)]
    c = arr[np.ix_(y1, x0)]
    d = arr[np.ix_(y1, x1)]
    top = a + (b - a) * fx
    bot = c + (d - c) * fx
    return top + (bot - top) * fy


def box_blur(img: np.ndarray, radius: int) -> np.ndarray:
    """Separable box blur with edge replication; kernel size 2r+1."""
    if radius <= 0:
        return img.astype(np.float64, copy=True)
    k = 2 * radius + 1
    pad_spec = [(radius, radius), (0, 0)] + ([(0, 0)] if img.ndim == 3 else [])
    padded = np.pad(img, pad_spec, mode="edge")
    csum = np.cumsum(padded, axis=0)
    zero = np.zeros_like(csum[:1])
    csum = np.concatenate([zero, csum], axis=0)
    vert = (csum[k:] - csum[:-k]) / k
    pad_spec = [(0, 0), (radius, radius)] + ([(0, 0)] if img.ndim == 3 else [])
    padded = np.pad(vert, pad_spec, mode="edge")
    csum = np.cumsum(padded, axis=1)
    zero = np.zeros_like(csum[:, :1])
    csum = np.concatenate([zero, csum], axis=1)
    return (csum[:, k:] - csum[:, :-k]) / k


def gaussian_blur(img: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian blur with edge replication."""
    if sigma <= 0:
        return img.astype(np.float64, copy=True)
    radius = max(1, int(round(3.0 * sigma)))
    xs = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-0.5 * (xs / sigma) ** 2)
    kernel /= kernel.sum()

    def conv_axis(a: np.ndarray, axis: int) -> np.ndarray:
        pad_spec = [(0, 0)] * a.ndim
        pad_spec[axis] = (radius, radius)
        padded = np.pad(a, pad_spec, mode="edge")
        out = np.zeros_like(a, dtype=np.float64)
        for i, w in enumerate(kernel):
            sl = [slice(None)] * a.ndim
            sl[axis] = slice(i, i + a.shape[axis])
            out += w * padded[tuple(sl)]
        return out

    return conv_axis(conv_axis(img, 0), 1)


def splitmix64(x: np.ndarray | int):
    """SplitMix64 mix function; accepts a scalar or uint64 array."""
    with np.errstate(over="ignore"):
        z = (np.asarray(x, dtype=U64) + U64(0x9E3779B97F4A7C15)) & _MASK64
        z = ((z ^ (z >> U64(30))) * U64(0xBF58476D1CE4E5B9)) & _MASK64
        z = ((z ^ (z >> U64(27))) * U64(0x94D049BB133111EB)) & _MASK64
        return z ^ (z >> U64(31))


def hash_u01(*streams) -> np.ndarray:
    """Deterministic uniform [0, 1) from integer key streams.

    Keys are combined pairwise through SplitMix64, so results do not
    depend on array memory order or platform.
    """
    acc = None
    with np.errstate(over="ignore"):
        for s in streams:
            arr = np.asarray(s, dtype=U64)
            acc = splitmix64(arr) if acc is None else splitmix64(acc ^ arr)
    assert acc is not None
    return (acc >> U64(11)).astype(np.float64) * (1.0 / (1 << 53))


def split_seed(seed: int, counter: int) -> int:
    """Counter-based derived seed: reproducible in isolation."""
    with np.errstate(over="ignore"):
        return int(splitmix64(np.uint64(seed & 0xFFFFFFFFFFFFFFFF) ^ splitmix64(np.uint64(counter))))


def fnv1a64(data: bytes) -> int:
    """FNV-1a 64-bit hash."""
    h = 14695981039346656037
    for byte in data:
        h ^= byte
        h = (h * 1099511628211) & 0xFFFFFFFFFFFFFFFF
    return h


def encode_png_base64(arr: np.ndarray) -> str:
    """Encode a float image/mask to base64 PNG (8-bit quantized)."""
    import base64
    import io

    q = np.clip(np.round(np.clip(arr, 0.0, 1.0) * 255.0), 0, 255).astype(np.uint8)
    mode = "RGB" if q.ndim == 3 else "L"
    buf = io.BytesIO()
    Image.fromarray(q, mode=mode).save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def decode_png_base64(data: str, gray: bool = False) -> np.ndarray:
    """Decode a base64 PNG into a float array in [0, 1]."""
    import base64
    import io

    with Image.open(io.BytesIO(base64.b64decode(data))) as im:
        arr = np.asarray(im.convert("L" if gray else "RGB"), dtype=np.float64)
    return arr / 255.0
