"""Deterministic CPU reference model for the editing protocol.

No neural networks: captioning names the dominant color, the text encoder
hashes tokens into a 64-dimensional embedding (mean-pooled, L2-normed),
and the editor blends the input toward a blurred, prompt-tinted, noise-
seasoned target scaled by the strength parameter. Every output is a pure
function of its inputs, so responses are reproducible bit for bit.
"""

from __future__ import annotations

import base64
import io
import re

import numpy as np
from PIL import Image

EMBED_DIM = 64
_MASK64 = np.uint64(0xFFFFFFFFFFFFFFFF)
_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)

# Small naming palette for captions.
CAPTION_COLORS = [
    ("black", (0.0, 0.0, 0.0)),
    ("white", (1.0, 1.0, 1.0)),
    ("gray", (0.5, 0.5, 0.5)),
    ("red", (1.0, 0.0, 0.0)),
    ("green", (0.0, 0.8, 0.0)),
    ("blue", (0.0, 0.0, 1.0)),
    ("yellow", (1.0, 1.0, 0.0)),
    ("cyan", (0.0, 1.0, 1.0)),
    ("magenta", (1.0, 0.0, 1.0)),
    ("orange", (1.0, 0.6, 0.0)),
    ("brown", (0.5, 0.3, 0.1)),
    ("pink", (1.0, 0.7, 0.8)),
    ("purple", (0.5, 0.0, 0.5)),
    ("teal", (0.0, 0.5, 0.5)),
    ("navy", (0.0, 0.0, 0.4)),
    ("olive", (0.5, 0.5, 0.0)),
]


def splitmix64(x: np.ndarray | int) -> np.ndarray:
    with np.errstate(over="ignore"):
        z = (np.asarray(x, dtype=np.uint64) + np.uint64(0x9E3779B97F4A7C15)) & _MASK64
        z = ((z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)) & _MASK64
        z = ((z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)) & _MASK64
        return z ^ (z >> np.uint64(31))


def hash_u01(*streams) -> np.ndarray:
    acc = None
    with np.errstate(over="ignore"):
        for s in streams:
            arr = np.asarray(s, dtype=np.uint64)
            acc = splitmix64(arr) if acc is None else splitmix64(acc ^ arr)
    return (acc >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))


def fnv1a64(data: bytes) -> int:
    h = 14695981039346656037
    for byte in data:
        h ^= byte
        h = (h * 1099511628211) & 0xFFFFFFFFFFFFFFFF
    return h


def decode_image(data: str, gray: bool = False) -> np.ndarray:
    with Image.open(io.BytesIO(base64.b64decode(data))) as im:
        arr = np.asarray(im.convert("L" if gray else "RGB"), dtype=np.float64)
    return arr / 255.0


def encode_image(arr: np.ndarray) -> str:
    q = np.clip(np.round(np.clip(arr, 0.0, 1.0) * 255.0), 0, 255).astype(np.uint8)
    buf = io.BytesIO()
    Image.fromarray(q, mode="RGB" if q.ndim == 3 else "L").save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def box_blur(img: np.ndarray, radius: int) -> np.ndarray:
    k = 2 * radius + 1
    pad = [(radius, radius), (0, 0)] + ([(0, 0)] if img.ndim == 3 else [])
    padded = np.pad(img, pad, mode="edge")
    csum = np.concatenate([np.zeros_like(padded[:1]), np.cumsum(padded, axis=0)], axis=0)
    vert = (csum[k:] - csum[:-k]) / k
    pad = [(0, 0), (radius, radius)] + ([(0, 0)] if img.ndim == 3 else [])
    padded = np.pad(vert, pad, mode="edge")
    csum = np.concatenate([np.zeros_like(padded[:, :1]), np.cumsum(padded, axis=1)], axis=1)
    return (csum[:, k:] - csum[:, :-k]) / k


class ReferenceModel:
    """Procedural stand-in honoring strength, seed, and mask semantics."""

    embed_dim = EMBED_DIM
    metadata = {"embed_reduction": "mean-pool-l2"}

    def caption(self, img: np.ndarray) -> str:
        mean = img.reshape(-1, 3).mean(axis=0)
        best = min(
            CAPTION_COLORS,
            key=lambda nc: float(np.sum((mean - np.array(nc[1])) ** 2)),
        )
        return f"a background image with dominant color {best[0]}"

    def embed_norm(self, prompt: str) -> float:
        tokens = _TOKEN_RE.findall(prompt.lower()) or [prompt]
        dims = np.arange(EMBED_DIM, dtype=np.uint64)
        vectors = []
        for token in tokens:
            seed = np.uint64(fnv1a64(token.encode("utf-8")))
            vectors.append(hash_u01(seed, dims) * 2.0 - 1.0)
        pooled = np.mean(vectors, axis=0)
        # offset keeps the norm strictly positive even for a near-zero pool
        return float(np.sqrt(np.sum(pooled * pooled)) * 12.0 + 8.0)

    def edit(
        self,
        img: np.ndarray,
        mask: np.ndarray | None,
        prompt: str,
        strength: float,
        seed: int,
        paradigm: str,
    ) -> np.ndarray:
        h, w = img.shape[:2]
        blur = box_blur(img, 2)
        tint_seed = np.uint64(fnv1a64(prompt.encode("utf-8")))
        tint = hash_u01(tint_seed, np.arange(3, dtype=np.uint64))[None, None, :]
        pix = np.arange(h * w, dtype=np.uint64).reshape(h, w)
        noise = box_blur(hash_u01(np.uint64(seed & 0xFFFFFFFFFFFFFFFF), pix), 1)
        target = 0.6 * blur + 0.25 * tint + 0.15 * noise[:, :, None]
        edited = img + strength * (target - img)
        if paradigm == "diffedit":
            assert mask is not None
            edited = img + mask[:, :, None] * (edited - img)
        return np.clip(edited, 0.0, 1.0)
