"""Generative editing backends: the wire protocol, a deterministic mock,
and an HTTP client with retry.

Wire protocol (JSON bodies, images as base64 PNG):

    POST /v1/caption  {image}                                  -> {prompt}
    POST /v1/embed    {prompt}                                 -> {norm}
    POST /v1/edit     {image, mask?, prompt, strength, seed,
                       paradigm}                               -> {image}
    GET  /v1/identity                                          -> {id, embed_dim}

4xx responses carry ``{code, message}`` and are not retried; 5xx and
transport failures retry with exponential backoff (3 attempts).
"""

from __future__ import annotations

import time
import uuid
from dataclasses import dataclass
from typing import NamedTuple, Protocol

import numpy as np
import requests

from . import raster
from .color import ColorLexicon, default_lexicon, mean_color, nearest_color_name
from .prompts import Prompt

PARADIGM_SDEDIT = "sdedit"
PARADIGM_DIFFEDIT = "diffedit"


class BackendError(RuntimeError):
    pass


class BackendRequestError(BackendError):
    """Request rejected by the server (HTTP 4xx)."""

    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.message = message


class BackendTransportError(BackendError):
    """Transport failure after exhausting retries."""

    def __init__(self, message: str, request_id: str, attempts: int):
        super().__init__(f"{message} (request {request_id}, {attempts} attempts)")
        self.request_id = request_id
        self.attempts = attempts


class BackendIdentity(NamedTuple):
    id: str
    embed_dim: int


@dataclass(frozen=True)
class EditRequest:
    """A strength-conditioned edit; diffedit requires a mask."""

    image: np.ndarray
    mask: np.ndarray | None
    prompt: str
    strength: float
    seed: int
    paradigm: str

    def __post_init__(self) -> None:
        if self.paradigm not in (PARADIGM_SDEDIT, PARADIGM_DIFFEDIT):
            raise ValueError(f"unknown paradigm {self.paradigm!r}")
        if self.paradigm == PARADIGM_DIFFEDIT and self.mask is None:
            raise ValueError("diffedit requires a mask")
        if not (0.0 <= self.strength <= 1.0):
            raise ValueError("strength must lie in [0, 1]")
        if self.mask is not None and self.mask.shape != self.image.shape[:2]:
            raise ValueError("mask dimensions must match the image")

    def to_wire(self) -> dict:
        body = {
            "image": raster.encode_png_base64(self.image),
            "prompt": self.prompt,
            "strength": self.strength,
            "seed": self.seed,
            "paradigm": self.paradigm,
        }
        if self.mask is not None:
            body["mask"] = raster.encode_png_base64(self.mask)
        return body

    @classmethod
    def from_wire(cls, body: dict) -> "EditRequest":
        return cls(
            image=raster.decode_png_base64(body["image"]),
            mask=raster.decode_png_base64(body["mask"], gray=True) if "mask" in body else None,
            prompt=body["prompt"],
            strength=float(body["strength"]),
            seed=int(body["seed"]),
            paradigm=body["paradigm"],
        )


class GenerativeBackend(Protocol):
    def identity(self) -> BackendIdentity: ...

    def caption(self, img: np.ndarray) -> Prompt: ...

    def embed_norm(self, p: Prompt) -> float: ...

    def edit(self, req: EditRequest) -> np.ndarray: ...


MOCK_NOISE_AMPLITUDE = 0.05
_BLUR_RADIUS = 2  # 5x5 box


class MockBackend:
    """Fully deterministic stand-in backend.

    caption: names the mean image color. embed_norm: FNV-1a hash of the
    prompt folded into [10, 30). edit: blend toward a 5x5 box blur plus
    per-pixel hash noise of amplitude 0.05 * strength; seed 0 disables
    the noise term by convention. The edit is confined to the mask for
    diffedit, so mask-zero pixels are bit-identical.
    """

    def __init__(self, lexicon: ColorLexicon | None = None):
        self._lexicon = lexicon or default_lexicon()

    def identity(self) -> BackendIdentity:
        return BackendIdentity("mock", 64)

    def caption(self, img: np.ndarray) -> Prompt:
        if img.size == 0:
            raise ValueError("empty image")
        name = nearest_color_name(mean_color(img.reshape(-1, 3)), self._lexicon)
        return Prompt(f"a background image with dominant color {name}", source="caption")

    def embed_norm(self, p: Prompt) -> float:
        return 10.0 + (raster.fnv1a64(p.text.encode("utf-8")) % 2000) / 100.0

    def edit(self, req: EditRequest) -> np.ndarray:
        img = req.image
        s = req.strength
        edited = (1.0 - s) * img + s * raster.box_blur(img, _BLUR_RADIUS)
        if req.seed != 0 and s > 0.0:
            h, w = img.shape[:2]
            pix = np.arange(h * w, dtype=np.uint64).reshape(h, w)
            noise = raster.hash_u01(req.seed, pix)
            edited = edited + (2.0 * noise[:, :, None] - 1.0) * (MOCK_NOISE_AMPLITUDE * s)
        if req.paradigm == PARADIGM_DIFFEDIT:
            assert req.mask is not None
            m = req.mask[:, :, None]
            out = img + m * (edited - img)
        else:
            out = edited
        return np.clip(out, 0.0, 1.0)


class HTTPBackend:
    """Client for a remote backend implementing the wire protocol."""

    def __init__(
        self,
        base_url: str,
        timeout: float = 120.0,
        retries: int = 3,
        backoff: float = 0.5,
        session: requests.Session | None = None,
    ):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.retries = retries
        self.backoff = backoff
        self._session = session or requests.Session()
        self._identity: BackendIdentity | None = None

    def _request(self, method: str, path: str, body: dict | None = None) -> dict:
        request_id = str(uuid.uuid4())
        url = f"{self.base_url}{path}"
        last_error = "unknown transport failure"
        for attempt in range(self.retries):
            try:
                resp = self._session.request(
                    method, url, json=body, timeout=self.timeout,
                    headers={"X-Request-Id": request_id},
                )
            except requests.RequestException as exc:
                last_error = str(exc)
            else:
                if resp.status_code < 400:
                    return resp.json()
                if resp.status_code < 500:
                    try:
                        payload = resp.json()
                    except ValueError:
                        payload = {}
                    raise BackendRequestError(
                        payload.get("code", str(resp.status_code)),
                        payload.get("message", resp.text[:200]),
                    )
                last_error = f"server error {resp.status_code}"
            if attempt + 1 < self.retries:
                time.sleep(self.backoff * (2**attempt))
        raise BackendTransportError(last_error, request_id, self.retries)

    def identity(self) -> BackendIdentity:
        if self._identity is None:
            obj = self._request("GET", "/v1/identity")
            self._identity = BackendIdentity(obj["id"], int(obj["embed_dim"]))
        return self._identity

    def caption(self, img: np.ndarray) -> Prompt:
        obj = self._request("POST", "/v1/caption", {"image": raster.encode_png_base64(img)})
        return Prompt(obj["prompt"], source="caption")

    def embed_norm(self, p: Prompt) -> float:
        obj = self._request("POST", "/v1/embed", {"prompt": p.text})
        return float(obj["norm"])

    def edit(self, req: EditRequest) -> np.ndarray:
        obj = self._request("POST", "/v1/edit", req.to_wire())
        return raster.decode_png_base64(obj["image"])


def make_backend(spec: str) -> GenerativeBackend:
    """Build a backend from ``"mock"`` or a base URL."""
    if spec == "mock":
        return MockBackend()
    if spec.startswith("http://") or spec.startswith("https://"):
        return HTTPBackend(spec)
    raise ValueError(f"backend must be 'mock' or an http(s) URL, got {spec!r}")
