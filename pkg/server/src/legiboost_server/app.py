"""FastAPI application implementing the editing wire protocol.

Endpoints (JSON bodies, images as base64 PNG):

    GET  /v1/identity
    POST /v1/caption   {image}
    POST /v1/embed     {prompt}
    POST /v1/edit      {image, mask?, prompt, strength, seed, paradigm}

Malformed requests return HTTP 400 with ``{code, message}``. Model calls
are serialized through a single lock (one request queue per device).
"""

from __future__ import annotations

import binascii
import threading

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from .adapters import ServerConfig, resolve_adapter
from .reference import decode_image, encode_image


class ProtocolError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code
        self.message = message


def _require(body: dict, key: str, kind) -> object:
    if not isinstance(body, dict) or key not in body:
        raise ProtocolError("missing_field", f"request body requires {key!r}")
    value = body[key]
    if kind is str and (not isinstance(value, str) or not value.strip()):
        raise ProtocolError("bad_field", f"{key!r} must be a non-empty string")
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ProtocolError("bad_field", f"{key!r} must be a number")
        return float(value)
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ProtocolError("bad_field", f"{key!r} must be an integer")
    return value


def _decode(data, gray: bool = False):
    try:
        return decode_image(data, gray=gray)
    except (binascii.Error, ValueError, OSError) as exc:
        raise ProtocolError("bad_image", f"undecodable image payload: {exc}") from exc


def create_app(config: ServerConfig) -> FastAPI:
    adapter = resolve_adapter(config)
    lock = threading.Lock()
    app = FastAPI(title="legiboost-server", docs_url=None, redoc_url=None)

    @app.exception_handler(ProtocolError)
    async def protocol_error(_req: Request, exc: ProtocolError):
        return JSONResponse(status_code=400, content={"code": exc.code, "message": exc.message})

    @app.exception_handler(RequestValidationError)
    async def validation_error(_req: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=400, content={"code": "bad_request", "message": str(exc)}
        )

    @app.get("/v1/identity")
    def identity():
        payload = {"id": config.model, "embed_dim": adapter.embed_dim}
        payload.update(getattr(adapter, "metadata", {}))
        return payload

    @app.post("/v1/caption")
    async def caption(request: Request):
        body = await request.json()
        img = _decode(_require(body, "image", str))
        with lock:
            text = adapter.caption(img)
        return {"prompt": text}

    @app.post("/v1/embed")
    async def embed(request: Request):
        body = await request.json()
        prompt = _require(body, "prompt", str)
        with lock:
            norm = adapter.embed_norm(prompt)
        return {"norm": norm}

    @app.post("/v1/edit")
    async def edit(request: Request):
        body = await request.json()
        img = _decode(_require(body, "image", str))
        prompt = _require(body, "prompt", str)
        strength = _require(body, "strength", float)
        seed = _require(body, "seed", int)
        paradigm = _require(body, "paradigm", str)
        if paradigm not in ("sdedit", "diffedit"):
            raise ProtocolError("bad_paradigm", f"unknown paradigm {paradigm!r}")
        if not 0.0 <= strength <= 1.0:
            raise ProtocolError("bad_strength", "strength must lie in [0, 1]")
        mask = None
        if "mask" in body:
            mask = _decode(body["mask"], gray=True)
            if mask.shape != img.shape[:2]:
                raise ProtocolError("bad_mask", "mask dimensions must match the image")
        if paradigm == "diffedit" and mask is None:
            raise ProtocolError("missing_mask", "diffedit requires a mask")
        with lock:
            out = adapter.edit(img, mask, prompt, strength, seed, paradigm)
        return {"image": encode_image(out)}

    return app
