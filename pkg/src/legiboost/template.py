"""Design template data model, JSON loading, and pipeline configuration.

Templates are JSON documents; image references resolve relative to the
template file. Schema violations are reported with JSON-pointer paths.
A template has a user layout when every asset carries a positioned bbox;
assets may instead declare only a size, leaving placement to the layout
optimizer.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, replace

import numpy as np

from . import raster
from .color import ColorRGB, parse_hex_color
from .injection import CalibrationParams, InjectionConfig

BBox = tuple[int, int, int, int]

ASSET_KINDS = ("text", "graphic")


class TemplateValidationError(ValueError):
    """Schema violation, addressed by a JSON-pointer-style path."""

    def __init__(self, pointer: str, message: str):
        super().__init__(f"{pointer}: {message}")
        self.pointer = pointer


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class DesignAsset:
    """A foreground element: text or graphic, with a dominant color.

    ``bbox`` is present when the user supplied a layout; otherwise
    ``size`` alone drives placement.
    """

    id: str
    kind: str
    color: ColorRGB
    bbox: BBox | None = None
    size: tuple[int, int] | None = None
    content: str | None = None
    raster_mask: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.kind not in ASSET_KINDS:
            raise ValueError(f"asset {self.id!r}: unknown kind {self.kind!r}")
        if self.bbox is None and self.size is None:
            raise ValueError(f"asset {self.id!r}: needs bbox or size")
        if self.kind == "text" and not self.content:
            raise ValueError(f"asset {self.id!r}: text asset requires content")
        w, h = self.extent
        if w <= 0 or h <= 0:
            raise ValueError(f"asset {self.id!r}: empty extent")

    @property
    def extent(self) -> tuple[int, int]:
        if self.bbox is not None:
            return self.bbox[2], self.bbox[3]
        assert self.size is not None
        return self.size

    def with_bbox(self, bbox: BBox) -> "DesignAsset":
        return replace(self, bbox=bbox)

    def with_color(self, color: ColorRGB) -> "DesignAsset":
        return replace(self, color=color)


@dataclass(frozen=True)
class DesignTemplate:
    canvas_w: int
    canvas_h: int
    assets: tuple[DesignAsset, ...]
    background: np.ndarray | None = None
    keywords: tuple[str, ...] = ()
    fixed_elements: tuple[BBox, ...] = ()
    saliency: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.canvas_w <= 0 or self.canvas_h <= 0:
            raise ValueError("canvas must be positive")
        for a in self.assets:
            if a.bbox is not None and not self._inside(a.bbox):
                raise ValueError(f"asset {a.id!r}: bbox outside canvas")
        for fb in self.fixed_elements:
            if not self._inside(fb):
                raise ValueError(f"fixed element {fb} outside canvas")

    def _inside(self, b: BBox) -> bool:
        x, y, w, h = b
        return x >= 0 and y >= 0 and w > 0 and h > 0 and x + w <= self.canvas_w and y + h <= self.canvas_h

    @property
    def has_user_layout(self) -> bool:
        return bool(self.assets) and all(a.bbox is not None for a in self.assets)

    def prompt_text(self) -> str | None:
        if not self.keywords:
            return None
        return ", ".join(self.keywords)


def _parse_color(value, pointer: str) -> ColorRGB:
    if isinstance(value, str):
        try:
            return parse_hex_color(value)
        except ValueError as exc:
            raise TemplateValidationError(pointer, str(exc)) from None
    if isinstance(value, (list, tuple)) and len(value) == 3:
        try:
            return ColorRGB(*(float(v) for v in value)).validate()
        except (TypeError, ValueError) as exc:
            raise TemplateValidationError(pointer, str(exc)) from None
    raise TemplateValidationError(pointer, "expected '#RRGGBB' or [r, g, b]")


def _parse_bbox(value, pointer: str) -> BBox:
    if not isinstance(value, (list, tuple)) or len(value) != 4:
        raise TemplateValidationError(pointer, "expected [x, y, w, h]")
    try:
        x, y, w, h = (int(v) for v in value)
    except (TypeError, ValueError):
        raise TemplateValidationError(pointer, "bbox entries must be integers") from None
    if w <= 0 or h <= 0:
        raise TemplateValidationError(pointer, "bbox must have positive extent")
    return (x, y, w, h)


def load_template(path: str) -> DesignTemplate:
    """Load and validate a template JSON document."""
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise TemplateValidationError("/", f"template file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise TemplateValidationError("/", f"invalid JSON: {exc}") from None
    base = os.path.dirname(os.path.abspath(path))

    canvas = doc.get("canvas")
    if not isinstance(canvas, dict) or "width" not in canvas or "height" not in canvas:
        raise TemplateValidationError("/canvas", "expected {width, height}")
    cw, ch = int(canvas["width"]), int(canvas["height"])
    if cw <= 0 or ch <= 0:
        raise TemplateValidationError("/canvas", "canvas must be positive")

    def load_ref(name, pointer, loader):
        ref = os.path.join(base, name)
        if not os.path.exists(ref):
            raise TemplateValidationError(pointer, f"referenced image not found: {name}")
        return loader(ref)

    background = None
    if doc.get("background"):
        background = load_ref(doc["background"], "/background", raster.load_image)
        if background.shape[:2] != (ch, cw):
            raise TemplateValidationError("/background", "background size must match canvas")

    sal = None
    if doc.get("saliency"):
        sal = load_ref(doc["saliency"], "/saliency", raster.load_gray)
        if sal.shape != (ch, cw):
            raise TemplateValidationError("/saliency", "saliency size must match canvas")

    assets = []
    for i, entry in enumerate(doc.get("assets", [])):
        ptr = f"/assets/{i}"
        if not isinstance(entry, dict):
            raise TemplateValidationError(ptr, "expected an object")
        asset_id = entry.get("id")
        if not asset_id:
            raise TemplateValidationError(f"{ptr}/id", "asset id is required")
        kind = entry.get("kind", "text")
        if kind not in ASSET_KINDS:
            raise TemplateValidationError(f"{ptr}/kind", f"kind must be one of {ASSET_KINDS}")
        color = _parse_color(entry.get("color", "#000000"), f"{ptr}/color")
        bbox = size = None
        if "bbox" in entry:
            bbox = _parse_bbox(entry["bbox"], f"{ptr}/bbox")
            x, y, w, h = bbox
            if x < 0 or y < 0 or x + w > cw or y + h > ch:
                raise TemplateValidationError(
                    f"{ptr}/bbox", f"asset {asset_id!r} bbox exceeds canvas"
                )
        elif "size" in entry:
            sval = entry["size"]
            if not isinstance(sval, (list, tuple)) or len(sval) != 2:
                raise TemplateValidationError(f"{ptr}/size", "expected [w, h]")
            size = (int(sval[0]), int(sval[1]))
            if size[0] <= 0 or size[1] <= 0:
                raise TemplateValidationError(f"{ptr}/size", "size must be positive")
        else:
            raise TemplateValidationError(ptr, "asset needs bbox or size")
        content = entry.get("content")
        if kind == "text" and not content:
            raise TemplateValidationError(f"{ptr}/content", "text asset requires content")
        mask = None
        if entry.get("raster_mask"):
            mask = load_ref(entry["raster_mask"], f"{ptr}/raster_mask", raster.load_gray)
            w, h = (bbox[2], bbox[3]) if bbox else size
            if mask.shape != (h, w):
                raise TemplateValidationError(
                    f"{ptr}/raster_mask", "mask size must match the asset extent"
                )
        assets.append(
            DesignAsset(id=asset_id, kind=kind, color=color, bbox=bbox, size=size,
                        content=content, raster_mask=mask)
        )

    fixed = []
    for i, entry in enumerate(doc.get("fixed_elements", [])):
        fb = _parse_bbox(entry, f"/fixed_elements/{i}")
        x, y, w, h = fb
        if x < 0 or y < 0 or x + w > cw or y + h > ch:
            raise TemplateValidationError(f"/fixed_elements/{i}", "fixed element exceeds canvas")
        fixed.append(fb)

    keywords = doc.get("keywords", [])
    if not isinstance(keywords, list) or not all(isinstance(k, str) for k in keywords):
        raise TemplateValidationError("/keywords", "expected a list of strings")

    return DesignTemplate(
        canvas_w=cw,
        canvas_h=ch,
        assets=tuple(assets),
        background=background,
        keywords=tuple(keywords),
        fixed_elements=tuple(fixed),
        saliency=sal,
    )


@dataclass(frozen=True)
class PipelineConfig:
    paradigm: str = "diffedit"
    variations: int = 4
    calibration: CalibrationParams = field(default_factory=CalibrationParams)
    injection: InjectionConfig = field(default_factory=InjectionConfig)
    strength_model_path: str | None = None
    backend: str = "mock"
    seed: int = 0

    def __post_init__(self) -> None:
        if self.paradigm not in ("sdedit", "diffedit"):
            raise ConfigError(f"paradigm must be sdedit or diffedit, got {self.paradigm!r}")
        if self.variations < 1:
            raise ConfigError("variations must be at least 1")


def load_config(path: str) -> PipelineConfig:
    """Load a pipeline configuration JSON file."""
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid config JSON: {exc}") from None
    base = os.path.dirname(os.path.abspath(path))

    cal_doc = doc.get("calibration", {})
    try:
        cal = CalibrationParams(
            min_inj=float(cal_doc.get("min_inj", 0.2)),
            max_inj=float(cal_doc.get("max_inj", 0.8)),
        )
    except ValueError as exc:
        raise ConfigError(f"calibration: {exc}") from None

    inj_doc = doc.get("injection", {})
    patch_doc = doc.get("patches", {})
    inj = InjectionConfig(
        luminance_weight=float(inj_doc.get("luminance", 1.0)),
        color_weight=float(inj_doc.get("color", 1.0)),
        texture_weight=float(inj_doc.get("texture", 0.35)),
        noise_amplitude=float(inj_doc.get("noise", 0.15)),
        patch_count=int(patch_doc.get("count", 1000)),
        patch_block=int(patch_doc.get("block", 25)),
        noise_octaves=int(inj_doc.get("noise_octaves", 5)),
    )

    model_path = doc.get("strength_model")
    if model_path:
        model_path = os.path.join(base, model_path)
        if not os.path.exists(model_path):
            raise ConfigError(f"strength model file not found: {model_path}")

    try:
        return PipelineConfig(
            paradigm=doc.get("paradigm", "diffedit"),
            variations=int(doc.get("variations", 4)),
            calibration=cal,
            injection=inj,
            strength_model_path=model_path,
            backend=doc.get("backend", "mock"),
            seed=int(doc.get("seed", 0)),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
