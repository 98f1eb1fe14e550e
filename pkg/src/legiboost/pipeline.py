"""End-to-end orchestration: initialization, prompt cleaning, layout,
adaptive strength, auxiliary composition, backend editing, and the
variation catalog.

Variation plan (1-based index k): entries 1-2 use the user layout when
present, later entries use the proposed layout; with no user layout all
entries are proposed. Odd entries keep original asset colors, even ones
draw colors from the template palette, with entries 2 and 4 sharing one
draw. Every random choice derives from the run seed through counter
splits, so each variation is reproducible in isolation.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass

import numpy as np

from . import raster
from .backend import (
    PARADIGM_DIFFEDIT,
    BackendError,
    EditRequest,
    GenerativeBackend,
)
from .color import ColorRGB, contrast_ratio, default_lexicon
from .injection import AuxiliaryBundle, compose_auxiliary
from .texture import PatchMiningError, PatchSet, mine_patches
from .layout import LayoutProposal, SizedAsset, propose_layout
from .metrics import region_mean_color
from .prompts import Prompt, clean_prompt
from .saliency import apply_center_bias, compute_saliency
from .strength import StrengthModel, constant_model, predict_strength
from .template import ConfigError, DesignAsset, DesignTemplate, PipelineConfig

PALETTE_SIZE = 8
_PALETTE_LEVELS = 16
_TAG_PALETTE = 0x50
_SEED_INIT = 11
_SEED_AUX_BASE = 71
_SEED_MINING_BASE = 73
_SEED_EDIT_BASE = 1000


class PipelineBackendError(RuntimeError):
    pass


@dataclass(frozen=True)
class VariationPlanEntry:
    index: int
    layout_source: str  # "user" | "proposed"
    color_source: str  # "original" | "palette"
    palette_draw: int  # draw index; entries 2 and 4 share draw 0
    edit_seed: int

    @property
    def aux_code(self) -> tuple[str, int]:
        """Auxiliary cache key: distinct (layout, color draw) pairs."""
        color_code = 0 if self.color_source == "original" else 1 + self.palette_draw
        return (self.layout_source, color_code)


def generate_variations(template: DesignTemplate, cfg: PipelineConfig) -> list[VariationPlanEntry]:
    """Plan the variation catalog for a template."""
    user_layout = template.has_user_layout
    entries = []
    for k in range(1, cfg.variations + 1):
        layout = "user" if (user_layout and k <= 2) else "proposed"
        if k % 2 == 1:
            color, draw = "original", 0
        else:
            color, draw = "palette", max(0, (k - 3) // 2)
        entries.append(
            VariationPlanEntry(
                index=k,
                layout_source=layout,
                color_source=color,
                palette_draw=draw,
                edit_seed=raster.split_seed(cfg.seed, _SEED_EDIT_BASE + k),
            )
        )
    return entries


def extract_palette(img: np.ndarray, size: int = PALETTE_SIZE) -> list[ColorRGB]:
    """The most frequent quantized colors of an image (16 levels/channel).

    Ties sort by quantized key, so the palette is deterministic.
    """
    q = np.minimum((img.reshape(-1, 3) * _PALETTE_LEVELS).astype(np.int64), _PALETTE_LEVELS - 1)
    keys = (q[:, 0] * _PALETTE_LEVELS + q[:, 1]) * _PALETTE_LEVELS + q[:, 2]
    uniq, counts = np.unique(keys, return_counts=True)
    order = np.lexsort((uniq, -counts))
    out = []
    for key in uniq[order[:size]]:
        b = key % _PALETTE_LEVELS
        g = (key // _PALETTE_LEVELS) % _PALETTE_LEVELS
        r = key // (_PALETTE_LEVELS * _PALETTE_LEVELS)
        out.append(ColorRGB(*(float((v + 0.5) / _PALETTE_LEVELS) for v in (r, g, b))))
    return out


def palette_colors_for_assets(
    palette: list[ColorRGB], n_assets: int, seed: int, draw_index: int
) -> list[ColorRGB]:
    """Seeded per-asset palette draw; a draw index identifies one shared
    sample (entries 2 and 4 pass the same index)."""
    picks = raster.hash_u01(seed, _TAG_PALETTE, draw_index, np.arange(n_assets, dtype=np.uint64))
    return [palette[int(u * len(palette)) % len(palette)] for u in np.atleast_1d(picks)]


def pick_target_asset(assets: tuple[DesignAsset, ...]) -> DesignAsset:
    """The asset being emphasized: largest text asset, else largest asset."""
    texts = [a for a in assets if a.kind == "text"]
    pool = texts or list(assets)
    return max(pool, key=lambda a: (a.extent[0] * a.extent[1], a.id))


def draw_asset(img: np.ndarray, asset: DesignAsset) -> None:
    """Composite an asset onto the image in place (bbox fill or mask blend)."""
    assert asset.bbox is not None
    x, y, w, h = asset.bbox
    color = np.array(asset.color, dtype=np.float64)
    if asset.raster_mask is not None:
        alpha = asset.raster_mask[:, :, None]
        region = img[y : y + h, x : x + w]
        img[y : y + h, x : x + w] = region + alpha * (color - region)
    else:
        img[y : y + h, x : x + w] = color


@dataclass
class VariationOutput:
    entry: VariationPlanEntry
    image: np.ndarray
    edited_background: np.ndarray
    bundle: AuxiliaryBundle
    contrast_before: float
    contrast_after: float


@dataclass
class PipelineRun:
    variations: list[VariationOutput]
    manifest: dict
    proposal: LayoutProposal | None


def _resolve_strength_model(cfg: PipelineConfig, backend_id: str) -> StrengthModel:
    if cfg.strength_model_path is None:
        return constant_model(0.5, backend_id)
    model = StrengthModel.from_json_file(cfg.strength_model_path)
    if model.backend_id != backend_id:
        raise ConfigError(
            f"strength model is fitted for backend {model.backend_id!r}, "
            f"but the pipeline backend is {backend_id!r}"
        )
    return model


def run_pipeline(
    template: DesignTemplate,
    cfg: PipelineConfig,
    backend: GenerativeBackend,
    out_dir: str,
) -> PipelineRun:
    """Execute the pipeline and write variation images plus manifest.json.

    On backend failure after retries, a partial manifest is written and
    :class:`PipelineBackendError` is raised.
    """
    os.makedirs(out_dir, exist_ok=True)
    t_start = time.monotonic()
    timings: dict[str, float] = {}
    manifest: dict = {"config": {
        "paradigm": cfg.paradigm,
        "variations": cfg.variations,
        "seed": cfg.seed,
        "backend": cfg.backend,
    }}

    try:
        identity = backend.identity()
    except BackendError as exc:
        manifest["error"] = str(exc)
        _write_manifest(manifest, out_dir)
        raise PipelineBackendError(str(exc)) from exc
    manifest["backend_identity"] = {"id": identity.id, "embed_dim": identity.embed_dim}

    lexicon = default_lexicon()
    prompt_text = template.prompt_text()

    # Initialization: generate, default, or reuse the background; caption
    # when no prompt is available.
    t0 = time.monotonic()
    background = template.background
    generated = False
    try:
        if background is None:
            if prompt_text is not None:
                background = backend.edit(
                    EditRequest(
                        image=raster.white_canvas(template.canvas_h, template.canvas_w),
                        mask=None,
                        prompt=prompt_text,
                        strength=1.0,
                        seed=raster.split_seed(cfg.seed, _SEED_INIT),
                        paradigm="sdedit",
                    )
                )
                generated = True
            else:
                background = raster.white_canvas(template.canvas_h, template.canvas_w)
        prompt = Prompt(prompt_text, "user") if prompt_text else backend.caption(background)
    except BackendError as exc:
        manifest["error"] = str(exc)
        _write_manifest(manifest, out_dir)
        raise PipelineBackendError(str(exc)) from exc
    timings["initialization"] = time.monotonic() - t0
    manifest["background"] = {"generated": generated, "file": "background.png"}
    raster.save_image(background, os.path.join(out_dir, "background.png"))

    if not template.assets:
        # Nothing to harmonize: the catalog is the background itself.
        raster.save_image(background, os.path.join(out_dir, "variation_01.png"))
        manifest["prompt"] = {"text": prompt.text, "source": prompt.source}
        manifest["variations"] = [{"index": 1, "file": "variation_01.png"}]
        manifest["timings"] = timings
        _write_manifest(manifest, out_dir)
        return PipelineRun([], manifest, None)

    target = pick_target_asset(template.assets)
    cleaned = clean_prompt(prompt, target.color, lexicon)
    manifest["prompt"] = {
        "text": prompt.text,
        "source": prompt.source,
        "cleaned": cleaned.text,
        "anchor_asset": target.id,
    }

    model = _resolve_strength_model(cfg, identity.id)
    try:
        norm = backend.embed_norm(cleaned)
    except BackendError as exc:
        manifest["error"] = str(exc)
        _write_manifest(manifest, out_dir)
        raise PipelineBackendError(str(exc)) from exc
    strength = predict_strength(model, norm)
    manifest["strength"] = {"embed_norm": norm, "value": strength}

    plan = generate_variations(template, cfg)

    proposal = None
    proposed_bboxes: dict[str, tuple[int, int, int, int]] = {}
    if any(e.layout_source == "proposed" for e in plan):
        t0 = time.monotonic()
        if template.saliency is not None:
            heat = template.saliency
        else:
            heat = apply_center_bias(compute_saliency(background))
        proposal = propose_layout(
            heat,
            [SizedAsset(a.id, *a.extent) for a in template.assets],
            list(template.fixed_elements),
        )
        proposed_bboxes = {p.asset_id: p.bbox for p in proposal.placements}
        timings["layout"] = time.monotonic() - t0

    palette = extract_palette(background)
    aux_cache: dict[tuple[str, int], AuxiliaryBundle] = {}
    # Mined patches depend on asset colors but not layout, so one mining
    # pass serves both layout variants of a color draw.
    patch_cache: dict[int, tuple[PatchSet | None, str | None]] = {}
    variations: list[VariationOutput] = []
    manifest["variations"] = []

    for entry in plan:
        t0 = time.monotonic()
        assets_k = []
        for i, asset in enumerate(template.assets):
            a = asset
            if entry.layout_source == "proposed":
                a = a.with_bbox(proposed_bboxes[a.id])
            if entry.color_source == "palette":
                colors = palette_colors_for_assets(
                    palette, len(template.assets), cfg.seed, entry.palette_draw
                )
                a = a.with_color(colors[i])
            assets_k.append(a)
        target_k = next(a for a in assets_k if a.id == target.id)

        color_code = entry.aux_code[1]
        if color_code not in patch_cache:
            if cfg.injection.texture_weight <= 0.0:
                patch_cache[color_code] = (None, None)
            elif min(template.canvas_h, template.canvas_w) < cfg.injection.patch_block:
                patch_cache[color_code] = (None, "canvas smaller than patch block")
            else:
                mining_seed = raster.split_seed(
                    raster.split_seed(cfg.seed, _SEED_MINING_BASE), color_code
                )
                try:
                    mined = mine_patches(
                        background,
                        [a.color for a in assets_k],
                        cfg.injection.patch_count,
                        cfg.injection.patch_block,
                        mining_seed,
                    )
                    patch_cache[color_code] = (mined, None)
                except PatchMiningError as exc:
                    patch_cache[color_code] = (None, str(exc))

        if entry.aux_code not in aux_cache:
            layout_code = 0 if entry.layout_source == "user" else 1
            aux_seed = raster.split_seed(
                raster.split_seed(cfg.seed, _SEED_AUX_BASE),
                layout_code * 1000 + entry.aux_code[1],
            )
            mined, skip = patch_cache[color_code]
            aux_cache[entry.aux_code] = compose_auxiliary(
                background,
                target_bbox=target_k.bbox,
                target_color=target_k.color,
                asset_colors=[a.color for a in assets_k],
                cal=cfg.calibration,
                cfg=cfg.injection,
                seed=aux_seed,
                cleaned_prompt=cleaned,
                strength=strength,
                patches=mined,
                texture_skip=skip,
            )
        bundle = aux_cache[entry.aux_code]

        req = EditRequest(
            image=bundle.aux_image,
            mask=bundle.edit_mask if cfg.paradigm == PARADIGM_DIFFEDIT else None,
            prompt=cleaned.text,
            strength=strength,
            seed=entry.edit_seed,
            paradigm=cfg.paradigm,
        )
        try:
            edited = backend.edit(req)
        except BackendError as exc:
            manifest["error"] = str(exc)
            manifest["timings"] = timings
            _write_manifest(manifest, out_dir)
            raise PipelineBackendError(str(exc)) from exc

        final = edited.copy()
        for a in assets_k:
            draw_asset(final, a)

        before = contrast_ratio(target_k.color, region_mean_color(background, target_k.bbox))
        after = contrast_ratio(target_k.color, region_mean_color(edited, target_k.bbox))

        var_file = f"variation_{entry.index:02d}.png"
        bg_file = f"variation_{entry.index:02d}_background.png"
        raster.save_image(final, os.path.join(out_dir, var_file))
        raster.save_image(edited, os.path.join(out_dir, bg_file))
        timings[f"variation_{entry.index}"] = time.monotonic() - t0

        variations.append(
            VariationOutput(entry, final, edited, bundle, before, after)
        )
        manifest["variations"].append(
            {
                "index": entry.index,
                "layout": entry.layout_source,
                "color_source": entry.color_source,
                "palette_draw": entry.palette_draw,
                "edit_seed": entry.edit_seed,
                "target_bbox": list(target_k.bbox),
                "target_color": list(target_k.color),
                "delta_l": bundle.provenance["delta_l"],
                "injection": bundle.provenance,
                "contrast_before": before,
                "contrast_after": after,
                "file": var_file,
                "background_file": bg_file,
            }
        )

    timings["total"] = time.monotonic() - t_start
    manifest["timings"] = timings
    _write_manifest(manifest, out_dir)
    return PipelineRun(variations, manifest, proposal)


def _write_manifest(manifest: dict, out_dir: str) -> None:
    with open(os.path.join(out_dir, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
