import json
import os

import numpy as np
import pytest

from legiboost import raster
from legiboost.backend import BackendTransportError, MockBackend
from legiboost.color import WHITE, ColorRGB, contrast_ratio, mean_color
from legiboost.pipeline import (
    PipelineBackendError,
    extract_palette,
    generate_variations,
    palette_colors_for_assets,
    pick_target_asset,
    run_pipeline,
)
from legiboost.strength import constant_model, fit_strength_model, StrengthTrainingSet
from legiboost.template import ConfigError, DesignAsset, DesignTemplate, PipelineConfig


def lattice(arr):
    return np.round(np.clip(arr, 0.0, 1.0) * 255) / 255


def make_template(rng, with_layout=True, size=128, keywords=("autumn", "red leaves")):
    bg = lattice(rng.normal(0.82, 0.06, (size, size, 3)))
    title = dict(id="title", kind="text", color=WHITE, content="SALE")
    badge = dict(id="badge", kind="graphic", color=ColorRGB(0.95, 0.95, 0.9))
    if with_layout:
        title["bbox"] = (size // 8, size // 4, size // 2, size // 8)
        badge["bbox"] = (size // 2, size // 2 + size // 4, size // 8, size // 8)
    else:
        title["size"] = (size // 2, size // 8)
        badge["size"] = (size // 8, size // 8)
    return DesignTemplate(
        canvas_w=size, canvas_h=size,
        assets=(DesignAsset(**title), DesignAsset(**badge)),
        background=bg, keywords=tuple(keywords),
    )


class TestVariationPlan:
    def test_user_layout_plan(self, rng):
        t = make_template(rng)
        plan = generate_variations(t, PipelineConfig(variations=4, seed=1))
        assert [(e.layout_source, e.color_source) for e in plan] == [
            ("user", "original"), ("user", "palette"),
            ("proposed", "original"), ("proposed", "palette"),
        ]

    def test_no_user_layout_plan(self, rng):
        t = make_template(rng, with_layout=False)
        plan = generate_variations(t, PipelineConfig(variations=4, seed=1))
        assert all(e.layout_source == "proposed" for e in plan)

    def test_single_variation_truncates(self, rng):
        t = make_template(rng)
        plan = generate_variations(t, PipelineConfig(variations=1, seed=1))
        assert len(plan) == 1
        assert (plan[0].layout_source, plan[0].color_source) == ("user", "original")

    def test_palette_entries_two_and_four_share_draw(self, rng):
        t = make_template(rng)
        plan = generate_variations(t, PipelineConfig(variations=4, seed=9))
        assert plan[1].palette_draw == plan[3].palette_draw == 0
        assert plan[1].aux_code[1] == plan[3].aux_code[1]

    def test_edit_seeds_differ_and_are_stable(self, rng):
        t = make_template(rng)
        a = generate_variations(t, PipelineConfig(variations=4, seed=5))
        b = generate_variations(t, PipelineConfig(variations=4, seed=5))
        assert [e.edit_seed for e in a] == [e.edit_seed for e in b]
        assert len({e.edit_seed for e in a}) == 4


class TestPalette:
    def test_extraction_deterministic_top_colors(self, rng):
        img = np.zeros((32, 32, 3))
        img[:, :16] = [0.9, 0.1, 0.1]
        img[:, 16:] = [0.1, 0.1, 0.9]
        pal = extract_palette(img)
        assert len(pal) == 2
        quantized = {tuple(np.floor(np.array(c) * 16).astype(int)) for c in pal}
        assert quantized == {(14, 1, 1), (1, 1, 14)}

    def test_draws_shared_by_index(self):
        pal = [ColorRGB(1, 0, 0), ColorRGB(0, 1, 0), ColorRGB(0, 0, 1)]
        a = palette_colors_for_assets(pal, 3, seed=7, draw_index=0)
        b = palette_colors_for_assets(pal, 3, seed=7, draw_index=0)
        c = palette_colors_for_assets(pal, 3, seed=7, draw_index=1)
        assert a == b
        assert all(col in pal for col in c)


class TestTargetSelection:
    def test_largest_text_asset_wins(self, rng):
        t = make_template(rng)
        assert pick_target_asset(t.assets).id == "title"

    def test_graphic_fallback(self):
        t = DesignTemplate(
            canvas_w=64, canvas_h=64,
            assets=(DesignAsset(id="g", kind="graphic", color=WHITE, bbox=(0, 0, 10, 10)),),
        )
        assert pick_target_asset(t.assets).id == "g"


class TestRunPipeline:
    def test_outputs_and_manifest(self, tmp_path, rng):
        t = make_template(rng)
        cfg = PipelineConfig(variations=4, seed=3)
        run = run_pipeline(t, cfg, MockBackend(), str(tmp_path))
        assert len(run.variations) == 4
        for k in range(1, 5):
            assert (tmp_path / f"variation_{k:02d}.png").exists()
            assert (tmp_path / f"variation_{k:02d}_background.png").exists()
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["backend_identity"]["id"] == "mock"
        assert len(manifest["variations"]) == 4

    def test_rerun_byte_identical(self, tmp_path, rng):
        t = make_template(rng)
        cfg = PipelineConfig(variations=4, seed=3)
        run_pipeline(t, cfg, MockBackend(), str(tmp_path / "a"))
        run_pipeline(t, cfg, MockBackend(), str(tmp_path / "b"))
        for name in sorted(os.listdir(tmp_path / "a")):
            if name.endswith(".png"):
                a = (tmp_path / "a" / name).read_bytes()
                b = (tmp_path / "b" / name).read_bytes()
                assert a == b, name
        ma = json.loads((tmp_path / "a" / "manifest.json").read_text())
        mb = json.loads((tmp_path / "b" / "manifest.json").read_text())
        ma.pop("timings")
        mb.pop("timings")
        assert ma == mb

    def test_manifest_strength_recomputes(self, tmp_path, rng):
        t = make_template(rng)
        cfg = PipelineConfig(variations=1, seed=3)
        backend = MockBackend()
        run = run_pipeline(t, cfg, backend, str(tmp_path))
        manifest = run.manifest
        from legiboost.prompts import Prompt
        from legiboost.strength import predict_strength

        norm = backend.embed_norm(Prompt(manifest["prompt"]["cleaned"]))
        model = constant_model(0.5, "mock")
        assert manifest["strength"]["value"] == predict_strength(model, norm)
        assert manifest["strength"]["embed_norm"] == norm

    def test_diffedit_outside_masks_conserved(self, tmp_path, rng):
        t = make_template(rng)
        cfg = PipelineConfig(paradigm="diffedit", variations=4, seed=11)
        run = run_pipeline(t, cfg, MockBackend(), str(tmp_path))
        for out in run.variations:
            outside = out.bundle.edit_mask == 0.0
            assert np.array_equal(out.edited_background[outside], t.background[outside])

    def test_caption_used_when_no_keywords(self, tmp_path, rng):
        t = make_template(rng, keywords=())
        cfg = PipelineConfig(variations=1, seed=2)
        run = run_pipeline(t, cfg, MockBackend(), str(tmp_path))
        assert run.manifest["prompt"]["source"] == "caption"
        assert "dominant color" in run.manifest["prompt"]["text"]

    def test_background_generated_from_prompt(self, tmp_path, rng):
        t = DesignTemplate(
            canvas_w=96, canvas_h=96,
            assets=(DesignAsset(id="t", kind="text", color=WHITE, bbox=(8, 8, 40, 16), content="X"),),
            keywords=("forest", "night"),
        )
        cfg = PipelineConfig(variations=1, seed=2)
        run = run_pipeline(t, cfg, MockBackend(), str(tmp_path))
        assert run.manifest["background"]["generated"] is True
        assert (tmp_path / "background.png").exists()

    def test_white_canvas_default(self, tmp_path):
        t = DesignTemplate(
            canvas_w=64, canvas_h=64,
            assets=(DesignAsset(id="t", kind="text", color=ColorRGB(0.1, 0.1, 0.1),
                                bbox=(8, 8, 32, 16), content="X"),),
        )
        cfg = PipelineConfig(variations=1, seed=2)
        run = run_pipeline(t, cfg, MockBackend(), str(tmp_path))
        assert run.manifest["background"]["generated"] is False
        bg = raster.load_image(str(tmp_path / "background.png"))
        assert bg.min() == 1.0

    def test_proposed_layout_used_without_user_layout(self, tmp_path, rng):
        t = make_template(rng, with_layout=False)
        cfg = PipelineConfig(variations=2, seed=7)
        run = run_pipeline(t, cfg, MockBackend(), str(tmp_path))
        assert run.proposal is not None
        assert all(v["layout"] == "proposed" for v in run.manifest["variations"])

    def test_strength_model_identity_mismatch(self, tmp_path, rng):
        model = fit_strength_model(
            StrengthTrainingSet((10.0, 12.0, 14.0), (0.9, 0.5, 0.1), "other-backend")
        )
        mpath = tmp_path / "model.json"
        model.to_json_file(str(mpath))
        t = make_template(rng)
        cfg = PipelineConfig(variations=1, seed=1, strength_model_path=str(mpath))
        with pytest.raises(ConfigError, match="other-backend"):
            run_pipeline(t, cfg, MockBackend(), str(tmp_path / "out"))

    def test_backend_failure_writes_partial_manifest(self, tmp_path, rng):
        class FailingBackend(MockBackend):
            def edit(self, req):
                raise BackendTransportError("down", "req-1", 3)

        t = make_template(rng)
        cfg = PipelineConfig(variations=2, seed=1)
        with pytest.raises(PipelineBackendError):
            run_pipeline(t, cfg, FailingBackend(), str(tmp_path))
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert "error" in manifest

    def test_palette_variations_share_asset_colors(self, tmp_path, rng):
        t = make_template(rng)
        cfg = PipelineConfig(variations=4, seed=13)
        run = run_pipeline(t, cfg, MockBackend(), str(tmp_path))
        v2 = run.manifest["variations"][1]
        v4 = run.manifest["variations"][3]
        assert v2["target_color"] == v4["target_color"]

    def test_aux_shared_for_identical_inputs(self, tmp_path, rng):
        t = make_template(rng, with_layout=False)
        cfg = PipelineConfig(variations=4, seed=13)
        run = run_pipeline(t, cfg, MockBackend(), str(tmp_path))
        # without a user layout entries 1/3 and 2/4 have identical
        # (layout, color) inputs and must reuse the same bundles
        assert run.variations[0].bundle is run.variations[2].bundle
        assert run.variations[1].bundle is run.variations[3].bundle
