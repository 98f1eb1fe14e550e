import math

import numpy as np
import pytest

from legiboost.color import (
    BLACK,
    WHITE,
    ColorRGB,
    contrast_ratio,
    lab_to_rgb,
    mean_color,
    relative_luminance,
    rgb_to_lab,
)
from legiboost.injection import (
    CalibrationParams,
    InjectionConfig,
    SegmentedObject,
    apply_color_injection,
    apply_luminance,
    color_injection_weight,
    compose_auxiliary,
    gaussian_mask,
    hsv_neighborhood_fraction,
    luminance_delta,
    rgb_array_to_lab,
    segment_region,
    select_objects,
)
from legiboost.prompts import Prompt


@pytest.fixture
def cal():
    return CalibrationParams()


class TestCalibration:
    def test_alpha_beta(self, cal):
        assert cal.alpha == 5.0
        assert cal.beta == 3.75

    def test_invalid_bounds(self):
        with pytest.raises(ValueError):
            CalibrationParams(min_inj=0.8, max_inj=0.2)
        with pytest.raises(ValueError):
            CalibrationParams(min_inj=0.0, max_inj=0.8)


class TestLuminanceDelta:
    def test_four_extremes(self, cal):
        assert luminance_delta(WHITE, BLACK, cal) == pytest.approx(0.8, abs=1e-12)
        assert luminance_delta(WHITE, WHITE, cal) == pytest.approx(0.2, abs=1e-12)
        assert luminance_delta(BLACK, BLACK, cal) == pytest.approx(-0.2, abs=1e-12)
        assert luminance_delta(BLACK, WHITE, cal) == pytest.approx(-0.8, abs=1e-12)

    def test_magnitude_range_random(self, cal, rng):
        for _ in range(2000):
            a = ColorRGB(*rng.random(3))
            b = ColorRGB(*rng.random(3))
            mag = abs(luminance_delta(a, b, cal))
            assert 0.2 - 1e-12 <= mag <= 0.8 + 1e-12

    def test_magnitude_tracks_luminance_gap(self, cal):
        # The magnitude follows 1/(alpha - beta*gap): larger luminance
        # gaps produce larger injections under the published calibration.
        gaps = np.linspace(0.0, 1.0, 21)
        mags = [1.0 / (cal.alpha - cal.beta * g) for g in gaps]
        assert all(m2 >= m1 for m1, m2 in zip(mags, mags[1:]))
        grays = [ColorRGB(v, v, v) for v in np.linspace(1.0, 0.0, 11)]
        prev = None
        for g in grays:
            mag = abs(luminance_delta(WHITE, g, cal))
            if prev is not None:
                assert mag >= prev - 1e-12
            prev = mag

    def test_mid_luminance_sign_convention(self, cal):
        # sgn(0) is taken as +1; find a color with luminance 0.5 exactly
        # via a gray level solve.
        target = 0.5
        lo, hi = 0.0, 1.0
        for _ in range(80):
            mid = (lo + hi) / 2
            if relative_luminance(ColorRGB(mid, mid, mid)) < target:
                lo = mid
            else:
                hi = mid
        g = ColorRGB(hi, hi, hi)
        assert relative_luminance(g) >= 0.5
        assert luminance_delta(g, BLACK, cal) > 0


class TestApplyLuminance:
    def test_bright_asset_darkens_region(self):
        img = np.full((20, 20, 3), 0.5)
        region = np.zeros((20, 20), dtype=bool)
        region[5:15, 5:15] = True
        out = apply_luminance(img, region, 0.2)
        before = rgb_array_to_lab(img[region])[:, 0].mean()
        after = rgb_array_to_lab(out[region])[:, 0].mean()
        assert after - before == pytest.approx(-20.0, abs=0.01)

    def test_per_pixel_matches_scalar_conversion(self, rng):
        img = rng.random((6, 7, 3))
        region = rng.random((6, 7)) > 0.4
        delta = -0.3
        out = apply_luminance(img, region, delta)
        for y in range(6):
            for x in range(7):
                if not region[y, x]:
                    assert np.array_equal(out[y, x], img[y, x])
                    continue
                lab = rgb_to_lab(ColorRGB(*img[y, x]))
                shifted = lab._replace(l=min(100.0, max(0.0, lab.l - delta * 100.0)))
                expected = lab_to_rgb(shifted)
                assert np.allclose(out[y, x], expected, atol=1e-9)

    def test_empty_region_is_noop(self, rng):
        img = rng.random((8, 8, 3))
        out = apply_luminance(img, np.zeros((8, 8), dtype=bool), 0.4)
        assert np.array_equal(out, img)

    def test_dark_asset_brightens_dark_region(self, cal):
        img = np.full((10, 10, 3), 0.15)
        region = np.ones((10, 10), dtype=bool)
        delta = luminance_delta(BLACK, ColorRGB(0.15, 0.15, 0.15), cal)
        assert delta < 0
        out = apply_luminance(img, region, delta)
        assert out.mean() > img.mean()


class TestHsvNeighborhood:
    def test_uniform_match(self):
        c = ColorRGB(1, 0, 0)
        pix = np.tile(np.array(c), (40, 1))
        assert hsv_neighborhood_fraction(pix, c) == 1.0

    def test_opposite_hue(self):
        c = ColorRGB(1, 0, 0)
        pix = np.tile(np.array([0.0, 1.0, 1.0]), (40, 1))
        assert hsv_neighborhood_fraction(pix, c) == 0.0

    def test_half_and_half(self):
        c = ColorRGB(1, 0, 0)
        pix = np.vstack(
            [np.tile(np.array(c), (20, 1)), np.tile(np.array([0.0, 1.0, 1.0]), (20, 1))]
        )
        assert hsv_neighborhood_fraction(pix, c) == 0.5

    def test_hue_wraparound(self):
        c = ColorRGB(1, 0, 0)  # hue 0
        near = ColorRGB(1.0, 0.0, 0.25)  # hue 345, within 18 degrees
        assert hsv_neighborhood_fraction(np.tile(np.array(near), (5, 1)), c) == 1.0

    def test_empty_region_rejected(self):
        with pytest.raises(ValueError):
            hsv_neighborhood_fraction(np.empty((0, 3)), WHITE)


class TestColorInjectionWeight:
    def test_endpoints_and_midpoint(self, cal):
        assert color_injection_weight(0.0, cal) == pytest.approx(0.2, abs=1e-12)
        assert color_injection_weight(1.0, cal) == pytest.approx(0.8, abs=1e-12)
        assert color_injection_weight(0.5, cal) == pytest.approx(0.32, abs=1e-12)

    def test_domain_checked(self, cal):
        with pytest.raises(ValueError):
            color_injection_weight(1.5, cal)


class TestSelectObjects:
    def test_gates(self):
        keep = SegmentedObject(np.ones((2, 2), bool), 0.9, 0.25)
        conf_fail = SegmentedObject(np.ones((2, 2), bool), 0.79, 0.9)
        area_fail = SegmentedObject(np.ones((2, 2), bool), 1.0, 0.19)
        out = select_objects([keep, conf_fail, area_fail])
        assert out == [keep]

    def test_boundary_inclusive(self):
        edge = SegmentedObject(np.ones((2, 2), bool), 0.8, 0.2)
        assert select_objects([edge]) == [edge]


class TestApplyColorInjection:
    def test_full_weight_covering_object(self):
        img = np.full((8, 8, 3), 0.5)
        region = np.ones((8, 8), dtype=bool)
        obj = SegmentedObject(np.ones((8, 8), bool), 1.0, 1.0)
        out = apply_color_injection(img, region, [obj], ColorRGB(1, 0, 0), 1.0)
        assert np.allclose(out[region], np.array([1.0, 0.0, 0.0]))

    def test_blend_arithmetic(self):
        img = np.full((4, 4, 3), 0.5)
        region = np.ones((4, 4), dtype=bool)
        obj = SegmentedObject(np.ones((4, 4), bool), 1.0, 1.0)
        out = apply_color_injection(img, region, [obj], ColorRGB(1, 0, 0), 0.2)
        assert np.allclose(out[0, 0], [0.8 * 0.5 + 0.2, 0.8 * 0.5, 0.8 * 0.5])

    def test_no_objects_half_weight_consistency(self):
        img = np.full((4, 4, 3), 0.5)
        region = np.ones((4, 4), dtype=bool)
        out = apply_color_injection(img, region, [], ColorRGB(0, 0, 1), 0.4)
        assert np.allclose(out[0, 0], [0.8 * 0.5, 0.8 * 0.5, 0.8 * 0.5 + 0.2])

    def test_outside_region_untouched(self, rng):
        img = rng.random((8, 8, 3))
        region = np.zeros((8, 8), dtype=bool)
        region[:4] = True
        out = apply_color_injection(img, region, [], WHITE, 0.5)
        assert np.array_equal(out[4:], img[4:])


class TestSegmentRegion:
    def test_quantized_components(self):
        img = np.zeros((10, 10, 3))
        img[:, 5:] = 0.9
        region = np.ones((10, 10), dtype=bool)
        objs = segment_region(img, region)
        assert len(objs) == 2
        areas = sorted(o.area_fraction for o in objs)
        assert areas == [0.5, 0.5]
        assert all(o.confidence == pytest.approx(1.0, abs=1e-6) for o in objs)

    def test_mask_materialization(self):
        img = np.zeros((6, 6, 3))
        img[:3] = 0.9
        region = np.ones((6, 6), dtype=bool)
        objs = segment_region(img, region)
        total = np.zeros((6, 6), dtype=bool)
        for o in objs:
            assert o.mask.shape == (6, 6)
            total |= o.mask
        assert total.all()

    def test_empty_region(self):
        assert segment_region(np.zeros((4, 4, 3)), np.zeros((4, 4), bool)) == []


class TestExternalSegmentation:
    def test_mask_file_with_sidecar(self, tmp_path):
        from legiboost import raster
        from legiboost.injection import load_segmentation

        mask = np.zeros((12, 12))
        mask[2:8, 3:9] = 1.0
        raster.save_image(mask, str(tmp_path / "obj.png"))
        (tmp_path / "obj.json").write_text('{"confidence": 0.91}')
        obj = load_segmentation(str(tmp_path / "obj.png"), region_area=144)
        assert obj.confidence == 0.91
        assert obj.area_fraction == pytest.approx(36 / 144)
        assert obj.mask.sum() == 36

    def test_explicit_confidence_skips_sidecar(self, tmp_path):
        from legiboost import raster
        from legiboost.injection import load_segmentation

        raster.save_image(np.ones((4, 4)), str(tmp_path / "m.png"))
        obj = load_segmentation(str(tmp_path / "m.png"), region_area=16, confidence=0.5)
        assert obj.confidence == 0.5

    def test_external_objects_drive_composition(self, tmp_path, rng):
        img = np.round(rng.random((48, 48, 3)) * 255) / 255
        full = SegmentedObject(np.ones((48, 48), bool), 0.95, 1.0)
        bundle = compose_auxiliary(
            img, target_bbox=(8, 8, 24, 16), target_color=WHITE, asset_colors=[WHITE],
            cal=CalibrationParams(),
            cfg=InjectionConfig(texture_weight=0, noise_amplitude=0),
            seed=1, cleaned_prompt=Prompt("p"), strength=0.5,
            segmented=[full],
        )
        assert not np.array_equal(bundle.aux_image, img)


class TestGaussianMask:
    def test_peak_at_center(self):
        m = gaussian_mask((10, 10, 20, 10), 64, 64)
        assert m[15, 20] == 1.0

    def test_value_at_half_width(self):
        m = gaussian_mask((10, 10, 20, 10), 64, 64)
        assert m[15, 30] == pytest.approx(math.exp(-0.5), abs=1e-12)

    def test_sigma_proportional_to_bbox(self):
        small = gaussian_mask((10, 10, 20, 10), 128, 128)
        big = gaussian_mask((10, 10, 40, 20), 128, 128)
        # doubling the box doubles sigma: equal values at doubled offsets
        assert big[20, 10 + 20 + 20] == pytest.approx(small[15, 10 + 10 + 10], abs=1e-12)

    def test_truncation_beyond_three_sigma(self):
        m = gaussian_mask((30, 30, 8, 8), 64, 64)
        assert m[0, 0] == 0.0
        assert (m[(np.mgrid[0:64, 0:64][0] - 34) ** 2 / 16.0 + (np.mgrid[0:64, 0:64][1] - 34) ** 2 / 16.0 > 9.0] == 0.0).all()

    def test_requires_intersection(self):
        with pytest.raises(ValueError):
            gaussian_mask((100, 100, 10, 10), 64, 64)


class TestComposeAuxiliary:
    def test_zero_weights_identity(self, rng):
        img = np.round(rng.random((48, 48, 3)) * 255) / 255
        cfg = InjectionConfig(luminance_weight=0, color_weight=0, texture_weight=0, noise_amplitude=0)
        bundle = compose_auxiliary(
            img, target_bbox=(10, 10, 20, 12), target_color=WHITE, asset_colors=[WHITE],
            cal=CalibrationParams(), cfg=cfg, seed=3, cleaned_prompt=Prompt("p"), strength=0.5,
        )
        assert np.array_equal(bundle.aux_image, img)

    def test_deterministic(self, rng):
        img = np.round(rng.random((64, 64, 3)) * 255) / 255
        kwargs = dict(
            target_bbox=(12, 20, 24, 16), target_color=WHITE, asset_colors=[WHITE],
            cal=CalibrationParams(), cfg=InjectionConfig(patch_count=50),
            seed=11, cleaned_prompt=Prompt("p"), strength=0.4,
        )
        a = compose_auxiliary(img, **kwargs)
        b = compose_auxiliary(img, **kwargs)
        assert np.array_equal(a.aux_image, b.aux_image)
        assert np.array_equal(a.edit_mask, b.edit_mask)
        assert a.provenance == b.provenance

    def test_outside_mask_untouched(self, rng):
        img = np.round(rng.random((96, 96, 3)) * 255) / 255
        bundle = compose_auxiliary(
            img, target_bbox=(30, 40, 24, 12), target_color=WHITE, asset_colors=[WHITE],
            cal=CalibrationParams(), cfg=InjectionConfig(patch_count=50),
            seed=5, cleaned_prompt=Prompt("p"), strength=0.4,
        )
        outside = bundle.edit_mask == 0.0
        assert np.array_equal(bundle.aux_image[outside], img[outside])

    def test_contrast_purpose_check(self, rng):
        # a white asset on a low-contrast light background gains contrast
        light = np.round(np.clip(rng.normal(0.86, 0.04, (96, 96, 3)), 0, 1) * 255) / 255
        bbox = (20, 30, 40, 20)
        bundle = compose_auxiliary(
            light, target_bbox=bbox, target_color=WHITE, asset_colors=[WHITE],
            cal=CalibrationParams(), cfg=InjectionConfig(patch_count=100),
            seed=6, cleaned_prompt=Prompt("p"), strength=0.4,
        )
        x, y, w, h = bbox
        before = contrast_ratio(WHITE, mean_color(light[y : y + h, x : x + w].reshape(-1, 3)))
        after = contrast_ratio(WHITE, mean_color(bundle.aux_image[y : y + h, x : x + w].reshape(-1, 3)))
        assert after > before

    def test_patch_mining_failure_recorded_not_raised(self):
        flat = np.full((64, 64, 3), 0.95)
        bundle = compose_auxiliary(
            flat, target_bbox=(10, 10, 20, 12), target_color=WHITE, asset_colors=[WHITE],
            cal=CalibrationParams(), cfg=InjectionConfig(patch_count=20),
            seed=7, cleaned_prompt=Prompt("p"), strength=0.4,
        )
        assert bundle.provenance["texture_skipped"] == "no diffusion-friendly patches"
        assert bundle.provenance["texture_weight"] == 0.0

    def test_bundle_validation(self):
        with pytest.raises(ValueError):
            compose_auxiliary(
                np.zeros((10, 10, 3)), target_bbox=(5, 5, 10, 10), target_color=WHITE,
                asset_colors=[WHITE], cal=CalibrationParams(), cfg=InjectionConfig(),
                seed=0, cleaned_prompt=Prompt("p"), strength=0.5,
            )
