import math

import numpy as np
import pytest

from legiboost_server.adapters import ServerConfig, ServerStartupError, resolve_adapter
from legiboost_server.cli import parse_args
from legiboost_server.reference import ReferenceModel, decode_image, encode_image


@pytest.fixture(scope="module")
def model():
    return ReferenceModel()


class TestResolution:
    def test_reference_resolves(self):
        adapter = resolve_adapter(ServerConfig(model="reference"))
        assert adapter.embed_dim == 64

    def test_unknown_identity_refused(self):
        with pytest.raises(ServerStartupError, match="unknown model identity"):
            resolve_adapter(ServerConfig(model="banana"))

    def test_cli_defaults(self):
        cfg = parse_args([])
        assert cfg.model == "reference"
        assert cfg.port == 8765
        assert not cfg.half_precision


class TestCaption:
    def test_dominant_color_named(self, model):
        img = np.tile(np.array([1.0, 0.0, 0.0]), (8, 8, 1))
        assert "red" in model.caption(img)

    def test_non_empty_for_noise(self, model):
        rng = np.random.default_rng(0)
        assert model.caption(rng.random((16, 16, 3))).strip()


class TestEmbed:
    def test_positive_finite(self, model):
        for text in ("a", "three word prompt", "!!!", "x" * 400):
            norm = model.embed_norm(text)
            assert math.isfinite(norm) and norm > 0

    def test_stable(self, model):
        assert model.embed_norm("poster") == model.embed_norm("poster")

    def test_token_order_matters(self, model):
        assert model.embed_norm("night sky") != model.embed_norm("sky at night")


class TestEdit:
    def test_shape_preserved(self, model):
        rng = np.random.default_rng(1)
        img = rng.random((20, 28, 3))
        out = model.edit(img, None, "p", 0.5, 3, "sdedit")
        assert out.shape == img.shape

    def test_strength_zero_identity(self, model):
        rng = np.random.default_rng(2)
        img = rng.random((16, 16, 3))
        assert np.array_equal(model.edit(img, None, "p", 0.0, 3, "sdedit"), np.clip(img, 0, 1))

    def test_low_strength_small_deviation(self, model):
        rng = np.random.default_rng(3)
        img = rng.random((32, 32, 3))
        out = model.edit(img, None, "p", 0.05, 3, "sdedit")
        assert np.abs(out - img).mean() <= 0.02

    def test_mask_conservation_exact(self, model):
        rng = np.random.default_rng(4)
        img = rng.random((24, 24, 3))
        mask = np.zeros((24, 24))
        mask[6:18, 6:18] = 1.0
        out = model.edit(img, mask, "p", 0.9, 7, "diffedit")
        assert np.array_equal(out[mask == 0], np.clip(img, 0, 1)[mask == 0])

    def test_deterministic(self, model):
        rng = np.random.default_rng(5)
        img = rng.random((16, 16, 3))
        a = model.edit(img, None, "p", 0.7, 11, "sdedit")
        b = model.edit(img, None, "p", 0.7, 11, "sdedit")
        assert np.array_equal(a, b)


class TestCodec:
    def test_png_round_trip_on_lattice(self):
        rng = np.random.default_rng(6)
        img = np.round(rng.random((12, 12, 3)) * 255) / 255
        assert np.array_equal(decode_image(encode_image(img)), img)
