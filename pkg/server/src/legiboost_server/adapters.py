"""Model adapters resolved from the configured identity string.

``reference`` loads the built-in procedural model. ``diffusers:<repo>``
wraps real Stable Diffusion pipelines (image-to-image and inpainting), a
BLIP captioner, and the pipeline's text encoder; it needs the optional
``[diffusers]`` extra plus downloadable weights and refuses to load
otherwise, which the CLI turns into a non-zero exit before binding.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .reference import ReferenceModel


class ServerStartupError(RuntimeError):
    pass


@dataclass(frozen=True)
class ServerConfig:
    model: str = "reference"
    device: str = "cpu"
    half_precision: bool = False
    host: str = "127.0.0.1"
    port: int = 8765


def resolve_adapter(config: ServerConfig):
    if config.model == "reference":
        return ReferenceModel()
    if config.model.startswith("diffusers:"):
        return DiffusersModel(config)
    raise ServerStartupError(
        f"unknown model identity {config.model!r}; expected 'reference' or 'diffusers:<repo>'"
    )


class DiffusersModel:
    """Stable Diffusion wrapper: strength-conditioned img2img (sdedit)
    and mask-restricted inpainting (diffedit), BLIP captions, and the
    mean-pooled L2 norm of the pipeline's own text embedding."""

    metadata = {"embed_reduction": "mean-pool-l2"}

    def __init__(self, config: ServerConfig):
        try:
            import torch
            from diffusers import (
                AutoPipelineForImage2Image,
                AutoPipelineForInpainting,
            )
            from transformers import pipeline as hf_pipeline
        except ImportError as exc:
            raise ServerStartupError(
                f"diffusers backend requires the [diffusers] extra: {exc}"
            ) from exc

        repo = config.model.split(":", 1)[1]
        dtype = torch.float16 if config.half_precision else torch.float32
        try:
            self._img2img = AutoPipelineForImage2Image.from_pretrained(
                repo, torch_dtype=dtype
            ).to(config.device)
            self._inpaint = AutoPipelineForInpainting.from_pipe(self._img2img).to(
                config.device
            )
            self._captioner = hf_pipeline(
                "image-to-text", model="Salesforce/blip-image-captioning-base",
                device=config.device,
            )
        except Exception as exc:  # model assets unresolvable
            raise ServerStartupError(f"failed to load model assets: {exc}") from exc
        self._torch = torch
        self._device = config.device
        self.embed_dim = int(self._img2img.text_encoder.config.hidden_size)

    def caption(self, img: np.ndarray) -> str:
        from PIL import Image

        pil = Image.fromarray((img * 255).astype(np.uint8))
        out = self._captioner(pil)
        return out[0]["generated_text"]

    def embed_norm(self, prompt: str) -> float:
        torch = self._torch
        tokens = self._img2img.tokenizer(
            prompt, padding="max_length", truncation=True, return_tensors="pt"
        ).to(self._device)
        with torch.no_grad():
            states = self._img2img.text_encoder(**tokens).last_hidden_state
        pooled = states.mean(dim=1)
        return float(torch.linalg.vector_norm(pooled[0]).item())

    def edit(self, img, mask, prompt, strength, seed, paradigm):
        from PIL import Image

        torch = self._torch
        pil = Image.fromarray((img * 255).astype(np.uint8))
        generator = torch.Generator(self._device).manual_seed(seed)
        # diffusion pipelines reject strength 0; clamp to a whisper
        s = max(float(strength), 1e-3)
        if paradigm == "diffedit":
            mask_pil = Image.fromarray((mask * 255).astype(np.uint8))
            out = self._inpaint(
                prompt=prompt, image=pil, mask_image=mask_pil,
                strength=s, generator=generator,
            ).images[0]
        else:
            out = self._img2img(
                prompt=prompt, image=pil, strength=s, generator=generator
            ).images[0]
        arr = np.asarray(out.convert("RGB"), dtype=np.float64) / 255.0
        if paradigm == "diffedit":
            arr = img + mask[:, :, None] * (arr - img)
        return np.clip(arr, 0.0, 1.0)
