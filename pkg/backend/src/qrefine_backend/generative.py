"""Optional generative mode: a real diffusion inpainting stack behind v1.

This adapter is install-on-demand (``pip install qrefine-backend[generative]``)
and loads model weights at startup. Classical mode never touches it, so CI
and the default install stay modelless.
"""

from __future__ import annotations

from .protocol import encode_png_rgb

INPAINT_MODEL = "runwayml/stable-diffusion-inpainting"
IMG2IMG_MODEL = "runwayml/stable-diffusion-v1-5"


class GenerativeEngine:
    """Diffusion-backed inpaint/enhance with per-request seeding."""

    def __init__(self, inpaint_model: str = INPAINT_MODEL, img2img_model: str = IMG2IMG_MODEL):
        try:
            import torch
            from diffusers import (
                StableDiffusionImg2ImgPipeline,
                StableDiffusionInpaintPipeline,
            )
        except ImportError as exc:
            raise RuntimeError(
                "generative mode needs the optional dependencies; install with "
                "pip install 'qrefine-backend[generative]'"
            ) from exc
        self._torch = torch
        device = "cuda" if torch.cuda.is_available() else "cpu"
        self._inpaint_pipe = StableDiffusionInpaintPipeline.from_pretrained(
            inpaint_model
        ).to(device)
        self._img2img_pipe = StableDiffusionImg2ImgPipeline.from_pretrained(
            img2img_model
        ).to(device)
        self._device = device

    def _generator(self, seed: int):
        return self._torch.Generator(device=self._device).manual_seed(seed)

    def inpaint(self, parsed):
        from PIL import Image
        import numpy as np

        if parsed.strength == 0.0 or not parsed.mask.any():
            return parsed.image_png
        image = Image.fromarray((parsed.image * 255).astype("uint8"))
        mask = Image.fromarray((parsed.mask.astype("uint8") * 255))
        result = self._inpaint_pipe(
            prompt=parsed.prompt,
            image=image,
            mask_image=mask,
            strength=parsed.strength,
            num_inference_steps=parsed.steps,
            generator=self._generator(parsed.seed),
        ).images[0]
        out = np.asarray(result, dtype="uint8").astype("float64") / 255.0
        # the protocol requires unmasked pixels back untouched
        out[~parsed.mask] = parsed.image[~parsed.mask]
        return encode_png_rgb(out)

    def enhance(self, parsed):
        from PIL import Image
        import numpy as np

        if parsed.strength == 0.0:
            return parsed.image_png
        image = Image.fromarray((parsed.image * 255).astype("uint8"))
        result = self._img2img_pipe(
            prompt=parsed.prompt,
            image=image,
            strength=parsed.strength,
            num_inference_steps=parsed.steps,
            generator=self._generator(parsed.seed),
        ).images[0]
        out = np.asarray(result, dtype="uint8").astype("float64") / 255.0
        return encode_png_rgb(out)
