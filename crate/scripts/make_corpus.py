"""Regenerate the bundled test corpus under crates/core/assets/.

Photographic sources come from scikit-image's sample data:
  camera    CC0 (Lav Varshney)
  astronaut public domain (NASA)
  coffee    CC0 (Rachel Michetti)
"""
import os

import numpy as np
from PIL import Image
from skimage import data, transform

OUT = os.path.join(os.path.dirname(__file__), "..", "crates", "core", "assets")
SIZE = 128


def shrink(img):
    out = transform.resize(img, (SIZE, SIZE), anti_aliasing=True, preserve_range=True)
    return np.clip(np.round(out), 0, 255).astype(np.uint8)


def center_square(img):
    h, w = img.shape[:2]
    s = min(h, w)
    y, x = (h - s) // 2, (w - s) // 2
    return img[y : y + s, x : x + s]


def main():
    os.makedirs(OUT, exist_ok=True)
    Image.fromarray(shrink(data.camera())).save(os.path.join(OUT, "camera128.pgm"))
    Image.fromarray(shrink(data.astronaut())).save(os.path.join(OUT, "astronaut128.ppm"))
    Image.fromarray(shrink(center_square(data.coffee()))).save(os.path.join(OUT, "coffee128.ppm"))

    n = 64
    x = np.arange(n)
    grad = np.tile((x * 255 // (n - 1)).astype(np.uint8), (n, 1))
    Image.fromarray(grad).save(os.path.join(OUT, "gradient64.pgm"))
    two = (96 * np.cos(2 * np.pi * 3 * x / n)[None, :] + 64 * np.cos(2 * np.pi * 7 * x / n)[:, None] + 128)
    Image.fromarray(np.clip(np.round(two), 0, 255).astype(np.uint8)).save(os.path.join(OUT, "twotone64.pgm"))
    checker = (((x[:, None] // 8) + (x[None, :] // 8)) % 2 * 255).astype(np.uint8)
    Image.fromarray(checker).save(os.path.join(OUT, "checker64.pgm"))

    # RGBA PNG plus its reference RGB decode, for the alpha-dropping codec test.
    rgba = np.zeros((5, 7, 4), dtype=np.uint8)
    rgba[..., 0] = np.arange(7)[None, :] * 30
    rgba[..., 1] = np.arange(5)[:, None] * 50
    rgba[..., 2] = 200
    rgba[..., 3] = np.arange(35).reshape(5, 7) * 7
    Image.fromarray(rgba, "RGBA").save(os.path.join(OUT, "alpha5x7.png"))
    Image.open(os.path.join(OUT, "alpha5x7.png")).convert("RGB").save(os.path.join(OUT, "alpha5x7_ref.ppm"))


if __name__ == "__main__":
    main()
