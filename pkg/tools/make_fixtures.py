"""Regenerate the grayscale PGM fixtures from scikit-image's bundled sample photos.

Each image is converted to gray, normalised to [0, 1], block-averaged so the
short side is at most 256 pixels, and written as an 8-bit P5 file.
"""

import pathlib

import numpy as np
import skimage.data
from skimage.color import rgb2gray
from skimage.transform import downscale_local_mean

from wcc.tensor_io import save_pgm

NAMES = ["camera", "astronaut", "coffee", "chelsea", "coins", "rocket"]
OUT = pathlib.Path(__file__).resolve().parents[1] / "src" / "wcc" / "data" / "images"


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for name in NAMES:
        img = getattr(skimage.data, name)()
        if img.ndim == 3:
            img = rgb2gray(img[..., :3])
        img = img.astype(np.float64)
        img /= img.max()
        factor = max(1, -(-min(img.shape) // 256))
        img = downscale_local_mean(img, (factor, factor))
        save_pgm(img[None].astype(np.float32), OUT / f"{name}.pgm")
        print(name, img.shape)


if __name__ == "__main__":
    main()
