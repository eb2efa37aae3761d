"""Writes the natural-image test corpus: 672x504 RGB PNGs (24 x 18 pieces of 28 px).

Sources are the sample images bundled with scikit-image. Each is center-cropped
to a 4:3 aspect ratio and resampled with anti-aliasing.
"""

import argparse
import pathlib

import numpy as np
import skimage.data
from skimage.io import imsave
from skimage.transform import resize

SOURCES = [
    "astronaut",
    "coffee",
    "chelsea",
    "rocket",
    "hubble_deep_field",
    "immunohistochemistry",
    "retina",
]
WIDTH, HEIGHT = 672, 504


def center_crop_to_aspect(img, width, height):
    h, w = img.shape[:2]
    target = width / height
    if w / h > target:
        new_w = int(round(h * target))
        x0 = (w - new_w) // 2
        return img[:, x0 : x0 + new_w]
    new_h = int(round(w / target))
    y0 = (h - new_h) // 2
    return img[y0 : y0 + new_h, :]


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("out_dir", type=pathlib.Path)
    args = parser.parse_args()
    args.out_dir.mkdir(parents=True, exist_ok=True)
    for name in SOURCES:
        img = getattr(skimage.data, name)()[..., :3]
        img = center_crop_to_aspect(img, WIDTH, HEIGHT)
        out = resize(img, (HEIGHT, WIDTH), anti_aliasing=True, preserve_range=True)
        out = np.clip(np.rint(out), 0, 255).astype(np.uint8)
        imsave(args.out_dir / f"{name}.png", out, check_contrast=False)
        print(f"{name}.png")


if __name__ == "__main__":
    main()
