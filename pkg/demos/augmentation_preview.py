"""Show what the training-time augmentation does to an image.

Decodes a generated test pattern, then applies each transform of the
augmentation policy in isolation — rotation, horizontal flip, brightness,
Gaussian noise — and prints summary statistics so the effect is visible
without a display. Augmentation draws come from a seeded generator, so
the whole sequence is reproducible.

Run:  python3 demos/augmentation_preview.py
"""

import io

import numpy as np
from PIL import Image

from firenet import AugmentPolicy, Sample, augment, decode_image, preprocess


def test_pattern(size=64):
    """A quadrant pattern: distinct corners make flips and rotations obvious."""
    arr = np.zeros((size, size, 3), dtype=np.uint8)
    half = size // 2
    arr[:half, :half] = (255, 40, 40)
    arr[:half, half:] = (40, 255, 40)
    arr[half:, :half] = (40, 40, 255)
    arr[half:, half:] = (250, 250, 80)
    buf = io.BytesIO()
    Image.fromarray(arr).save(buf, format="PNG")
    return buf.getvalue()


def corner_means(pixels):
    """Mean RGB of each 8x8 corner, as compact strings."""
    h, w = pixels.shape[1:]
    corners = {
        "top-left": pixels[:, :8, :8],
        "top-right": pixels[:, :8, w - 8:],
        "bottom-left": pixels[:, h - 8:, :8],
    }
    return {k: "/".join(f"{v.mean(axis=(1, 2))[c]:.2f}" for c in range(3))
            for k, v in corners.items()}


def show(tag, pixels):
    stats = corner_means(pixels)
    print(f"  {tag:<24} range [{pixels.min():.3f}, {pixels.max():.3f}]"
          f"  top-left {stats['top-left']}  top-right {stats['top-right']}")


def only(**enabled):
    flags = dict(rotation_enabled=False, hflip_enabled=False,
                 brightness_enabled=False, noise_enabled=False)
    flags.update(enabled)
    return flags


def main():
    raw = decode_image(test_pattern())
    base = Sample(pixels=preprocess(raw, (64, 64)), label=1,
                  category="fire", id="pattern")
    print("base image (RGB means per corner):")
    show("original", base.pixels)
    print()

    rng = np.random.default_rng(5)
    print("each transform in isolation:")
    show("rotation <= 15 deg", augment(
        base, AugmentPolicy(**only(rotation_enabled=True)), rng).pixels)
    show("horizontal flip", augment(
        base, AugmentPolicy(hflip_prob=1.0, **only(hflip_enabled=True)),
        rng).pixels)
    show("brightness x[0.8,1.2]", augment(
        base, AugmentPolicy(**only(brightness_enabled=True)), rng).pixels)
    show("noise sigma=0.02", augment(
        base, AugmentPolicy(**only(noise_enabled=True)), rng).pixels)

    print("\nthe full policy, applied twice with the same seed:")
    a = augment(base, AugmentPolicy(), np.random.default_rng(11))
    b = augment(base, AugmentPolicy(), np.random.default_rng(11))
    show("draw 1", a.pixels)
    show("draw 2", b.pixels)
    print(f"  identical: {np.array_equal(a.pixels, b.pixels)}")


if __name__ == "__main__":
    main()
