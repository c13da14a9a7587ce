import io

import numpy as np
import pytest
from PIL import Image


def png_bytes(array_hwc: np.ndarray) -> bytes:
    """Encode an HWC uint8 array (or HW for grayscale) as PNG."""
    buf = io.BytesIO()
    Image.fromarray(array_hwc).save(buf, format="PNG")
    return buf.getvalue()


def solid_png(r: int, g: int, b: int, size=(8, 8)) -> bytes:
    arr = np.zeros((*size, 3), dtype=np.uint8)
    arr[..., 0], arr[..., 1], arr[..., 2] = r, g, b
    return png_bytes(arr)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def make_image_dir(tmp_path):
    """Factory writing a class-directory tree of solid-color PNGs.

    Spec: {class_dir: count}. Returns the dataset root. Colors vary by
    index so files are distinguishable.
    """
    def build(spec: dict, root_name="data", size=(8, 8)):
        root = tmp_path / root_name
        for class_dir, count in spec.items():
            d = root / class_dir
            d.mkdir(parents=True)
            for i in range(count):
                shade = (37 * i) % 256
                (d / f"img_{i:03d}.png").write_bytes(
                    solid_png(shade, 255 - shade, (91 * i) % 256, size))
        return root
    return build


def write_overfit_dataset(root, n_per_class=16, size=(32, 32)):
    """The synthetic two-class set: solid warm-hue vs. cool-hue images,
    linearly separable in mean channel intensity."""
    gen = np.random.default_rng(42)
    (root / "fire").mkdir(parents=True)
    (root / "no_fire").mkdir(parents=True)
    for i in range(n_per_class):
        warm = np.zeros((*size, 3), dtype=np.uint8)
        warm[..., 0] = gen.integers(180, 256)
        warm[..., 1] = gen.integers(40, 120)
        warm[..., 2] = gen.integers(0, 70)
        (root / "fire" / f"warm_{i:02d}.png").write_bytes(png_bytes(warm))
        cool = np.zeros((*size, 3), dtype=np.uint8)
        cool[..., 0] = gen.integers(0, 70)
        cool[..., 1] = gen.integers(40, 120)
        cool[..., 2] = gen.integers(180, 256)
        (root / "no_fire" / f"cool_{i:02d}.png").write_bytes(png_bytes(cool))
    return root


@pytest.fixture
def overfit_root(tmp_path):
    return write_overfit_dataset(tmp_path / "overfit")
