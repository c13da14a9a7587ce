"""Image ingestion, preprocessing, augmentation, dataset loading and batching.

The pipeline is: decode (JPEG/PNG -> RGB uint8, grayscale replicated to three
channels) -> bilinear resize with half-pixel-center alignment -> normalize to
[0, 1] by dividing by 255 -> optional augmentation (rotation, horizontal
flip, brightness, additive Gaussian noise, in that fixed order, each clamped
back into [0, 1]).

Datasets are ordered lists of lazily-decoded sample references, sorted by id
(the posix relative path), so every derived artifact -- splits, batch
order, augmentation draws -- is a deterministic function of
(root, layout, seed, policy, epoch).
"""

from __future__ import annotations

import io
import logging
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import ConfigError, DatasetError, DecodeError, InputError

log = logging.getLogger(__name__)

NO_FIRE, FIRE = 0, 1
CLASS_NAMES = ("no_fire", "fire")

# Directory name -> (binary label, source category) per supported layout.
# Any category other than "none" carries the positive (fire) label.
LAYOUTS = {
    "binary": {"fire": (FIRE, "fire"), "no_fire": (NO_FIRE, "none")},
    "dfire4": {
        "fire_only": (FIRE, "fire_only"),
        "smoke_only": (FIRE, "smoke_only"),
        "fire_and_smoke": (FIRE, "fire_and_smoke"),
        "none": (NO_FIRE, "none"),
    },
}
IMAGE_EXTENSIONS = {".jpg", ".jpeg", ".png"}


@dataclass(frozen=True)
class SampleRef:
    """Reference to one on-disk image: decoded lazily, identified by its
    root-relative posix path."""

    path: Path
    id: str
    label: int
    category: str


@dataclass(frozen=True)
class Sample:
    """Decoded and preprocessed image: float32 pixels in [0, 1], CHW."""

    pixels: np.ndarray
    label: int
    category: str
    id: str


@dataclass(frozen=True)
class AugmentPolicy:
    """Augmentation transforms with per-transform enable flags. The values
    here are chosen defaults; every one is configuration-exposed."""

    rotation_max_deg: float = 15.0
    hflip_prob: float = 0.5
    brightness_range: tuple[float, float] = (0.8, 1.2)
    noise_sigma: float = 0.02
    rotation_enabled: bool = True
    hflip_enabled: bool = True
    brightness_enabled: bool = True
    noise_enabled: bool = True

    def validate(self):
        if not 0.0 <= self.hflip_prob <= 1.0:
            raise ConfigError(f"hflip_prob must be in [0, 1], got {self.hflip_prob}")
        lo, hi = self.brightness_range
        if lo <= 0 or hi <= 0 or hi < lo:
            raise ConfigError(f"bad brightness_range {self.brightness_range}")
        if self.noise_sigma < 0:
            raise ConfigError(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        if self.rotation_max_deg < 0:
            raise ConfigError(f"rotation_max_deg must be >= 0, got {self.rotation_max_deg}")
        return self

    @classmethod
    def disabled(cls) -> "AugmentPolicy":
        return cls(rotation_enabled=False, hflip_enabled=False,
                   brightness_enabled=False, noise_enabled=False)


class Dataset:
    """Ordered, id-sorted collection of sample references with per-class counts."""

    def __init__(self, refs):
        refs = sorted(refs, key=lambda r: r.id)
        ids = [r.id for r in refs]
        if len(set(ids)) != len(ids):
            raise DatasetError("duplicate sample ids in dataset")
        self.refs: list[SampleRef] = refs

    def __len__(self):
        return len(self.refs)

    def __getitem__(self, i) -> SampleRef:
        return self.refs[i]

    def __iter__(self):
        return iter(self.refs)

    @property
    def labels(self) -> np.ndarray:
        return np.array([r.label for r in self.refs], dtype=np.int64)

    def class_counts(self) -> dict[int, int]:
        counts = {NO_FIRE: 0, FIRE: 0}
        for ref in self.refs:
            counts[ref.label] += 1
        return counts

    def subset(self, indices) -> "Dataset":
        return Dataset([self.refs[i] for i in indices])


# --- decoding and preprocessing --------------------------------------------

def decode_image(data: bytes, sample_id: str = "") -> np.ndarray:
    """Decode a JPEG/PNG payload to (3, H, W) uint8 in RGB channel order;
    grayscale inputs are replicated across the three channels."""
    try:
        with Image.open(io.BytesIO(data)) as img:
            rgb = img.convert("RGB")
            arr = np.asarray(rgb, dtype=np.uint8)
    except (UnidentifiedImageError, OSError, SyntaxError, ValueError) as exc:
        raise DecodeError(f"cannot decode image {sample_id!r}: {exc}") from exc
    return np.ascontiguousarray(arr.transpose(2, 0, 1))


def _sample_bilinear(pixels: np.ndarray, ys: np.ndarray, xs: np.ndarray) -> np.ndarray:
    """Bilinear lookup of a (C, H, W) image at a grid of (y, x) coordinates,
    with coordinates clamped to the image (edge replication)."""
    _, h, w = pixels.shape
    ys = np.clip(ys, 0.0, h - 1.0)
    xs = np.clip(xs, 0.0, w - 1.0)
    y0 = np.floor(ys).astype(np.intp)
    x0 = np.floor(xs).astype(np.intp)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    fy = (ys - y0).astype(np.float32)
    fx = (xs - x0).astype(np.float32)
    img = pixels.astype(np.float32, copy=False)
    top = img[:, y0, x0] * (1 - fx) + img[:, y0, x1] * fx
    bottom = img[:, y1, x0] * (1 - fx) + img[:, y1, x1] * fx
    return top * (1 - fy) + bottom * fy


def resize_bilinear(pixels: np.ndarray, out_h: int = 224, out_w: int = 224) -> np.ndarray:
    """Bilinear resize of a (C, H, W) image with half-pixel-center alignment:
    output center i samples source coordinate (i + 0.5) * H/out_h - 0.5."""
    _, h, w = pixels.shape
    if h == out_h and w == out_w:
        return pixels.astype(np.float32, copy=True)
    src_y = (np.arange(out_h, dtype=np.float64) + 0.5) * (h / out_h) - 0.5
    src_x = (np.arange(out_w, dtype=np.float64) + 0.5) * (w / out_w) - 0.5
    ys, xs = np.meshgrid(src_y, src_x, indexing="ij")
    return _sample_bilinear(pixels, ys, xs)


def normalize(pixels: np.ndarray) -> np.ndarray:
    """Map 8-bit pixel values onto [0, 1] by dividing by 255. Values are
    clipped afterwards: bilinear weights summing to just over 1 in float32
    can push a resized 255 region onto 255.00002, which must not escape
    the unit interval."""
    scaled = pixels.astype(np.float32, copy=False) / np.float32(255.0)
    return np.clip(scaled, 0.0, 1.0).astype(np.float32, copy=False)


def preprocess(raw: np.ndarray, size=(224, 224)) -> np.ndarray:
    """Resize then normalize a decoded (3, H, W) uint8 image."""
    return normalize(resize_bilinear(raw, size[0], size[1]))


def load_sample(ref: SampleRef, size=(224, 224)) -> Sample:
    raw = decode_image(ref.path.read_bytes(), ref.id)
    return Sample(preprocess(raw, size), ref.label, ref.category, ref.id)


# --- augmentation -----------------------------------------------------------

def rotate_bilinear(pixels: np.ndarray, degrees: float) -> np.ndarray:
    """Rotate a (C, H, W) image about its center by ``degrees``
    (counterclockwise positive), bilinear resampling with edge replication."""
    if degrees == 0.0:
        return pixels.astype(np.float32, copy=True)
    _, h, w = pixels.shape
    theta = np.deg2rad(degrees)
    cos_t, sin_t = np.cos(theta), np.sin(theta)
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    ii, jj = np.meshgrid(np.arange(h, dtype=np.float64),
                         np.arange(w, dtype=np.float64), indexing="ij")
    dy, dx = ii - cy, jj - cx
    # Inverse mapping: rotate output coordinates back into the source frame.
    src_y = cos_t * dy - sin_t * dx + cy
    src_x = sin_t * dy + cos_t * dx + cx
    return _sample_bilinear(pixels, src_y, src_x)


def augment(sample: Sample, policy: AugmentPolicy, rng: np.random.Generator) -> Sample:
    """Apply the enabled transforms in fixed order (rotation, horizontal
    flip, brightness, noise); label, category, and id are never changed."""
    policy.validate()
    pixels = sample.pixels
    if policy.rotation_enabled and policy.rotation_max_deg > 0:
        angle = rng.uniform(-policy.rotation_max_deg, policy.rotation_max_deg)
        pixels = rotate_bilinear(pixels, angle)
    if policy.hflip_enabled and rng.random() < policy.hflip_prob:
        pixels = np.ascontiguousarray(pixels[:, :, ::-1])
    if policy.brightness_enabled:
        factor = rng.uniform(*policy.brightness_range)
        pixels = np.clip(pixels * np.float32(factor), 0.0, 1.0)
    if policy.noise_enabled and policy.noise_sigma > 0:
        noise = rng.normal(0.0, policy.noise_sigma, size=pixels.shape)
        pixels = np.clip(pixels + noise.astype(np.float32), 0.0, 1.0)
    return replace(sample, pixels=pixels.astype(np.float32, copy=False))


# --- dataset loading, splitting, batching -----------------------------------

def load_dataset(root_path, layout: str = "binary") -> Dataset:
    """Scan ``root_path`` for one subdirectory per category of ``layout``
    (recursively, extensions .jpg/.jpeg/.png, case-insensitive) and build the
    id-sorted dataset. An absent or empty category directory is an error."""
    if layout not in LAYOUTS:
        raise ConfigError(f"unknown layout {layout!r}; expected one of {sorted(LAYOUTS)}")
    root = Path(root_path)
    if not root.is_dir():
        raise DatasetError(f"dataset root {root} is not a directory")
    refs = []
    for dirname, (label, category) in LAYOUTS[layout].items():
        class_dir = root / dirname
        if not class_dir.is_dir():
            raise DatasetError(f"missing class directory {class_dir}")
        found = [
            p for p in sorted(class_dir.rglob("*"))
            if p.is_file() and p.suffix.lower() in IMAGE_EXTENSIONS
        ]
        if not found:
            raise DatasetError(f"class directory {class_dir} contains no images")
        for path in found:
            refs.append(SampleRef(
                path=path,
                id=path.relative_to(root).as_posix(),
                label=label,
                category=category,
            ))
    return Dataset(refs)


def split(dataset: Dataset, test_fraction: float, seed: int = 0,
          stratified: bool = True) -> tuple[Dataset, Dataset]:
    """Disjoint, exhaustive train/test split, deterministic for a seed.

    The test set always receives at least the requested fraction:
    ceil(test_fraction * len(dataset)) samples. Stratified mode spreads that
    count across classes by largest remainder of the exact per-class shares,
    keeping each split's label ratio within one sample of the dataset's.
    """
    if not 0.0 < test_fraction < 1.0:
        raise InputError(f"test_fraction must be in (0, 1), got {test_fraction}")
    n = len(dataset)
    take_total = math.ceil(n * test_fraction)
    rng = np.random.default_rng([seed, 0x5911])
    if stratified:
        labels = dataset.labels
        classes = sorted(set(labels.tolist()))
        exact = {c: test_fraction * int(np.sum(labels == c)) for c in classes}
        takes = {c: math.floor(exact[c]) for c in classes}
        leftover = take_total - sum(takes.values())
        # Hand out the remaining slots by descending fractional share
        # (ties broken by class id) so no class drifts by a whole sample.
        for c in sorted(classes, key=lambda c: (-(exact[c] - takes[c]), c)):
            if leftover <= 0:
                break
            takes[c] += 1
            leftover -= 1
        test_idx: list[int] = []
        for c in classes:
            members = np.flatnonzero(labels == c)
            chosen = rng.permutation(members)[:takes[c]]
            test_idx.extend(int(i) for i in chosen)
        test_set = set(test_idx)
    else:
        test_set = set(int(i) for i in rng.permutation(n)[:take_total])
    if not test_set or len(test_set) == n:
        raise InputError(
            f"test_fraction {test_fraction} yields an empty split for {n} samples"
        )
    train_idx = [i for i in range(n) if i not in test_set]
    return dataset.subset(train_idx), dataset.subset(sorted(test_set))


def batch_iter(dataset: Dataset, batch_size: int, shuffle: bool = False,
               seed: int = 0, epoch: int = 1, image_size=(224, 224),
               augment_policy: AugmentPolicy | None = None,
               strict_decode: bool = False):
    """Yield (pixels, labels) batches covering the dataset exactly once.

    ``shuffle`` permutes with a generator derived from (seed, epoch), so each
    epoch gets a fresh but reproducible order. Augmentation draws are derived
    from (seed, epoch, dataset position), independent of batch order.
    Undecodable images are skipped with a warning unless ``strict_decode``.
    The last batch may be smaller than ``batch_size``.
    """
    if batch_size < 1:
        raise InputError(f"batch_size must be >= 1, got {batch_size}")
    order = np.arange(len(dataset))
    if shuffle:
        order = np.random.default_rng([seed, epoch]).permutation(order)
    for start in range(0, len(order), batch_size):
        chunk = order[start:start + batch_size]
        pixels, labels = [], []
        for pos in chunk:
            ref = dataset[int(pos)]
            try:
                sample = load_sample(ref, image_size)
            except DecodeError:
                if strict_decode:
                    raise
                log.warning("skipping undecodable image %s", ref.id)
                continue
            if augment_policy is not None:
                sample = augment(sample, augment_policy,
                                 np.random.default_rng([seed, epoch, int(pos)]))
            pixels.append(sample.pixels)
            labels.append(sample.label)
        if pixels:
            yield np.stack(pixels), np.array(labels, dtype=np.int64)
