"""Train the reduced-width network on a synthetic two-class image set.

Generates 32 solid-color images (warm hues labeled fire, cool hues labeled
no_fire), then runs the full training loop — shuffled batches, softmax
cross-entropy, Adam — with the vgg-mini configuration (1/8 channel width,
32x32 inputs). The task is linearly separable, so the loss collapses,
train accuracy hits 100% around epoch 17, and the held-out quarter
classifies perfectly — all in well under a minute on one CPU core.

Run:  python3 demos/train_synthetic.py
"""

import io
import tempfile
from pathlib import Path

import numpy as np
from PIL import Image

from firenet import ModelConfig, RunConfig, evaluate, load_dataset, split, train


def write_images(root: Path, n_per_class=16, size=(32, 32)):
    gen = np.random.default_rng(42)
    (root / "fire").mkdir(parents=True)
    (root / "no_fire").mkdir(parents=True)
    for i in range(n_per_class):
        warm = np.zeros((*size, 3), dtype=np.uint8)
        warm[..., 0] = gen.integers(180, 256)
        warm[..., 1] = gen.integers(40, 120)
        warm[..., 2] = gen.integers(0, 70)
        cool = np.zeros((*size, 3), dtype=np.uint8)
        cool[..., 0] = gen.integers(0, 70)
        cool[..., 1] = gen.integers(40, 120)
        cool[..., 2] = gen.integers(180, 256)
        for label, arr, idx in (("fire", warm, i), ("no_fire", cool, i)):
            buf = io.BytesIO()
            Image.fromarray(arr).save(buf, format="PNG")
            (root / label / f"{label}_{idx:02d}.png").write_bytes(buf.getvalue())


def main():
    workdir = Path(tempfile.mkdtemp(prefix="firenet_demo_"))
    data_root = workdir / "data"
    write_images(data_root)
    print(f"wrote 32 synthetic images under {data_root}\n")

    config = RunConfig(
        data_root=str(data_root),
        out_dir=str(workdir / "run"),
        model=ModelConfig(architecture="vgg-mini", num_classes=2,
                          input_size=(32, 32), width_multiplier=0.125),
        epochs=25,
        batch_size=32,
        lr=1e-3,          # the full-scale default 1e-4, scaled up 10x
        seed=0,
        test_fraction=0.25,
        augment=None,     # the colors are the signal; keep them unperturbed
    )
    model, history = train(config)

    print(f"\ncheckpoints and curves are in {workdir / 'run'}")
    print((workdir / "run" / "curves.csv").read_text().rstrip())

    # Score the held-out quarter of the images.
    dataset = load_dataset(config.data_root)
    _, test_set = split(dataset, config.test_fraction, config.seed)
    report = evaluate(model, test_set)
    print(f"\nheld-out accuracy: {report.accuracy:.2%}  (AUC {report.auc:.3f})")


if __name__ == "__main__":
    main()
