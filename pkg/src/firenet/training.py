"""Run orchestration: the training loop, evaluation over a dataset,
single-image prediction, and curve/history export.

One training thread owns the model and optimizer. Every random draw
(weight init, dropout, shuffling, augmentation, splitting) is derived
from RunConfig.seed, so a run is reproducible end to end: the same config
produces bitwise-identical checkpoints and metric records.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import (
    CLASS_NAMES,
    AugmentPolicy,
    Dataset,
    batch_iter,
    decode_image,
    load_dataset,
    preprocess,
    split,
)
from .errors import ConfigError, NumericalError
from .layers import softmax
from .metrics import MetricsReport, classification_report, roc_csv, roc_curve
from .optim import Adam, cross_entropy, softmax_ce_backward
from .vgg import Model, ModelConfig, build_model, init_weights, load_checkpoint, save_checkpoint

EPOCH_LINE = "Epoch {epoch}/{total}, Loss: {loss:.4f}, Accuracy: {acc:.2f}%"


@dataclass
class RunConfig:
    """Everything a training run depends on; validated before use."""

    data_root: str = ""
    layout: str = "binary"
    test_fraction: float = 0.2
    validation_fraction: float = 0.0
    epochs: int = 10
    batch_size: int = 32
    lr: float = 0.0001
    seed: int = 0
    model: ModelConfig = field(default_factory=ModelConfig)
    augment: AugmentPolicy | None = field(default_factory=AugmentPolicy)
    freeze_features: bool = False
    weights_in: str | None = None
    replace_head: bool = False
    out_dir: str = "runs/default"
    checkpoint_retention: int = 2
    stratified: bool = True
    strict_decode: bool = False

    def validate(self) -> "RunConfig":
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.lr <= 0:
            raise ConfigError(f"lr must be positive, got {self.lr}")
        for name, frac in (("test_fraction", self.test_fraction),
                           ("validation_fraction", self.validation_fraction)):
            if not 0.0 <= frac < 1.0:
                raise ConfigError(f"{name} must be in [0, 1), got {frac}")
        if self.test_fraction + self.validation_fraction >= 1.0:
            raise ConfigError(
                "test_fraction + validation_fraction must be < 1, got "
                f"{self.test_fraction} + {self.validation_fraction}"
            )
        if self.checkpoint_retention < 1:
            raise ConfigError("checkpoint_retention must be >= 1")
        self.model.validate()
        if self.augment is not None:
            self.augment.validate()
        return self


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    train_accuracy: float
    val_loss: float | None = None
    val_accuracy: float | None = None
    seconds: float = 0.0


@dataclass
class TrainingHistory:
    records: list[EpochRecord] = field(default_factory=list)

    def append(self, record: EpochRecord):
        expected = len(self.records) + 1
        if record.epoch != expected:
            raise ValueError(f"epoch {record.epoch} out of order; expected {expected}")
        self.records.append(record)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def has_validation(self) -> bool:
        return bool(self.records) and all(
            r.val_loss is not None and r.val_accuracy is not None
            for r in self.records
        )

    def to_json(self) -> str:
        rows = []
        for r in self.records:
            row = {"epoch": r.epoch, "train_loss": r.train_loss,
                   "train_accuracy": r.train_accuracy, "seconds": r.seconds}
            if r.val_loss is not None:
                row["val_loss"] = r.val_loss
                row["val_accuracy"] = r.val_accuracy
            rows.append(row)
        return json.dumps({"epochs": rows}, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "TrainingHistory":
        history = cls()
        for row in json.loads(text)["epochs"]:
            history.append(EpochRecord(
                epoch=int(row["epoch"]),
                train_loss=float(row["train_loss"]),
                train_accuracy=float(row["train_accuracy"]),
                val_loss=float(row["val_loss"]) if "val_loss" in row else None,
                val_accuracy=(float(row["val_accuracy"])
                              if "val_accuracy" in row else None),
                seconds=float(row.get("seconds", 0.0)),
            ))
        return history


def format_epoch_line(epoch: int, total: int, loss: float, acc: float) -> str:
    """One epoch's log line, e.g. ``Epoch 1/10, Loss: 0.3250, Accuracy: 85.17%``."""
    return EPOCH_LINE.format(epoch=epoch, total=total, loss=loss, acc=acc)


def export_curves(history: TrainingHistory, out_dir) -> Path:
    """Write ``curves.csv`` (one row per epoch, loss at 4 decimals, accuracy
    at 2); validation columns appear only when every epoch has them."""
    if len(history) == 0:
        raise ValueError("cannot export curves from an empty history")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with_val = history.has_validation
    header = "epoch,train_loss,train_accuracy"
    if with_val:
        header += ",val_loss,val_accuracy"
    lines = [header]
    for r in history:
        line = f"{r.epoch},{r.train_loss:.4f},{r.train_accuracy:.2f}"
        if with_val:
            line += f",{r.val_loss:.4f},{r.val_accuracy:.2f}"
        lines.append(line)
    path = out / "curves.csv"
    path.write_text("\n".join(lines) + "\n")
    return path


def _forward_dataset(model: Model, dataset: Dataset, batch_size: int = 32):
    """Eval-mode forward over a dataset in id order: returns
    (fire_scores, predictions, truth). Ties in the output argmax go to
    class 0 (no fire)."""
    model.eval()
    scores, preds, truth = [], [], []
    size = model.config.input_size
    for pixels, labels in batch_iter(dataset, batch_size, shuffle=False,
                                     image_size=size):
        probs = softmax(model.forward(pixels))
        scores.append(probs[:, 1])
        preds.append(np.argmax(probs, axis=1))
        truth.append(labels)
    return (np.concatenate(scores), np.concatenate(preds),
            np.concatenate(truth))


def _validation_pass(model: Model, dataset: Dataset, batch_size: int):
    model.eval()
    size = model.config.input_size
    total_loss, correct, count = 0.0, 0, 0
    for pixels, labels in batch_iter(dataset, batch_size, shuffle=False,
                                     image_size=size):
        probs = softmax(model.forward(pixels))
        loss = cross_entropy(probs, labels)
        total_loss += float(loss) * len(labels)
        correct += int(np.sum(np.argmax(probs, axis=1) == labels))
        count += len(labels)
    return total_loss / count, 100.0 * correct / count


def _prune_checkpoints(out: Path, keep: int):
    epoch_files = sorted(
        (p for p in out.glob("epoch_*.vggw")),
        key=lambda p: int(p.stem.split("_")[1]),
    )
    for stale in epoch_files[:-keep] if keep else epoch_files:
        stale.unlink()


def prepare_model(config: RunConfig) -> Model:
    """Build the configured model and either load its starting checkpoint
    or initialize weights from the run seed."""
    model = build_model(config.model)
    if config.weights_in:
        load_checkpoint(model, config.weights_in,
                        replace_head=config.replace_head,
                        head_seed=config.seed)
    else:
        init_weights(model, "he-uniform", seed=config.seed)
    model.reseed_dropout(config.seed)
    return model


def train(config: RunConfig, log=print):
    """Run the full training loop; returns (model, history).

    Per epoch: shuffled batches -> train-mode forward -> softmax
    cross-entropy -> backward -> Adam step (frozen tensors skipped), then
    one log line. Loss and accuracy are running aggregates over the epoch's
    training batches. Checkpoints go to ``<out>/epoch_<k>.vggw`` (last
    ``checkpoint_retention`` kept) plus ``<out>/final.vggw``; ``history.json``
    and ``curves.csv`` are written alongside.
    """
    config.validate()
    dataset = load_dataset(config.data_root, config.layout)
    train_ds = dataset
    if config.test_fraction > 0:
        train_ds, _test_ds = split(dataset, config.test_fraction, config.seed,
                                   config.stratified)
    val_ds = None
    if config.validation_fraction > 0:
        # The validation fraction is of the whole dataset; rescale it to the
        # post-test remainder so the requested share is carved from train.
        rel = config.validation_fraction / (1.0 - config.test_fraction)
        train_ds, val_ds = split(train_ds, rel, config.seed, config.stratified)

    model = prepare_model(config)
    optimizer = Adam(lr=config.lr)
    frozen = set(model.feature_param_names()) if config.freeze_features else set()

    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    history = TrainingHistory()
    size = model.config.input_size

    for epoch in range(1, config.epochs + 1):
        started = time.perf_counter()
        model.train()
        total_loss, correct, count = 0.0, 0, 0
        batches = batch_iter(train_ds, config.batch_size, shuffle=True,
                             seed=config.seed, epoch=epoch, image_size=size,
                             augment_policy=config.augment,
                             strict_decode=config.strict_decode)
        for batch_index, (pixels, labels) in enumerate(batches):
            logits = model.forward(pixels)
            probs = softmax(logits)
            loss = float(cross_entropy(probs, labels))
            if not np.isfinite(loss):
                raise NumericalError(
                    f"non-finite loss {loss} at epoch {epoch}, "
                    f"batch {batch_index}"
                )
            model.backward(softmax_ce_backward(logits, labels))
            params = model.named_params()
            grads = model.named_grads()
            if frozen:
                params = {k: v for k, v in params.items() if k not in frozen}
                grads = {k: v for k, v in grads.items() if k not in frozen}
            optimizer.step(params, grads)
            total_loss += loss * len(labels)
            correct += int(np.sum(np.argmax(logits, axis=1) == labels))
            count += len(labels)

        train_loss = total_loss / count
        train_acc = 100.0 * correct / count
        val_loss = val_acc = None
        if val_ds is not None:
            val_loss, val_acc = _validation_pass(model, val_ds, config.batch_size)
        history.append(EpochRecord(
            epoch=epoch, train_loss=train_loss, train_accuracy=train_acc,
            val_loss=val_loss, val_accuracy=val_acc,
            seconds=time.perf_counter() - started,
        ))
        if log is not None:
            log(format_epoch_line(epoch, config.epochs, train_loss, train_acc))
        save_checkpoint(model, out / f"epoch_{epoch}.vggw")
        _prune_checkpoints(out, config.checkpoint_retention)

    save_checkpoint(model, out / "final.vggw")
    (out / "history.json").write_text(history.to_json())
    export_curves(history, out)
    return model, history


def evaluate(model: Model, dataset: Dataset, out_dir=None,
             batch_size: int = 32) -> MetricsReport:
    """Score every sample (eval mode: no augmentation, no dropout), take
    softmax fire-probabilities and argmax predictions, and build the full
    metrics report. With ``out_dir`` set, writes ``report.txt``,
    ``report.json``, and ``roc.csv`` there."""
    scores, preds, truth = _forward_dataset(model, dataset, batch_size)
    report = classification_report(preds, truth, scores=scores)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.txt").write_text(report.to_text())
        (out / "report.json").write_text(report.to_json())
        (out / "roc.csv").write_text(roc_csv(roc_curve(scores, truth)))
    return report


def predict(model: Model, image_path) -> tuple[str, float]:
    """Classify one image file: returns (class name, fire probability).

    The image goes through the standard preprocessing (decode, resize to the
    model's input size, normalize); equal class probabilities resolve to
    no_fire.
    """
    path = Path(image_path)
    raw = decode_image(path.read_bytes(), str(path))
    pixels = preprocess(raw, model.config.input_size)
    model.eval()
    probs = softmax(model.forward(pixels[np.newaxis]))
    label = int(np.argmax(probs[0]))
    return CLASS_NAMES[label], float(probs[0, 1])
