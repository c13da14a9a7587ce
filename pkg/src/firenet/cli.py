"""Command-line interface: train, eval, predict, export-curves, inspect.

Configuration precedence is CLI flag > config file > built-in default. The
config file is INI-style ``key = value`` with one section per concern
([data], [model], [train], [augment]); every key mirrors a CLI flag.

Exit codes: 0 success, 1 usage/configuration error, 2 data error
(decode/dataset/checkpoint/IO), 3 numerical failure.
"""

from __future__ import annotations

import argparse
import configparser
import sys
from pathlib import Path

from .data import AugmentPolicy, load_dataset, split
from .errors import ConfigError, DataError, FireNetError, InputError, NumericalError, ShapeError
from .layers import Conv2d, Dropout, Linear, MaxPool2d, ReLU
from .training import RunConfig, TrainingHistory, evaluate, export_curves, predict, train
from .vgg import ModelConfig, build_model, describe, load_checkpoint, param_count

USAGE_ERROR, DATA_ERROR, NUMERICAL_ERROR = 1, 2, 3


class _Parser(argparse.ArgumentParser):
    """argparse parser that reports usage problems with exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(USAGE_ERROR, f"{self.prog}: error: {message}\n")


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


def _inverted_bool(text: str) -> bool:
    return not _parse_bool(text)


# (section, key) -> (argparse dest, converter). "stratified" and "enabled"
# invert into the CLI's negative flags so file and flags share one dest.
_CONFIG_SCHEMA = {
    ("data", "root"): ("data_root", str),
    ("data", "layout"): ("layout", str),
    ("data", "test_fraction"): ("test_fraction", float),
    ("data", "val_fraction"): ("val_fraction", float),
    ("data", "strict_decode"): ("strict_decode", _parse_bool),
    ("data", "stratified"): ("no_stratify", _inverted_bool),
    ("model", "arch"): ("arch", str),
    ("model", "num_classes"): ("num_classes", int),
    ("model", "dropout"): ("dropout", float),
    ("model", "width_multiplier"): ("width_multiplier", float),
    ("model", "input_size"): ("input_size", int),
    ("train", "epochs"): ("epochs", int),
    ("train", "batch_size"): ("batch_size", int),
    ("train", "lr"): ("lr", float),
    ("train", "seed"): ("seed", int),
    ("train", "freeze_features"): ("freeze_features", _parse_bool),
    ("train", "weights"): ("weights", str),
    ("train", "replace_head"): ("replace_head", _parse_bool),
    ("train", "out"): ("out", str),
    ("train", "retention"): ("retention", int),
    ("augment", "enabled"): ("no_augment", _inverted_bool),
    ("augment", "rotation_max_deg"): ("rotation_max_deg", float),
    ("augment", "hflip_prob"): ("hflip_prob", float),
    ("augment", "brightness_low"): ("brightness_low", float),
    ("augment", "brightness_high"): ("brightness_high", float),
    ("augment", "noise_sigma"): ("noise_sigma", float),
}


def read_config_file(path) -> dict:
    """Parse an INI run-configuration file into argparse defaults."""
    parser = configparser.ConfigParser()
    try:
        with open(path) as handle:
            parser.read_file(handle)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config file {path}: {exc}") from exc
    values = {}
    for section in parser.sections():
        for key, raw in parser.items(section):
            try:
                dest, convert = _CONFIG_SCHEMA[(section, key)]
            except KeyError:
                raise ConfigError(
                    f"unknown config entry [{section}] {key} in {path}"
                ) from None
            try:
                values[dest] = convert(raw)
            except ValueError as exc:
                raise ConfigError(
                    f"bad value for [{section}] {key}: {raw!r}"
                ) from exc
    return values


def _add_model_args(p):
    p.add_argument("--arch", choices=("vgg16", "vgg-mini"), default="vgg16")
    p.add_argument("--num-classes", type=int, default=2)
    p.add_argument("--dropout", type=float, default=0.5)
    p.add_argument("--width-multiplier", type=float, default=None,
                   help="channel scale for vgg-mini (default 1/8)")
    p.add_argument("--input-size", type=int, default=None,
                   help="square input edge (default 224 / 32 for vgg-mini)")


def _add_data_args(p):
    p.add_argument("--data-root")
    p.add_argument("--layout", choices=("binary", "dfire4"), default="binary")
    p.add_argument("--test-fraction", type=float, default=0.2)
    p.add_argument("--val-fraction", type=float, default=0.0)
    p.add_argument("--strict-decode", action="store_true", default=False)
    p.add_argument("--no-stratify", action="store_true", default=False)


def _add_augment_args(p):
    p.add_argument("--no-augment", action="store_true", default=False)
    p.add_argument("--rotation-max-deg", type=float, default=15.0)
    p.add_argument("--hflip-prob", type=float, default=0.5)
    p.add_argument("--brightness-low", type=float, default=0.8)
    p.add_argument("--brightness-high", type=float, default=1.2)
    p.add_argument("--noise-sigma", type=float, default=0.02)


def _add_common(p, out_default):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--weights", help="starting checkpoint (.vggw)")
    p.add_argument("--replace-head", action="store_true", default=False)
    p.add_argument("--out", default=out_default)
    p.add_argument("--config", help="INI run-configuration file")


def build_parser(file_defaults: dict | None = None) -> _Parser:
    """Assemble the CLI. ``file_defaults`` (dest -> value, from a config
    file) seeds every subparser's defaults so explicit flags still win."""
    parser = _Parser(prog="firenet",
                     description="Wildfire image classifier: training, "
                                 "evaluation, and inference.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train a model")
    _add_model_args(p_train)
    _add_data_args(p_train)
    _add_augment_args(p_train)
    _add_common(p_train, out_default="runs/train")
    p_train.add_argument("--epochs", type=int, default=10)
    p_train.add_argument("--batch-size", type=int, default=32)
    p_train.add_argument("--lr", type=float, default=0.0001)
    p_train.add_argument("--freeze-features", action="store_true", default=False)
    p_train.add_argument("--retention", type=int, default=2,
                         help="how many epoch checkpoints to keep")
    p_train.set_defaults(func=cmd_train)

    p_eval = sub.add_parser("eval", help="evaluate a checkpoint on the "
                                         "held-out test split")
    _add_model_args(p_eval)
    _add_data_args(p_eval)
    _add_common(p_eval, out_default="runs/eval")
    p_eval.add_argument("--batch-size", type=int, default=32)
    p_eval.set_defaults(func=cmd_eval)

    p_predict = sub.add_parser("predict", help="classify image files")
    _add_model_args(p_predict)
    _add_common(p_predict, out_default=None)
    p_predict.add_argument("images", nargs="+", metavar="IMAGE")
    p_predict.set_defaults(func=cmd_predict)

    p_curves = sub.add_parser("export-curves",
                              help="write curves.csv from a history.json")
    p_curves.add_argument("--history", required=True,
                          help="history.json from a training run")
    p_curves.add_argument("--out", default=None,
                          help="output directory (default: alongside history)")
    p_curves.add_argument("--config", help="INI run-configuration file")
    p_curves.set_defaults(func=cmd_export_curves)

    p_inspect = sub.add_parser("inspect",
                               help="print the architecture and parameter count")
    _add_model_args(p_inspect)
    _add_common(p_inspect, out_default=None)
    p_inspect.set_defaults(func=cmd_inspect)

    if file_defaults:
        # Subcommands parse into their own namespace, so the file values
        # must override the defaults of each subparser directly.
        for p in (parser, p_train, p_eval, p_predict, p_curves, p_inspect):
            p.set_defaults(**file_defaults)
    return parser


def _model_config(args) -> ModelConfig:
    mini = args.arch == "vgg-mini"
    width = args.width_multiplier
    if width is None:
        width = 0.125 if mini else 1.0
    size = args.input_size
    if size is None:
        size = 32 if mini else 224
    return ModelConfig(
        architecture=args.arch,
        num_classes=args.num_classes,
        input_size=(size, size),
        dropout_p=args.dropout,
        width_multiplier=width,
    ).validate()


def _augment_policy(args) -> AugmentPolicy | None:
    if args.no_augment:
        return None
    return AugmentPolicy(
        rotation_max_deg=args.rotation_max_deg,
        hflip_prob=args.hflip_prob,
        brightness_range=(args.brightness_low, args.brightness_high),
        noise_sigma=args.noise_sigma,
    ).validate()


def _require_data_root(args) -> str:
    if not args.data_root:
        raise ConfigError("--data-root is required (flag or config file)")
    return args.data_root


def _load_model(args, require_weights: bool):
    model = build_model(_model_config(args))
    if args.weights:
        load_checkpoint(model, args.weights, replace_head=args.replace_head,
                        head_seed=args.seed)
    elif require_weights:
        raise ConfigError("--weights is required for this command")
    return model


def cmd_train(args) -> int:
    config = RunConfig(
        data_root=_require_data_root(args),
        layout=args.layout,
        test_fraction=args.test_fraction,
        validation_fraction=args.val_fraction,
        epochs=args.epochs,
        batch_size=args.batch_size,
        lr=args.lr,
        seed=args.seed,
        model=_model_config(args),
        augment=_augment_policy(args),
        freeze_features=args.freeze_features,
        weights_in=args.weights,
        replace_head=args.replace_head,
        out_dir=args.out,
        checkpoint_retention=args.retention,
        stratified=not args.no_stratify,
        strict_decode=args.strict_decode,
    )
    train(config)
    print(f"final checkpoint: {Path(args.out) / 'final.vggw'}")
    return 0


def cmd_eval(args) -> int:
    model = _load_model(args, require_weights=True)
    dataset = load_dataset(_require_data_root(args), args.layout)
    if args.test_fraction > 0:
        _, dataset = split(dataset, args.test_fraction, args.seed,
                           stratified=not args.no_stratify)
    report = evaluate(model, dataset, out_dir=args.out,
                      batch_size=args.batch_size)
    print(report.to_text(), end="")
    return 0


def cmd_predict(args) -> int:
    model = _load_model(args, require_weights=True)
    for image in args.images:
        name, fire_prob = predict(model, image)
        print(f"{image}\t{name}\t{fire_prob:.4f}")
    return 0


def cmd_export_curves(args) -> int:
    history_path = Path(args.history)
    try:
        history = TrainingHistory.from_json(history_path.read_text())
    except (ValueError, KeyError) as exc:
        raise DataError(f"malformed history file {history_path}: {exc}") from exc
    out_dir = args.out if args.out is not None else history_path.parent
    path = export_curves(history, out_dir)
    print(f"wrote {path}")
    return 0


def cmd_inspect(args) -> int:
    model = _load_model(args, require_weights=False)
    counts = {Conv2d: 0, MaxPool2d: 0, Linear: 0, Dropout: 0, ReLU: 0}
    for layer in model.iter_layers():
        if type(layer) in counts:
            counts[type(layer)] += 1
    print(describe(model))
    print(f"Layers: {counts[Conv2d]} Conv2d, {counts[MaxPool2d]} MaxPool2d, "
          f"{counts[Linear]} Linear, {counts[Dropout]} Dropout, "
          f"{counts[ReLU]} ReLU")
    print(f"Parameters: {param_count(model):,}")
    return 0


def main(argv=None) -> int:
    bootstrap = _Parser(prog="firenet", add_help=False)
    bootstrap.add_argument("--config")
    try:
        known, _ = bootstrap.parse_known_args(argv)
        file_defaults = read_config_file(known.config) if known.config else None
        parser = build_parser(file_defaults)
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    except (ConfigError, InputError, ShapeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return NUMERICAL_ERROR
    except (DataError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DATA_ERROR
    except FireNetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())
