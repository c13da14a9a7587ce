"""Export VGG16 ImageNet weights into a VGGW interchange file.

torchvision's VGG16 stores its parameters under the exact tensor names
the interchange format uses (``features.0.weight`` ... ``classifier.6.bias``),
so the export is mostly a matter of validating that the source really is
a stock VGG16 and then streaming the tensors out in network order.  The
validation is strict on purpose: a renamed or reshaped tensor means the
source has drifted from the published architecture, and silently writing
it would only defer the failure to whoever loads the file.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import os
import sys

import torch

from .writer import write_vggw

# The sixteen weight layers of VGG16 keyed by the positions they occupy in
# torchvision's ``features`` and ``classifier`` sequences.  Convolutions are
# all 3x3; the classifier ends in the 1000-way ImageNet head.
_CONV_CHANNELS = [
    (0, 3, 64), (2, 64, 64),
    (5, 64, 128), (7, 128, 128),
    (10, 128, 256), (12, 256, 256), (14, 256, 256),
    (17, 256, 512), (19, 512, 512), (21, 512, 512),
    (24, 512, 512), (26, 512, 512), (28, 512, 512),
]
_LINEAR_SHAPES = [(0, (4096, 25088)), (3, (4096, 4096)), (6, (1000, 4096))]

EXPECTED_SHAPES: dict[str, tuple[int, ...]] = {}
for _idx, _c_in, _c_out in _CONV_CHANNELS:
    EXPECTED_SHAPES[f"features.{_idx}.weight"] = (_c_out, _c_in, 3, 3)
    EXPECTED_SHAPES[f"features.{_idx}.bias"] = (_c_out,)
for _idx, _shape in _LINEAR_SHAPES:
    EXPECTED_SHAPES[f"classifier.{_idx}.weight"] = _shape
    EXPECTED_SHAPES[f"classifier.{_idx}.bias"] = (_shape[0],)

TOTAL_PARAMETERS = 138_357_544


class ExportError(Exception):
    """The source weights do not look like a stock 1000-class VGG16."""


@dataclasses.dataclass
class ExportManifest:
    """What was written: enough to audit the file without re-reading it."""

    source: str
    tensors: list[dict]  # one {"name", "shape", "bytes"} entry per tensor
    parameter_count: int
    sha256: str

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=2) + "\n"


def _load_state_dict(source):
    if source is not None:
        try:
            loaded = torch.load(source, map_location="cpu", weights_only=True)
        except Exception as exc:
            raise ExportError(f"cannot read source weights {source}: {exc}") from exc
        # Tolerate the common checkpoint wrapper around a bare state dict.
        if isinstance(loaded, dict) and "state_dict" in loaded:
            loaded = loaded["state_dict"]
        if not isinstance(loaded, dict):
            raise ExportError(f"{source} does not contain a state dict")
        return loaded, os.fspath(source)

    import torchvision

    weights = torchvision.models.VGG16_Weights.IMAGENET1K_V1
    try:
        model = torchvision.models.vgg16(weights=weights)
    except Exception as exc:
        raise ExportError(
            "could not obtain the torchvision ImageNet weights "
            f"({exc}); pass --source with a local .pth state dict"
        ) from exc
    return model.state_dict(), f"torchvision/vgg16/{weights.name}"


def _validate(state_dict) -> None:
    names = set(state_dict)
    expected = set(EXPECTED_SHAPES)
    unexpected = sorted(names - expected)
    if unexpected:
        raise ExportError(f"unexpected tensor in source: {unexpected[0]}")
    missing = sorted(expected - names)
    if missing:
        raise ExportError(f"source is missing tensor: {missing[0]}")
    for name, want in EXPECTED_SHAPES.items():
        tensor = state_dict[name]
        got = tuple(tensor.shape)
        if got != want:
            raise ExportError(
                f"tensor {name} has shape {got}, expected {want}"
            )
        if tensor.dtype != torch.float32:
            raise ExportError(
                f"tensor {name} has dtype {tensor.dtype}, expected float32"
            )


def export_pretrained(out_path, manifest_path=None, source=None) -> ExportManifest:
    """Write a VGGW file (and its manifest) from a VGG16 state dict.

    ``source`` names a local ``.pth`` state dict; without it the stock
    torchvision ImageNet release is used.  Tensors are written in network
    order with no timestamps or other varying fields, so exporting the
    same source twice produces byte-identical output.
    """
    state_dict, source_id = _load_state_dict(source)
    _validate(state_dict)

    ordered = {
        name: state_dict[name].detach().cpu().numpy()
        for name in EXPECTED_SHAPES
    }
    blob = write_vggw(out_path, ordered)

    manifest = ExportManifest(
        source=source_id,
        tensors=[
            {
                "name": name,
                "shape": list(array.shape),
                "bytes": array.size * 4,
            }
            for name, array in ordered.items()
        ],
        parameter_count=sum(a.size for a in ordered.values()),
        sha256=hashlib.sha256(blob).hexdigest(),
    )
    if manifest.parameter_count != TOTAL_PARAMETERS:
        raise ExportError(
            f"parameter count {manifest.parameter_count} does not match "
            f"VGG16's {TOTAL_PARAMETERS}"
        )

    if manifest_path is None:
        root, _ = os.path.splitext(os.fspath(out_path))
        manifest_path = root + ".manifest.json"
    with open(manifest_path, "w", encoding="utf-8") as fh:
        fh.write(manifest.to_json())
    return manifest


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="export-vgg16-weights",
        description="Export VGG16 ImageNet weights to a VGGW file.",
    )
    parser.add_argument("--out", required=True, help="output .vggw path")
    parser.add_argument("--manifest", help="manifest path (default: next to --out)")
    parser.add_argument("--source", help="local .pth state dict instead of torchvision's download")
    args = parser.parse_args(argv)

    try:
        manifest = export_pretrained(args.out, manifest_path=args.manifest,
                                     source=args.source)
    except ExportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"Wrote {args.out} ({len(manifest.tensors)} tensors, "
          f"{manifest.parameter_count:,} parameters)")
    print(f"SHA-256: {manifest.sha256}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
