"""Dissect a weight checkpoint byte by byte.

The .vggw container is deliberately simple: a magic string, a version, a
tensor count, then each tensor as a length-prefixed name, a dtype byte, a
rank byte, the dims, and a little-endian float32 payload — no padding,
no trailer. This script saves a reduced-width model and re-reads the file
with nothing but ``struct``, then demonstrates head replacement: loading a
checkpoint whose classifier output size differs from the target model's.

Run:  python3 demos/checkpoint_format.py
"""

import struct
import tempfile
from pathlib import Path

import numpy as np

from firenet import (
    ModelConfig,
    build_model,
    init_weights,
    load_checkpoint,
    param_count,
    save_checkpoint,
)


def mini(num_classes=2):
    return ModelConfig(architecture="vgg-mini", num_classes=num_classes,
                       input_size=(32, 32), width_multiplier=0.125)


def parse_by_hand(path: Path):
    blob = path.read_bytes()
    assert blob[:4] == b"VGGW", "bad magic"
    version, count = struct.unpack_from("<II", blob, 4)
    print(f"magic OK, version {version}, {count} tensors, "
          f"{len(blob):,} bytes total\n")
    offset = 12
    for i in range(count):
        (name_len,) = struct.unpack_from("<H", blob, offset)
        offset += 2
        name = blob[offset:offset + name_len].decode("utf-8")
        offset += name_len
        dtype_code, rank = struct.unpack_from("<BB", blob, offset)
        offset += 2
        dims = struct.unpack_from(f"<{rank}I", blob, offset)
        offset += 4 * rank
        n = int(np.prod(dims))
        payload = np.frombuffer(blob, dtype="<f4", count=n, offset=offset)
        offset += 4 * n
        if i < 4 or i >= count - 2:
            print(f"  {name:<24} dims {str(dims):<18} "
                  f"first value {payload[0]:+.6f}")
        elif i == 4:
            print("  ...")
    assert offset == len(blob), "trailing bytes"
    print("\nparsed to exactly the end of the file — no padding anywhere")


def main():
    workdir = Path(tempfile.mkdtemp(prefix="firenet_demo_"))
    model = build_model(mini())
    init_weights(model, "he-uniform", seed=1)
    path = workdir / "model.vggw"
    save_checkpoint(model, path)
    parse_by_hand(path)

    # Head replacement: a 3-class checkpoint loaded into a 2-class model.
    # Every tensor except the final classifier pair must match the target's
    # shape; the head is re-initialized from the given seed instead.
    donor = build_model(mini(num_classes=3))
    init_weights(donor, "he-uniform", seed=2)
    donor_path = workdir / "three_class.vggw"
    save_checkpoint(donor, donor_path)

    target = build_model(mini(num_classes=2))
    load_checkpoint(target, donor_path, replace_head=True, head_seed=0)
    same = np.array_equal(target.features[0].params["weight"],
                          donor.features[0].params["weight"])
    print(f"\nloaded 3-class checkpoint into 2-class model "
          f"({param_count(target):,} parameters)")
    print(f"feature tensors preserved bitwise: {same}")
    print(f"new head shape: {target.classifier[6].params['weight'].shape}")


if __name__ == "__main__":
    main()
