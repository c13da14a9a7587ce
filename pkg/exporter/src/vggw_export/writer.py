"""Writer for the VGGW v1 tensor-interchange container.

The format is deliberately flat so it can be produced and parsed with
nothing but ``struct``: a 4-byte magic ``VGGW``, a little-endian u32
format version, a u32 tensor count, then one record per tensor.  Each
record is a u16 name length, the UTF-8 name, a u8 dtype code (0 =
float32), a u8 rank, ``rank`` u32 dimensions, and the row-major
little-endian float32 payload.  No alignment padding, no trailer: the
same tensors in the same order always serialise to the same bytes.
"""

import struct

import numpy as np

MAGIC = b"VGGW"
VERSION = 1
DTYPE_FLOAT32 = 0


def serialize_vggw(tensors) -> bytes:
    """Serialise an ordered mapping of name -> float32 array.

    The mapping's iteration order becomes the record order in the file,
    so callers that need reproducible bytes must pass the tensors in a
    deterministic order.
    """
    chunks = [MAGIC, struct.pack("<II", VERSION, len(tensors))]
    for name, array in tensors.items():
        data = np.ascontiguousarray(array, dtype="<f4")
        encoded = name.encode("utf-8")
        chunks.append(struct.pack("<H", len(encoded)))
        chunks.append(encoded)
        chunks.append(struct.pack("<BB", DTYPE_FLOAT32, data.ndim))
        chunks.append(struct.pack(f"<{data.ndim}I", *data.shape))
        chunks.append(data.tobytes())
    return b"".join(chunks)


def write_vggw(path, tensors) -> bytes:
    """Serialise ``tensors`` to ``path`` and return the written bytes."""
    blob = serialize_vggw(tensors)
    with open(path, "wb") as fh:
        fh.write(blob)
    return blob
