"""Export torchvision VGG16 weights to the VGGW interchange format."""

from .export import (
    EXPECTED_SHAPES,
    TOTAL_PARAMETERS,
    ExportError,
    ExportManifest,
    export_pretrained,
)
from .writer import serialize_vggw, write_vggw

__version__ = "0.1.0"

__all__ = [
    "EXPECTED_SHAPES",
    "TOTAL_PARAMETERS",
    "ExportError",
    "ExportManifest",
    "export_pretrained",
    "serialize_vggw",
    "write_vggw",
]
