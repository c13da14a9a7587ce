"""firenet: a from-scratch convolutional network for wildfire image
classification — numpy tensor kernels, hand-written layer gradients, Adam,
an image pipeline, and a binary-classifier evaluation suite."""

from .errors import (
    CheckpointError,
    CheckpointFormatError,
    CheckpointIntegrityError,
    ConfigError,
    DataError,
    DatasetError,
    DecodeError,
    FireNetError,
    InputError,
    NumericalError,
    ShapeError,
    StateError,
)
from .tensor import as_tensor, col2im, conv_output_size, flat_index, im2col, matmul, unflat_index
from .layers import (
    AdaptiveAvgPool2d,
    Conv2d,
    Dropout,
    Flatten,
    Layer,
    Linear,
    MaxPool2d,
    ReLU,
    Softmax,
    softmax,
)
from .optim import Adam, LossValue, cross_entropy, softmax_ce_backward
from .vgg import (
    Model,
    ModelConfig,
    build_model,
    describe,
    init_weights,
    load_checkpoint,
    param_count,
    read_vggw,
    save_checkpoint,
)
from .data import (
    CLASS_NAMES,
    FIRE,
    NO_FIRE,
    AugmentPolicy,
    Dataset,
    Sample,
    SampleRef,
    augment,
    batch_iter,
    decode_image,
    load_dataset,
    normalize,
    preprocess,
    resize_bilinear,
    rotate_bilinear,
    split,
)
from .metrics import (
    ConfusionMatrix,
    MetricsReport,
    accuracy,
    classification_report,
    confusion,
    precision_recall_f1,
    roc_auc,
    roc_curve,
)
from .training import (
    EpochRecord,
    RunConfig,
    TrainingHistory,
    evaluate,
    export_curves,
    format_epoch_line,
    predict,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "Adam", "AdaptiveAvgPool2d", "AugmentPolicy", "CLASS_NAMES",
    "CheckpointError", "CheckpointFormatError", "CheckpointIntegrityError",
    "ConfigError", "ConfusionMatrix", "Conv2d", "DataError", "Dataset",
    "DatasetError", "DecodeError", "Dropout", "EpochRecord", "FIRE",
    "FireNetError", "Flatten", "InputError", "Layer", "Linear", "LossValue",
    "MaxPool2d", "MetricsReport", "Model", "ModelConfig", "NO_FIRE",
    "NumericalError", "ReLU", "RunConfig", "Sample", "SampleRef",
    "ShapeError", "Softmax", "StateError", "TrainingHistory", "accuracy",
    "as_tensor", "augment", "batch_iter", "build_model",
    "classification_report", "col2im", "confusion", "conv_output_size",
    "cross_entropy", "decode_image", "describe", "evaluate", "export_curves",
    "flat_index", "format_epoch_line", "im2col", "init_weights",
    "load_checkpoint", "load_dataset", "matmul", "normalize", "param_count",
    "precision_recall_f1", "predict", "preprocess", "read_vggw",
    "resize_bilinear", "roc_auc", "roc_curve", "rotate_bilinear",
    "save_checkpoint", "softmax", "softmax_ce_backward", "split", "train",
    "unflat_index",
]
