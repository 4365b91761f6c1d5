"""weeesort: dataset pipeline, training protocol and sorting metrics for
component-image classification.

The heavy lifting lives in the native ``_core`` module; this package
re-exports its public surface.
"""

from ._core import (  # noqa: F401
    CROP_SIZE,
    ConfusionMatrix,
    OrientedBox,
    Square,
    WeeesortError,
    __version__,
    apply_augmentation,
    build_dataset,
    circumscribe_square,
    class_distribution,
    evaluate_checkpoint,
    fit_square_to_image,
    format_percent,
    generate_synthetic_dataset,
    manifest_summary,
    min_area_obb,
    parse_annotation_summary,
    run_training,
    sample_augmentation_params,
    split_counts,
)

__all__ = [
    "CROP_SIZE",
    "ConfusionMatrix",
    "OrientedBox",
    "Square",
    "WeeesortError",
    "__version__",
    "apply_augmentation",
    "build_dataset",
    "circumscribe_square",
    "class_distribution",
    "evaluate_checkpoint",
    "fit_square_to_image",
    "format_percent",
    "generate_synthetic_dataset",
    "manifest_summary",
    "min_area_obb",
    "parse_annotation_summary",
    "run_training",
    "sample_augmentation_params",
    "split_counts",
]
