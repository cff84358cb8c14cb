"""FALKON-based on-line object detection training on precomputed region features."""

from ._core import (
    APReport,
    BootstrapConfig,
    Box,
    CenterSelection,
    ClassAP,
    ClassifierEnsemble,
    DetectConfig,
    Detection,
    DetectionDataset,
    FalkonModel,
    GaussianKernelParams,
    SolverConfig,
    SyntheticConfig,
    TrainMeta,
    derive_seed,
    detect,
    evaluate_map,
    falkon_predict,
    falkon_train,
    generate_synthetic,
    iou,
    kernel_block,
    load_dataset,
    load_ensemble,
    load_model,
    nms,
    nystrom_krr_direct,
    rebalanced_center_sampling,
    sample_without_replacement,
    save_dataset,
    save_ensemble,
    save_model,
    train_ensemble,
    voc07_ap,
)

__all__ = [
    "APReport",
    "BootstrapConfig",
    "Box",
    "CenterSelection",
    "ClassAP",
    "ClassifierEnsemble",
    "DetectConfig",
    "Detection",
    "DetectionDataset",
    "FalkonModel",
    "GaussianKernelParams",
    "SolverConfig",
    "SyntheticConfig",
    "TrainMeta",
    "derive_seed",
    "detect",
    "evaluate_map",
    "falkon_predict",
    "falkon_train",
    "generate_synthetic",
    "iou",
    "kernel_block",
    "load_dataset",
    "load_ensemble",
    "load_model",
    "nms",
    "nystrom_krr_direct",
    "rebalanced_center_sampling",
    "sample_without_replacement",
    "save_dataset",
    "save_ensemble",
    "save_model",
    "train_ensemble",
    "voc07_ap",
]
