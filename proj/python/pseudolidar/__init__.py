"""Stereo + sparse LiDAR depth estimation, pseudo-LiDAR clouds and KITTI-style evaluation."""

from ._core import (
    Architecture,
    BeamConfig,
    CalibSet,
    DomainError,
    EmptySetError,
    Error,
    FormatError,
    Intrinsics,
    InvariantError,
    IoError,
    NetParams,
    ParseError,
    ShapeError,
    average_precision,
    backproject,
    bev_iou,
    depth_metrics,
    depth_to_cloud,
    iou_3d,
    load_sample,
    make_sample,
    predict_depth,
    project,
    render_sparse_depth,
    run_cli,
    sample_loss,
    sparsify,
)

__all__ = [name for name in dir() if not name.startswith("_")]
