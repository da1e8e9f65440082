"""Conditional implicit occupancy reconstruction of synthetic teeth."""

from ._dentocc import (
    CheckpointError,
    DimensionError,
    DomainError,
    Error,
    IoError,
    Reconstructor,
    boundary_edge_count,
    chamfer_l1,
    extract_mesh,
    normal_consistency,
    place_teeth,
    render_patch,
    run_cli,
    sample_points,
    tooth_contains,
    volumetric_iou,
    voxelize_tooth,
)

__all__ = [
    "CheckpointError",
    "DimensionError",
    "DomainError",
    "Error",
    "IoError",
    "Reconstructor",
    "boundary_edge_count",
    "chamfer_l1",
    "extract_mesh",
    "normal_consistency",
    "place_teeth",
    "render_patch",
    "run_cli",
    "sample_points",
    "tooth_contains",
    "volumetric_iou",
    "voxelize_tooth",
]
