#pragma once

#include <Eigen/Geometry>

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "dentocc/occupancy_net.hpp"
#include "dentocc/synth.hpp"

namespace dentocc {

struct TriangleMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<std::uint32_t, 3>> faces;
    std::vector<Vec3> normals;  // empty or one unit vector per vertex

    bool empty() const { return faces.empty(); }
    /// Throws on out-of-range or repeated face indices and on bad normals.
    void validate() const;
};

/// Values on a regular lattice; sample (i,j,k) sits at origin + spacing * (i,j,k).
struct ScalarGrid {
    GridDims dims{0, 0, 0};
    Vec3 origin{-0.5, -0.5, -0.5};
    Vec3 spacing{1.0, 1.0, 1.0};
    std::vector<double> values;

    ScalarGrid() = default;
    /// Cell-centered lattice spanning [-0.5,0.5] per axis; every extent must be >= 2.
    explicit ScalarGrid(GridDims d, double fill = 0.0);

    std::size_t index(std::size_t i, std::size_t j, std::size_t k) const { return (i * dims[1] + j) * dims[2] + k; }
    double& at(std::size_t i, std::size_t j, std::size_t k) { return values[index(i, j, k)]; }
    double at(std::size_t i, std::size_t j, std::size_t k) const { return values[index(i, j, k)]; }
    Vec3 position(std::size_t i, std::size_t j, std::size_t k) const {
        return origin + spacing.cwiseProduct(Vec3(static_cast<double>(i), static_cast<double>(j), static_cast<double>(k)));
    }
};

inline constexpr GridDims kExtractionDims{128, 128, 128};
inline constexpr double kDefaultIso = 0.5;

/// Surrounds the grid with one layer of `value`, one spacing outside on every side.
ScalarGrid pad_grid(const ScalarGrid& grid, double value = 0.0);

/// 0/1 values of a voxel grid on the same lattice.
ScalarGrid to_scalar_grid(const VoxelGrid& voxels);

/// Cells whose value exceeds `iso`.
VoxelGrid threshold_grid(const ScalarGrid& grid, double iso = kDefaultIso);

/// Eval-mode occupancy probabilities at the cell centers of `dims`, evaluated
/// `chunk` points at a time (the result does not depend on the chunking). Unpadded.
ScalarGrid eval_grid(const OccupancyNetwork& net, const Tensor& condition, GridDims dims = kExtractionDims,
                     std::size_t chunk = 32768);

/// Marching cubes: values above `iso` are inside; faces wind counter-clockwise
/// seen from outside. Ambiguous faces always separate the inside corners, so
/// neighbouring cells agree and closed inputs give watertight meshes.
/// Vertices on shared lattice edges are emitted once. A polygon that crosses the
/// same cell face twice is fanned around an extra vertex at its centroid.
TriangleMesh marching_cubes(const ScalarGrid& grid, double iso = kDefaultIso);

/// marching_cubes(pad_grid(grid, 0), iso).
TriangleMesh extract_mesh(const ScalarGrid& grid, double iso = kDefaultIso);

/// Area-weighted vertex normals. Throws if a vertex belongs to no face.
TriangleMesh vertex_normals(TriangleMesh mesh);

/// Edges used by exactly one face.
std::size_t boundary_edge_count(const TriangleMesh& mesh);

void export_mesh(const TriangleMesh& mesh, const std::filesystem::path& path);
TriangleMesh import_mesh(const std::filesystem::path& path);

}  // namespace dentocc
