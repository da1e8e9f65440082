#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dentocc/meshing.hpp"

namespace dentocc {

struct SurfaceSamples {
    std::vector<Vec3> points;
    std::vector<Vec3> normals;  // unit, inherited from the source face
    std::uint64_t seed = 0;

    std::size_t size() const { return points.size(); }
};

/// |A ∩ B| / |A ∪ B|; 1 when both are empty.
double volumetric_iou(const VoxelGrid& a, const VoxelGrid& b);

/// |D ∩ G| / |D|; throws EmptyMaskError when D is empty.
double volumetric_precision(const VoxelGrid& d, const VoxelGrid& g);

/// Area-proportional face choice, uniform barycentric position within the face.
SurfaceSamples sample_surface(const TriangleMesh& mesh, std::size_t n, std::uint64_t seed);

/// Half the mean nearest-neighbour distance P->Q plus half of Q->P.
double chamfer_l1(const SurfaceSamples& p, const SurfaceSamples& q);

/// Symmetric mean |n_p . n_nn(p)| over nearest neighbours.
double normal_consistency(const SurfaceSamples& p, const SurfaceSamples& q);

struct EvalConfig {
    GridDims dims = kExtractionDims;
    double iso = kDefaultIso;
    std::size_t surface_points = 100000;
    std::size_t repetitions = 10;
    std::uint64_t seed = 0;

    void validate() const;
    /// Seed of repetition r.
    std::uint64_t repetition_seed(std::size_t r) const;
};

struct ReconstructionMetrics {
    bool failed = false;  // empty predicted mesh
    double iou = 0.0;
    std::optional<double> precision, chamfer, nc;
    std::uint64_t seed = 0;
};

struct GroundTruth {
    VoxelGrid voxels;
    TriangleMesh mesh;
};

/// Oracle voxelization at `dims` and its marching-cubes surface.
GroundTruth make_ground_truth(const OccupancyFn& oracle, GridDims dims);

/// One entry per repetition. Only the surface sampling depends on the
/// repetition seed; both meshes are sampled with the same seed.
std::vector<ReconstructionMetrics> evaluate_grid(const ScalarGrid& prediction, const GroundTruth& truth,
                                                 const EvalConfig& config);

std::vector<ReconstructionMetrics> evaluate_reconstruction(const OccupancyNetwork& net, const Tensor& condition,
                                                           const OccupancyFn& oracle, const EvalConfig& config);

struct MetricSummary {
    double mean = 0.0;
    double std = 0.0;  // population standard deviation over runs
    std::vector<double> runs;
    std::vector<std::uint64_t> seeds;
};

MetricSummary summarize(const std::vector<double>& runs, const std::vector<std::uint64_t>& seeds);

struct ToothEvaluation {
    std::string id;
    int cls = 0;
    std::vector<ReconstructionMetrics> runs;
};

/// Per repetition, each metric is averaged over the teeth that produced it
/// (failed teeth contribute IoU only); mean and std are then taken across repetitions.
struct PooledMetrics {
    MetricSummary iou, chamfer, nc, precision;
    std::size_t failures = 0;  // failed (tooth, repetition) pairs
};

PooledMetrics pool_metrics(const std::vector<ToothEvaluation>& teeth, const EvalConfig& config);

/// {"pooled": {metric: {mean, std, runs, seeds}}, "teeth": [...], ...} as JSON text.
std::string metrics_report_json(const std::vector<ToothEvaluation>& teeth, const EvalConfig& config);

}  // namespace dentocc
