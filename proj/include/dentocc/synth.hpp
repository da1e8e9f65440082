#pragma once

/**
 * Procedural synthetic teeth.
 *
 * A tooth lives in the normalized cube [-0.5,0.5]^3 with its long axis on x
 * (crown toward +x, roots toward -x), its mesiodistal width on z and its
 * buccolingual depth on y. Projections ("radiograph patches") integrate
 * occupancy along +y, so depth is hidden from the image and only recoverable
 * from the class prior.
 */

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "dentocc/conditioning.hpp"
#include "dentocc/tooth_class.hpp"

namespace dentocc {

using Vec3 = Eigen::Vector3d;
using OccupancyFn = std::function<bool(const Vec3&)>;

/// Crown: superellipsoid with its polar axis on x.
/// Inside when (|dy/ay|^(2/e2) + |dz/az|^(2/e2))^(e2/e1) + |dx/ax|^(2/e1) <= 1.
struct CrownParams {
    Vec3 center{0.0, 0.0, 0.0};
    double ax = 0.0, ay = 0.0, az = 0.0;  // semi-axes
    double e1 = 1.0, e2 = 1.0;            // squareness exponents
};

/// Root: cone from `base` toward base + (-length, apex_offset_y, apex_offset_z),
/// radius tapering linearly from base_radius to a quarter of it at the apex.
struct RootParams {
    Vec3 base{0.0, 0.0, 0.0};
    double apex_offset_y = 0.0, apex_offset_z = 0.0;
    double base_radius = 0.0;
    double length = 0.0;

    Vec3 apex() const { return base + Vec3(-length, apex_offset_y, apex_offset_z); }
};

struct ToothSpec {
    ToothClass cls{1};
    CrownParams crown;
    std::vector<RootParams> roots;
    std::uint64_t seed = 0;

    bool operator==(const ToothSpec& o) const;
};

inline constexpr double kRootApexTaper = 0.25;

/// Analytic occupancy of one tooth (union of crown and roots), 0 outside the cube.
class ToothShape {
public:
    explicit ToothShape(ToothSpec spec);

    bool contains(const Vec3& p) const;
    bool operator()(const Vec3& p) const { return contains(p); }
    const ToothSpec& spec() const { return spec_; }

private:
    ToothSpec spec_;
    Vec3 crown_lo_, crown_hi_;
    struct RootGeom {
        Vec3 base, axis;  // unit axis
        double height, r0;
        Vec3 lo, hi;
    };
    std::vector<RootGeom> roots_;
};

std::size_t expected_root_count_min(ToothFamily f);
std::size_t expected_root_count_max(ToothFamily f);

/// Deterministic per (class, seed): family defaults with every size
/// parameter jittered within +-15%.
ToothSpec generate_tooth_spec(ToothClass cls, std::uint64_t seed);
inline ToothShape generate_tooth(ToothClass cls, std::uint64_t seed) { return ToothShape(generate_tooth_spec(cls, seed)); }

/// Cell-center coordinate of index i on an axis of n cells spanning [-0.5,0.5].
inline double cell_center(std::size_t i, std::size_t n) {
    return n == 1 ? 0.0 : -0.5 + static_cast<double>(i) / static_cast<double>(n - 1);
}

using GridDims = std::array<std::size_t, 3>;
inline constexpr GridDims kToothGridDims{144, 80, 80};

/// Binary occupancy lattice whose cell centers span [-0.5,0.5] on each axis.
struct VoxelGrid {
    GridDims dims{0, 0, 0};
    std::vector<std::uint8_t> values;

    VoxelGrid() = default;
    explicit VoxelGrid(GridDims d);

    std::size_t index(std::size_t i, std::size_t j, std::size_t k) const { return (i * dims[1] + j) * dims[2] + k; }
    Vec3 center(std::size_t i, std::size_t j, std::size_t k) const {
        return {cell_center(i, dims[0]), cell_center(j, dims[1]), cell_center(k, dims[2])};
    }
    std::size_t size() const { return values.size(); }
    std::size_t count() const;
};

VoxelGrid voxelize(const OccupancyFn& oracle, GridDims dims = kToothGridDims);

/// T labelled points drawn uniformly in the unit cube. Coordinates are
/// rounded to binary32 before labelling so stored points reproduce their labels.
struct PointSampleSet {
    std::vector<float> points;         // [T,3]
    std::vector<std::uint8_t> labels;  // [T]
    std::uint64_t seed = 0;

    std::size_t size() const { return labels.size(); }
    Vec3 point(std::size_t i) const { return {points[3 * i], points[3 * i + 1], points[3 * i + 2]}; }
};

inline constexpr std::size_t kDefaultPointCount = 100000;

PointSampleSet sample_points(const OccupancyFn& oracle, std::size_t count, std::uint64_t seed);

inline constexpr std::size_t kProjectionSteps = 128;

/// Parallel projection along +y: pixel (r,c) is the fraction of `steps`
/// samples along y that are occupied, row r at x = 0.5 - (r+0.5)/rows
/// (crown on top) and column c at z = -0.5 + (c+0.5)/cols. Not normalized.
GrayImage project_occupancy(const OccupancyFn& oracle, std::size_t rows, std::size_t cols,
                            std::size_t steps = kProjectionSteps);

/// Max-normalized projection; all zero for an empty shape.
PatchImage render_patch(const OccupancyFn& oracle, std::size_t resolution = kPatchSize);

inline constexpr std::size_t kSceneRows = 256;
inline constexpr std::size_t kSceneCols = 768;
inline constexpr std::size_t kSegChannels = 33;

struct Scene {
    GrayImage px;                  // 256 x 768
    std::vector<GrayImage> seg;    // 33 channels; 0 = background

    /// Pixel box (top row, left column, side) where a tooth of this class is
    /// drawn; the left column may be negative (the box is clipped).
    static std::array<std::ptrdiff_t, 3> tooth_box(ToothClass cls);
};

/// Synthetic panoramic image plus multi-label segmentation. Teeth are laid
/// out left to right in universal-numbering order (upper jaw on top, crowns
/// toward the occlusal midline); neighbouring silhouettes may overlap.
Scene make_scene(const std::vector<ToothSpec>& specs);

// ---------------------------------------------------------------------------
// Dataset
// ---------------------------------------------------------------------------

enum class Split { train, val, test };
const char* split_name(Split s);
Split parse_split(const std::string& s);

struct SplitCounts {
    std::size_t train = 0, val = 0, test = 0;
};

/// val = round(5% of n), test = round(18% of n), train = the rest.
SplitCounts split_counts(std::size_t n);

struct DatasetOptions {
    std::vector<int> classes;  // defaults to 1..16 when empty
    std::size_t per_class = 20;
    std::size_t points = kDefaultPointCount;
    std::uint64_t seed = 0;
};

struct SampleRecord {
    std::string id;
    ToothClass cls{1};
    std::uint64_t seed = 0;
    Split split = Split::train;
};

struct ToothSample {
    SampleRecord record;
    ToothSpec spec;
    PointSampleSet points;
    PatchImage patch;
};

struct Dataset {
    DatasetOptions options;
    std::vector<ToothSample> samples;

    std::vector<const ToothSample*> split(Split s) const;
};

std::vector<int> default_classes();

/// Generates every sample in memory (deterministic in the options).
Dataset generate_dataset(const DatasetOptions& options);

/// Generates and writes `dir/manifest.json`, `dir/samples/<id>.ocdt`
/// (tensors "points" [T,3], "labels" [T], "patch" [64,64]) and
/// `dir/patches/<id>.pgm`. The manifest is written last.
Dataset dataset_build(const DatasetOptions& options, const std::filesystem::path& dir);

/// Manifest JSON text for a dataset (byte-stable).
std::string manifest_json(const Dataset& dataset);

Dataset load_dataset(const std::filesystem::path& dir);

}  // namespace dentocc
