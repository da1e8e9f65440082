#include "dentocc/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

#include "dentocc/error.hpp"
#include "dentocc/kdtree.hpp"
#include "dentocc/random.hpp"

namespace dentocc {

namespace {

void require_same_dims(const VoxelGrid& a, const VoxelGrid& b, const char* what) {
    if (a.dims != b.dims || a.values.size() != b.values.size()) throw DimensionError(std::string(what) + ": grid dimensions differ");
}

void require_samples(const SurfaceSamples& s, const char* what) {
    if (s.points.empty()) throw DomainError(std::string(what) + ": empty sample set");
}

}  // namespace

double volumetric_iou(const VoxelGrid& a, const VoxelGrid& b) {
    require_same_dims(a, b, "volumetric_iou");
    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        const bool x = a.values[i] != 0, y = b.values[i] != 0;
        inter += x && y;
        uni += x || y;
    }
    return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

double volumetric_precision(const VoxelGrid& d, const VoxelGrid& g) {
    require_same_dims(d, g, "volumetric_precision");
    std::size_t inter = 0, pred = 0;
    for (std::size_t i = 0; i < d.values.size(); ++i) {
        const bool x = d.values[i] != 0;
        pred += x;
        inter += x && g.values[i] != 0;
    }
    if (pred == 0) throw EmptyMaskError("volumetric_precision: prediction is empty");
    return static_cast<double>(inter) / static_cast<double>(pred);
}

SurfaceSamples sample_surface(const TriangleMesh& mesh, std::size_t n, std::uint64_t seed) {
    if (mesh.faces.empty()) throw DomainError("sample_surface: mesh has no faces");
    if (n == 0) throw DomainError("sample_surface: n must be at least 1");
    mesh.validate();
    std::vector<double> cumulative(mesh.faces.size());
    std::vector<Vec3> face_normals(mesh.faces.size());
    double total = 0.0;
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
        const auto& t = mesh.faces[f];
        const Vec3& a = mesh.vertices[t[0]];
        const Vec3 cross = (mesh.vertices[t[1]] - a).cross(mesh.vertices[t[2]] - a);
        const double area = 0.5 * cross.norm();
        face_normals[f] = area > 0 ? Vec3(cross / cross.norm()) : Vec3::Zero();
        total += area;
        cumulative[f] = total;
    }
    if (!(total > 0.0)) throw DomainError("sample_surface: mesh has zero area");

    Rng rng(seed);
    SurfaceSamples out;
    out.seed = seed;
    out.points.reserve(n);
    out.normals.reserve(n);
    for (std::size_t s = 0; s < n; ++s) {
        const double pick = rng.uniform() * total;
        auto it = std::upper_bound(cumulative.begin(), cumulative.end(), pick);
        auto f = static_cast<std::size_t>(it - cumulative.begin());
        if (it == cumulative.end()) {
            f = cumulative.size() - 1;
            while (face_normals[f].isZero()) --f;
        }
        const auto& t = mesh.faces[f];
        const double r1 = std::sqrt(rng.uniform());
        const double r2 = rng.uniform();
        const Vec3 p = (1.0 - r1) * mesh.vertices[t[0]] + r1 * (1.0 - r2) * mesh.vertices[t[1]] +
                       r1 * r2 * mesh.vertices[t[2]];
        out.points.push_back(p);
        out.normals.push_back(face_normals[f]);
    }
    return out;
}

namespace {

double mean_nn_distance(const SurfaceSamples& from, const KdTree& to) {
    double sum = 0.0;
    for (const auto& p : from.points) sum += to.nearest(p).distance;
    return sum / static_cast<double>(from.points.size());
}

double mean_nn_cosine(const SurfaceSamples& from, const SurfaceSamples& to, const KdTree& tree) {
    double sum = 0.0;
    for (std::size_t i = 0; i < from.points.size(); ++i) {
        sum += std::abs(from.normals[i].dot(to.normals[tree.nearest(from.points[i]).index]));
    }
    return sum / static_cast<double>(from.points.size());
}

void require_unit_normals(const SurfaceSamples& s) {
    if (s.normals.size() != s.points.size()) throw DimensionError("normal_consistency: normals do not match points");
    for (const auto& n : s.normals) {
        if (std::abs(n.norm() - 1.0) > 1e-6) throw DomainError("normal_consistency: non-unit normal");
    }
}

}  // namespace

double chamfer_l1(const SurfaceSamples& p, const SurfaceSamples& q) {
    require_samples(p, "chamfer_l1");
    require_samples(q, "chamfer_l1");
    const KdTree tp(p.points), tq(q.points);
    return 0.5 * mean_nn_distance(p, tq) + 0.5 * mean_nn_distance(q, tp);
}

double normal_consistency(const SurfaceSamples& p, const SurfaceSamples& q) {
    require_samples(p, "normal_consistency");
    require_samples(q, "normal_consistency");
    require_unit_normals(p);
    require_unit_normals(q);
    const KdTree tp(p.points), tq(q.points);
    return 0.5 * mean_nn_cosine(p, q, tq) + 0.5 * mean_nn_cosine(q, p, tp);
}

// ---------------------------------------------------------------------------

void EvalConfig::validate() const {
    for (auto d : dims) {
        if (d < 2) throw DomainError("evaluation resolution must be at least 2 per axis");
    }
    if (!(iso > 0.0 && iso < 1.0)) throw DomainError("iso must lie in (0,1)");
    if (surface_points == 0) throw DomainError("surface_points must be positive");
    if (repetitions == 0) throw DomainError("repetitions must be positive");
}

std::uint64_t EvalConfig::repetition_seed(std::size_t r) const { return derive_seed(seed, 0xE7A1 + r); }

GroundTruth make_ground_truth(const OccupancyFn& oracle, GridDims dims) {
    GroundTruth gt;
    gt.voxels = voxelize(oracle, dims);
    gt.mesh = extract_mesh(to_scalar_grid(gt.voxels), 0.5);
    return gt;
}

std::vector<ReconstructionMetrics> evaluate_grid(const ScalarGrid& prediction, const GroundTruth& truth,
                                                 const EvalConfig& config) {
    config.validate();
    const VoxelGrid pred_voxels = threshold_grid(prediction, config.iso);
    const double iou = volumetric_iou(pred_voxels, truth.voxels);
    const TriangleMesh pred_mesh = extract_mesh(prediction, config.iso);
    const bool failed = pred_mesh.empty();
    std::optional<double> precision;
    if (pred_voxels.count() > 0) precision = volumetric_precision(pred_voxels, truth.voxels);

    std::vector<ReconstructionMetrics> out;
    for (std::size_t r = 0; r < config.repetitions; ++r) {
        ReconstructionMetrics m;
        m.seed = config.repetition_seed(r);
        m.iou = iou;
        m.failed = failed;
        if (!failed) {
            m.precision = precision;
            const SurfaceSamples p = sample_surface(pred_mesh, config.surface_points, m.seed);
            const SurfaceSamples q = sample_surface(truth.mesh, config.surface_points, m.seed);
            m.chamfer = chamfer_l1(p, q);
            m.nc = normal_consistency(p, q);
        }
        out.push_back(m);
    }
    return out;
}

std::vector<ReconstructionMetrics> evaluate_reconstruction(const OccupancyNetwork& net, const Tensor& condition,
                                                           const OccupancyFn& oracle, const EvalConfig& config) {
    config.validate();
    return evaluate_grid(eval_grid(net, condition, config.dims), make_ground_truth(oracle, config.dims), config);
}

MetricSummary summarize(const std::vector<double>& runs, const std::vector<std::uint64_t>& seeds) {
    MetricSummary s;
    s.runs = runs;
    s.seeds = seeds;
    if (runs.empty()) return s;
    double sum = 0.0;
    for (double v : runs) sum += v;
    s.mean = sum / static_cast<double>(runs.size());
    double sq = 0.0;
    for (double v : runs) sq += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(sq / static_cast<double>(runs.size()));
    return s;
}

PooledMetrics pool_metrics(const std::vector<ToothEvaluation>& teeth, const EvalConfig& config) {
    PooledMetrics pooled;
    std::vector<std::uint64_t> seeds;
    std::vector<double> iou, chamfer, nc, precision;
    for (std::size_t r = 0; r < config.repetitions; ++r) {
        seeds.push_back(config.repetition_seed(r));
        double s_iou = 0, s_ch = 0, s_nc = 0, s_pr = 0;
        std::size_t n_iou = 0, n_ok = 0, n_pr = 0;
        for (const auto& t : teeth) {
            if (r >= t.runs.size()) throw DimensionError("tooth " + t.id + " has fewer runs than repetitions");
            const auto& m = t.runs[r];
            s_iou += m.iou;
            ++n_iou;
            if (m.failed) {
                ++pooled.failures;
                continue;
            }
            s_ch += *m.chamfer;
            s_nc += *m.nc;
            ++n_ok;
            if (m.precision) {
                s_pr += *m.precision;
                ++n_pr;
            }
        }
        if (n_iou) iou.push_back(s_iou / static_cast<double>(n_iou));
        if (n_ok) {
            chamfer.push_back(s_ch / static_cast<double>(n_ok));
            nc.push_back(s_nc / static_cast<double>(n_ok));
        }
        if (n_pr) precision.push_back(s_pr / static_cast<double>(n_pr));
    }
    pooled.iou = summarize(iou, seeds);
    pooled.chamfer = summarize(chamfer, seeds);
    pooled.nc = summarize(nc, seeds);
    pooled.precision = summarize(precision, seeds);
    return pooled;
}

namespace {

nlohmann::json summary_json(const MetricSummary& s) {
    if (s.runs.empty()) return nullptr;
    return {{"mean", s.mean}, {"std", s.std}, {"runs", s.runs}, {"seeds", s.seeds}};
}

nlohmann::json optional_runs(const std::vector<ReconstructionMetrics>& runs, std::optional<double> ReconstructionMetrics::*field) {
    std::vector<double> values;
    std::vector<std::uint64_t> seeds;
    for (const auto& m : runs) {
        if ((m.*field).has_value()) {
            values.push_back(*(m.*field));
            seeds.push_back(m.seed);
        }
    }
    return summary_json(summarize(values, seeds));
}

}  // namespace

std::string metrics_report_json(const std::vector<ToothEvaluation>& teeth, const EvalConfig& config) {
    const PooledMetrics pooled = pool_metrics(teeth, config);
    nlohmann::json j;
    j["config"] = {{"resolution", config.dims},
                   {"iso", config.iso},
                   {"surface_points", config.surface_points},
                   {"repetitions", config.repetitions},
                   {"seed", config.seed}};
    j["pooling"] = "per repetition, metrics averaged over teeth (failed teeth contribute iou only); mean/std across repetitions";
    j["failures"] = pooled.failures;
    j["pooled"] = {{"iou", summary_json(pooled.iou)},
                   {"chamfer_l1", summary_json(pooled.chamfer)},
                   {"normal_consistency", summary_json(pooled.nc)},
                   {"precision", summary_json(pooled.precision)}};
    nlohmann::json per_tooth = nlohmann::json::array();
    for (const auto& t : teeth) {
        std::vector<double> iou;
        std::vector<std::uint64_t> seeds;
        std::size_t failed = 0;
        for (const auto& m : t.runs) {
            iou.push_back(m.iou);
            seeds.push_back(m.seed);
            failed += m.failed;
        }
        per_tooth.push_back({{"id", t.id},
                             {"class", t.cls},
                             {"failed_runs", failed},
                             {"iou", summary_json(summarize(iou, seeds))},
                             {"chamfer_l1", optional_runs(t.runs, &ReconstructionMetrics::chamfer)},
                             {"normal_consistency", optional_runs(t.runs, &ReconstructionMetrics::nc)},
                             {"precision", optional_runs(t.runs, &ReconstructionMetrics::precision)}});
    }
    j["teeth"] = std::move(per_tooth);
    return j.dump(2) + "\n";
}

}  // namespace dentocc
