#include "dentocc/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "dentocc/checkpoint.hpp"
#include "dentocc/error.hpp"
#include "dentocc/random.hpp"

namespace dentocc {

namespace {

// Nominal anatomy per (jaw, position from the back of the arch).
// Position 1 = third molar ... 8 = central incisor.
struct RootTemplate {
    double y, z;          // base offset from the crown axis
    double apex_y, apex_z;
    double radius;
    double length;
};

struct ToothTemplate {
    double ax, ay, az, e1, e2;
    std::vector<RootTemplate> roots;
};

ToothTemplate tooth_template(bool upper, int position) {
    if (upper) {
        switch (position) {
            case 1: return {0.14, 0.26, 0.26, 0.50, 0.60,
                            {{-0.08, -0.08, 0.01, 0.02, 0.08, 0.42}, {-0.08, 0.08, 0.01, -0.02, 0.08, 0.42},
                             {0.11, 0.0, -0.02, 0.0, 0.09, 0.42}}};
            case 2: return {0.15, 0.28, 0.28, 0.45, 0.55,
                            {{-0.10, -0.10, -0.02, -0.03, 0.085, 0.48}, {-0.10, 0.10, -0.02, 0.03, 0.085, 0.48},
                             {0.13, 0.0, 0.04, 0.0, 0.10, 0.48}}};
            case 3: return {0.16, 0.30, 0.30, 0.45, 0.55,
                            {{-0.11, -0.12, -0.03, -0.05, 0.09, 0.50}, {-0.11, 0.12, -0.03, 0.05, 0.09, 0.50},
                             {0.14, 0.0, 0.06, 0.0, 0.11, 0.50}}};
            case 4: return {0.16, 0.25, 0.18, 0.60, 0.80, {{0.0, 0.0, 0.0, 0.0, 0.11, 0.52}}};
            case 5: return {0.16, 0.26, 0.18, 0.60, 0.80,
                            {{-0.08, 0.0, -0.04, 0.0, 0.08, 0.50}, {0.08, 0.0, 0.04, 0.0, 0.08, 0.50}}};
            case 6: return {0.20, 0.20, 0.16, 1.00, 0.90, {{0.0, 0.0, 0.0, 0.0, 0.11, 0.60}}};
            case 7: return {0.19, 0.12, 0.16, 0.80, 0.70, {{0.0, 0.0, 0.0, 0.0, 0.075, 0.50}}};
            default: return {0.21, 0.13, 0.21, 0.80, 0.70, {{0.0, 0.0, 0.0, 0.0, 0.085, 0.52}}};
        }
    }
    switch (position) {
        case 1: return {0.14, 0.25, 0.28, 0.50, 0.60,
                        {{0.0, -0.07, 0.0, 0.02, 0.09, 0.44}, {0.0, 0.07, 0.0, -0.02, 0.09, 0.44}}};
        case 2: return {0.15, 0.26, 0.30, 0.45, 0.55,
                        {{0.0, -0.11, 0.0, -0.02, 0.095, 0.48}, {0.0, 0.11, 0.0, 0.02, 0.095, 0.48}}};
        case 3: return {0.16, 0.27, 0.32, 0.45, 0.55,
                        {{0.0, -0.13, 0.0, -0.04, 0.10, 0.50}, {0.0, 0.13, 0.0, 0.04, 0.10, 0.50}}};
        case 4: return {0.16, 0.23, 0.18, 0.65, 0.80, {{0.0, 0.0, 0.0, 0.0, 0.105, 0.52}}};
        case 5: return {0.16, 0.21, 0.17, 0.75, 0.85, {{0.0, 0.0, 0.0, 0.0, 0.10, 0.52}}};
        case 6: return {0.19, 0.18, 0.14, 1.00, 0.90, {{0.0, 0.0, 0.0, 0.0, 0.10, 0.58}}};
        case 7: return {0.18, 0.11, 0.13, 0.80, 0.70, {{0.0, 0.0, 0.0, 0.0, 0.07, 0.48}}};
        default: return {0.18, 0.11, 0.12, 0.80, 0.70, {{0.0, 0.0, 0.0, 0.0, 0.065, 0.46}}};
    }
}

int arch_position(ToothClass cls) {
    const int pos = cls.upper() ? cls.index() : 33 - cls.index();
    return pos <= 8 ? pos : 17 - pos;
}

constexpr double kJitter = 0.15;
constexpr double kCubeMargin = 0.47;

double superellipsoid_value(const CrownParams& c, const Vec3& p) {
    const double dx = std::abs(p.x() - c.center.x()) / c.ax;
    const double dy = std::abs(p.y() - c.center.y()) / c.ay;
    const double dz = std::abs(p.z() - c.center.z()) / c.az;
    const double ring = std::pow(std::pow(dy, 2.0 / c.e2) + std::pow(dz, 2.0 / c.e2), c.e2 / c.e1);
    return ring + std::pow(dx, 2.0 / c.e1);
}

}  // namespace

bool ToothSpec::operator==(const ToothSpec& o) const {
    auto same_crown = crown.center == o.crown.center && crown.ax == o.crown.ax && crown.ay == o.crown.ay &&
                      crown.az == o.crown.az && crown.e1 == o.crown.e1 && crown.e2 == o.crown.e2;
    if (cls != o.cls || seed != o.seed || !same_crown || roots.size() != o.roots.size()) return false;
    for (std::size_t i = 0; i < roots.size(); ++i) {
        const auto& a = roots[i];
        const auto& b = o.roots[i];
        if (a.base != b.base || a.apex_offset_y != b.apex_offset_y || a.apex_offset_z != b.apex_offset_z ||
            a.base_radius != b.base_radius || a.length != b.length) {
            return false;
        }
    }
    return true;
}

std::size_t expected_root_count_min(ToothFamily f) { return f == ToothFamily::molar ? 2 : 1; }

std::size_t expected_root_count_max(ToothFamily f) {
    switch (f) {
        case ToothFamily::molar: return 3;
        case ToothFamily::premolar: return 2;
        default: return 1;
    }
}

ToothSpec generate_tooth_spec(ToothClass cls, std::uint64_t seed) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(cls.index())));
    auto jitter = [&](double v) { return v * rng.uniform(1.0 - kJitter, 1.0 + kJitter); };
    const ToothTemplate t = tooth_template(cls.upper(), arch_position(cls));

    ToothSpec spec;
    spec.cls = cls;
    spec.seed = seed;
    auto& c = spec.crown;
    c.ax = jitter(t.ax);
    c.ay = jitter(t.ay);
    c.az = jitter(t.az);
    c.e1 = jitter(t.e1);
    c.e2 = jitter(t.e2);
    c.center = Vec3(kCubeMargin - c.ax, 0.0, 0.0);

    const double base_x = c.center.x() - 0.55 * c.ax;
    for (const auto& r : t.roots) {
        RootParams root;
        root.base = Vec3(base_x, jitter(r.y), jitter(r.z));
        root.apex_offset_y = jitter(r.apex_y);
        root.apex_offset_z = jitter(r.apex_z);
        root.base_radius = jitter(r.radius);
        root.length = std::min(jitter(r.length), base_x + kCubeMargin);
        spec.roots.push_back(root);
    }
    return spec;
}

ToothShape::ToothShape(ToothSpec spec) : spec_(std::move(spec)) {
    const auto& c = spec_.crown;
    if (c.ax <= 0 || c.ay <= 0 || c.az <= 0 || c.e1 <= 0 || c.e2 <= 0) throw DomainError("crown parameters must be positive");
    const Vec3 half(c.ax, c.ay, c.az);
    crown_lo_ = c.center - half;
    crown_hi_ = c.center + half;
    for (const auto& r : spec_.roots) {
        const Vec3 apex = r.apex();
        const Vec3 d = apex - r.base;
        const double h = d.norm();
        if (h <= 0 || r.base_radius <= 0) throw DomainError("root cone needs positive length and radius");
        const Vec3 pad = Vec3::Constant(r.base_radius);
        roots_.push_back({r.base, d / h, h, r.base_radius, r.base.cwiseMin(apex) - pad, r.base.cwiseMax(apex) + pad});
    }
}

bool ToothShape::contains(const Vec3& p) const {
    if (std::abs(p.x()) > 0.5 || std::abs(p.y()) > 0.5 || std::abs(p.z()) > 0.5) return false;
    if ((p.array() >= crown_lo_.array()).all() && (p.array() <= crown_hi_.array()).all() &&
        superellipsoid_value(spec_.crown, p) <= 1.0) {
        return true;
    }
    for (const auto& r : roots_) {
        if ((p.array() < r.lo.array()).any() || (p.array() > r.hi.array()).any()) continue;
        const Vec3 rel = p - r.base;
        const double s = rel.dot(r.axis);
        if (s < 0.0 || s > r.height) continue;
        const double radius = r.r0 * (1.0 - (1.0 - kRootApexTaper) * s / r.height);
        if (rel.squaredNorm() - s * s <= radius * radius) return true;
    }
    return false;
}

// ---------------------------------------------------------------------------

VoxelGrid::VoxelGrid(GridDims d) : dims(d), values(d[0] * d[1] * d[2], 0) {
    if (d[0] == 0 || d[1] == 0 || d[2] == 0) throw DimensionError("voxel grid dimensions must be positive");
}

std::size_t VoxelGrid::count() const { return static_cast<std::size_t>(std::count(values.begin(), values.end(), 1)); }

VoxelGrid voxelize(const OccupancyFn& oracle, GridDims dims) {
    VoxelGrid grid(dims);
    for (std::size_t i = 0; i < dims[0]; ++i)
        for (std::size_t j = 0; j < dims[1]; ++j)
            for (std::size_t k = 0; k < dims[2]; ++k) grid.values[grid.index(i, j, k)] = oracle(grid.center(i, j, k)) ? 1 : 0;
    return grid;
}

PointSampleSet sample_points(const OccupancyFn& oracle, std::size_t count, std::uint64_t seed) {
    if (count == 0) throw DomainError("sample_points: T must be at least 1");
    Rng rng(seed);
    PointSampleSet set;
    set.seed = seed;
    set.points.resize(3 * count);
    set.labels.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        for (std::size_t a = 0; a < 3; ++a) {
            // Round toward zero after the float cast so the cube bound still holds.
            float v = static_cast<float>(rng.uniform(-0.5, 0.5));
            set.points[3 * i + a] = std::clamp(v, -0.5f, 0.5f);
        }
        set.labels[i] = oracle(set.point(i)) ? 1 : 0;
    }
    return set;
}

GrayImage project_occupancy(const OccupancyFn& oracle, std::size_t rows, std::size_t cols, std::size_t steps) {
    GrayImage image(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        const double x = 0.5 - (static_cast<double>(r) + 0.5) / static_cast<double>(rows);
        for (std::size_t c = 0; c < cols; ++c) {
            const double z = -0.5 + (static_cast<double>(c) + 0.5) / static_cast<double>(cols);
            std::size_t hits = 0;
            for (std::size_t s = 0; s < steps; ++s) {
                const double y = -0.5 + (static_cast<double>(s) + 0.5) / static_cast<double>(steps);
                if (oracle(Vec3(x, y, z))) ++hits;
            }
            image.at(r, c) = static_cast<double>(hits) / static_cast<double>(steps);
        }
    }
    return image;
}

PatchImage render_patch(const OccupancyFn& oracle, std::size_t resolution) {
    GrayImage image = project_occupancy(oracle, resolution, resolution);
    const double peak = *std::max_element(image.pixels.begin(), image.pixels.end());
    if (peak > 0.0) {
        for (auto& v : image.pixels) v /= peak;
    }
    return image;
}

// ---------------------------------------------------------------------------

namespace {

constexpr std::size_t kSceneBox = 112;
constexpr std::size_t kSceneSteps = 64;
constexpr std::size_t kSlotsPerJaw = 16;

}  // namespace

std::array<std::ptrdiff_t, 3> Scene::tooth_box(ToothClass cls) {
    const int slot = cls.upper() ? cls.index() - 1 : 32 - cls.index();
    const double slot_width = static_cast<double>(kSceneCols) / static_cast<double>(kSlotsPerJaw);
    const auto center = static_cast<std::ptrdiff_t>((slot + 0.5) * slot_width);
    const std::ptrdiff_t top = cls.upper() ? 8 : static_cast<std::ptrdiff_t>(kSceneRows / 2 + 8);
    return {top, center - static_cast<std::ptrdiff_t>(kSceneBox / 2), static_cast<std::ptrdiff_t>(kSceneBox)};
}

Scene make_scene(const std::vector<ToothSpec>& specs) {
    Scene scene;
    scene.px = GrayImage(kSceneRows, kSceneCols);
    scene.seg.assign(kSegChannels, GrayImage(kSceneRows, kSceneCols));
    std::vector<bool> seen(kSegChannels, false);
    for (const auto& spec : specs) {
        if (seen[static_cast<std::size_t>(spec.cls.index())]) {
            throw DomainError("make_scene: duplicate tooth class " + std::to_string(spec.cls.index()));
        }
        seen[static_cast<std::size_t>(spec.cls.index())] = true;
    }
    for (const auto& spec : specs) {
        const ToothShape shape(spec);
        const GrayImage proj = project_occupancy(shape, kSceneBox, kSceneBox, kSceneSteps);
        const auto [top, left, side] = Scene::tooth_box(spec.cls);
        auto& channel = scene.seg[static_cast<std::size_t>(spec.cls.index())];
        for (std::ptrdiff_t r = 0; r < side; ++r) {
            // Upper teeth hang crown-down toward the occlusal midline.
            const auto src_r = static_cast<std::size_t>(spec.cls.upper() ? side - 1 - r : r);
            for (std::ptrdiff_t c = 0; c < side; ++c) {
                const std::ptrdiff_t y = top + r, x = left + c;
                if (y < 0 || x < 0 || y >= static_cast<std::ptrdiff_t>(kSceneRows) ||
                    x >= static_cast<std::ptrdiff_t>(kSceneCols)) {
                    continue;
                }
                const double v = proj.at(src_r, static_cast<std::size_t>(c));
                if (v <= 0.0) continue;
                scene.px.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x)) += v;
                channel.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x)) = 1.0;
            }
        }
    }
    const double peak = *std::max_element(scene.px.pixels.begin(), scene.px.pixels.end());
    if (peak > 0.0) {
        for (auto& v : scene.px.pixels) v /= peak;
    }
    auto& background = scene.seg[0];
    for (std::size_t i = 0; i < background.pixels.size(); ++i) {
        bool any = false;
        for (std::size_t ch = 1; ch < kSegChannels && !any; ++ch) any = scene.seg[ch].pixels[i] > 0.0;
        background.pixels[i] = any ? 0.0 : 1.0;
    }
    return scene;
}

// ---------------------------------------------------------------------------
// Dataset
// ---------------------------------------------------------------------------

const char* split_name(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::val: return "val";
        case Split::test: return "test";
    }
    return "?";
}

Split parse_split(const std::string& s) {
    if (s == "train") return Split::train;
    if (s == "val") return Split::val;
    if (s == "test") return Split::test;
    throw DomainError("unknown split '" + s + "'");
}

SplitCounts split_counts(std::size_t n) {
    SplitCounts counts;
    counts.val = static_cast<std::size_t>(std::llround(0.05 * static_cast<double>(n)));
    counts.test = static_cast<std::size_t>(std::llround(0.18 * static_cast<double>(n)));
    if (counts.val + counts.test > n) counts.test = n - counts.val;
    counts.train = n - counts.val - counts.test;
    return counts;
}

std::vector<int> default_classes() {
    std::vector<int> c(16);
    for (int i = 0; i < 16; ++i) c[static_cast<std::size_t>(i)] = i + 1;
    return c;
}

std::vector<const ToothSample*> Dataset::split(Split s) const {
    std::vector<const ToothSample*> out;
    for (const auto& sample : samples) {
        if (sample.record.split == s) out.push_back(&sample);
    }
    return out;
}

namespace {

std::string sample_id(int cls, std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "t%02d_%03zu", cls, i);
    return buf;
}

DatasetOptions normalized(DatasetOptions o) {
    if (o.classes.empty()) o.classes = default_classes();
    if (o.per_class == 0) throw DomainError("per_class must be at least 1");
    if (o.points == 0) throw DomainError("points per sample must be at least 1");
    std::vector<int> sorted = o.classes;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) throw DomainError("duplicate class in dataset");
    for (int c : o.classes) (void)ToothClass(c);
    return o;
}

std::vector<SampleRecord> plan_records(const DatasetOptions& o) {
    std::vector<SampleRecord> records;
    for (int c : o.classes) {
        for (std::size_t i = 0; i < o.per_class; ++i) {
            const std::uint64_t s = derive_seed(o.seed, static_cast<std::uint64_t>(c) * 100000ULL + i);
            records.push_back({sample_id(c, i), ToothClass(c), s, Split::train});
        }
    }
    std::vector<std::size_t> order(records.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(derive_seed(o.seed, 0x5EED5EEDULL));
    rng.shuffle(order.begin(), order.end());
    const SplitCounts counts = split_counts(records.size());
    for (std::size_t k = 0; k < order.size(); ++k) {
        Split s = Split::train;
        if (k < counts.val) s = Split::val;
        else if (k < counts.val + counts.test) s = Split::test;
        records[order[k]].split = s;
    }
    return records;
}

ToothSample make_sample(const SampleRecord& record, std::size_t points) {
    ToothSample sample{record, generate_tooth_spec(record.cls, record.seed), {}, {}};
    const ToothShape shape(sample.spec);
    sample.points = sample_points(shape, points, derive_seed(record.seed, 1));
    sample.patch = render_patch(shape);
    return sample;
}

}  // namespace

Dataset generate_dataset(const DatasetOptions& options) {
    Dataset ds;
    ds.options = normalized(options);
    for (const auto& record : plan_records(ds.options)) ds.samples.push_back(make_sample(record, ds.options.points));
    return ds;
}

std::string manifest_json(const Dataset& dataset) {
    nlohmann::json j;
    j["format"] = "dentocc-dataset";
    j["version"] = 1;
    j["seed"] = dataset.options.seed;
    j["per_class"] = dataset.options.per_class;
    j["points_per_sample"] = dataset.options.points;
    j["classes"] = dataset.options.classes;
    j["split_policy"] = "seeded shuffle of all samples; val = round(0.05 n), test = round(0.18 n), train = remainder";
    const SplitCounts counts = split_counts(dataset.samples.size());
    j["split_counts"] = {{"train", counts.train}, {"val", counts.val}, {"test", counts.test}};
    nlohmann::json samples = nlohmann::json::array();
    for (const auto& s : dataset.samples) {
        samples.push_back({{"id", s.record.id},
                           {"class", s.record.cls.index()},
                           {"family", family_name(family_of(s.record.cls))},
                           {"seed", s.record.seed},
                           {"split", split_name(s.record.split)},
                           {"tensors", "samples/" + s.record.id + ".ocdt"},
                           {"patch", "patches/" + s.record.id + ".pgm"}});
    }
    j["samples"] = std::move(samples);
    return j.dump(2) + "\n";
}

Dataset dataset_build(const DatasetOptions& options, const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    Dataset ds;
    ds.options = normalized(options);
    const auto records = plan_records(ds.options);
    std::error_code ec;
    fs::create_directories(dir / "samples", ec);
    if (ec) throw IoError("cannot create " + (dir / "samples").string() + ": " + ec.message());
    fs::create_directories(dir / "patches", ec);
    if (ec) throw IoError("cannot create " + (dir / "patches").string() + ": " + ec.message());

    for (const auto& record : records) {
        ToothSample sample = make_sample(record, ds.options.points);
        TensorArchive archive;
        const std::size_t t = sample.points.size();
        archive.add(StoredTensor("points", {t, 3}, sample.points.points));
        std::vector<float> labels(sample.points.labels.begin(), sample.points.labels.end());
        archive.add(StoredTensor("labels", {t}, std::move(labels)));
        archive.add("patch", {kPatchSize, kPatchSize}, sample.patch.pixels);
        archive.save(dir / "samples" / (record.id + ".ocdt"));
        write_pgm(sample.patch, dir / "patches" / (record.id + ".pgm"));
        ds.samples.push_back(std::move(sample));
    }

    const auto manifest = dir / "manifest.json";
    auto tmp = manifest;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + tmp.string());
        out << manifest_json(ds);
        if (!out) throw IoError("short write to " + tmp.string());
    }
    fs::rename(tmp, manifest, ec);
    if (ec) throw IoError("cannot move manifest into place: " + ec.message());
    return ds;
}

Dataset load_dataset(const std::filesystem::path& dir) {
    const auto manifest_path = dir / "manifest.json";
    std::ifstream in(manifest_path);
    if (!in) throw IoError("no dataset manifest at " + manifest_path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(manifest_path.string() + ": " + e.what(), 0);
    }
    Dataset ds;
    try {
        ds.options.seed = j.at("seed").get<std::uint64_t>();
        ds.options.per_class = j.at("per_class").get<std::size_t>();
        ds.options.points = j.at("points_per_sample").get<std::size_t>();
        ds.options.classes = j.at("classes").get<std::vector<int>>();
        for (const auto& e : j.at("samples")) {
            SampleRecord record{e.at("id").get<std::string>(), ToothClass(e.at("class").get<int>()),
                                e.at("seed").get<std::uint64_t>(), parse_split(e.at("split").get<std::string>())};
            const auto archive = TensorArchive::load(dir / e.at("tensors").get<std::string>());
            ToothSample sample{record, generate_tooth_spec(record.cls, record.seed), {}, {}};
            sample.points.seed = derive_seed(record.seed, 1);
            sample.points.points = archive.at("points").values;
            const auto& labels = archive.at("labels").values;
            sample.points.labels.assign(labels.begin(), labels.end());
            if (sample.points.points.size() != 3 * sample.points.labels.size()) {
                throw FormatError("sample " + record.id + ": points and labels disagree in length");
            }
            sample.patch = GrayImage(kPatchSize, kPatchSize);
            sample.patch.pixels = archive.at("patch").to_doubles();
            ds.samples.push_back(std::move(sample));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(manifest_path.string() + ": " + e.what(), 0);
    }
    return ds;
}

}  // namespace dentocc
