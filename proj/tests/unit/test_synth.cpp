#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "doctest.h"

#include "dentocc/error.hpp"
#include "dentocc/metrics.hpp"
#include "dentocc/random.hpp"
#include "dentocc/synth.hpp"

using namespace dentocc;
namespace fs = std::filesystem;

namespace {

const double kSphereVolume = 4.0 / 3.0 * std::numbers::pi * 0.027;  // radius 0.3

bool sphere(const Vec3& p) { return p.norm() <= 0.3; }
bool nothing(const Vec3&) { return false; }
bool full_cube(const Vec3& p) { return p.cwiseAbs().maxCoeff() <= 0.5; }

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("dentocc_unit_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_SUITE("synth") {

TEST_CASE("generate_tooth is deterministic per class and seed") {
    for (int cls : {1, 3, 8, 14, 19, 30}) {
        CHECK(generate_tooth_spec(ToothClass(cls), 42) == generate_tooth_spec(ToothClass(cls), 42));
        CHECK_FALSE(generate_tooth_spec(ToothClass(cls), 42) == generate_tooth_spec(ToothClass(cls), 43));
    }
}

TEST_CASE("root counts follow the class family for every class") {
    for (int cls = 1; cls <= 32; ++cls) {
        const auto fam = family_of(ToothClass(cls));
        for (std::uint64_t seed = 0; seed < 25; ++seed) {
            const auto spec = generate_tooth_spec(ToothClass(cls), seed);
            CAPTURE(cls);
            CAPTURE(seed);
            const std::size_t n = spec.roots.size();
            CHECK(n >= expected_root_count_min(fam));
            CHECK(n <= expected_root_count_max(fam));
            if (fam == ToothFamily::incisor || fam == ToothFamily::canine) CHECK(n == 1);
            if (fam == ToothFamily::premolar) CHECK((n == 1 || n == 2));
            if (fam == ToothFamily::molar) CHECK((n == 2 || n == 3));
        }
    }
}

TEST_CASE("tooth geometry fits inside the cube") {
    for (int cls = 1; cls <= 32; ++cls) {
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            const auto spec = generate_tooth_spec(ToothClass(cls), seed);
            const auto& c = spec.crown;
            CHECK(c.center.x() + c.ax <= 0.5);
            CHECK(c.center.x() - c.ax >= -0.5);
            CHECK(std::abs(c.center.y()) + c.ay <= 0.5);
            CHECK(std::abs(c.center.z()) + c.az <= 0.5);
            for (const auto& r : spec.roots) {
                const Vec3 apex = r.apex();
                CHECK(apex.cwiseAbs().maxCoeff() <= 0.5);
                CHECK(std::abs(r.base.y()) + r.base_radius <= 0.5);
                CHECK(std::abs(r.base.z()) + r.base_radius <= 0.5);
            }
        }
    }
}

TEST_CASE("oracle: crown center inside, far corner and outside-cube points outside") {
    for (int cls : {1, 3, 6, 8, 12, 17, 24, 31}) {
        const ToothShape shape = generate_tooth(ToothClass(cls), 7);
        CHECK(shape.contains(shape.spec().crown.center));
        CHECK_FALSE(shape.contains(Vec3(0.49, 0.49, 0.49)));
        CHECK_FALSE(shape.contains(Vec3(0.6, 0.0, 0.0)));
        for (const auto& r : shape.spec().roots) CHECK(shape.contains(r.base + 0.3 * (r.apex() - r.base)));
    }
}

TEST_CASE("superellipsoid inside-test matches its closed form") {
    ToothSpec spec;
    spec.crown.center = Vec3(0.1, 0.0, 0.0);
    spec.crown.ax = 0.2;
    spec.crown.ay = 0.15;
    spec.crown.az = 0.1;
    spec.crown.e1 = 0.6;
    spec.crown.e2 = 0.8;
    const ToothShape shape(spec);
    Rng rng(3);
    for (int i = 0; i < 2000; ++i) {
        const Vec3 p(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5));
        const Vec3 d = p - spec.crown.center;
        const double e1 = 0.6, e2 = 0.8;
        const double radial = std::pow(std::pow(std::abs(d.y() / 0.15), 2 / e2) + std::pow(std::abs(d.z() / 0.1), 2 / e2), e2 / e1);
        const double f = radial + std::pow(std::abs(d.x() / 0.2), 2 / e1);
        if (std::abs(f - 1.0) > 1e-9) CHECK(shape.contains(p) == (f <= 1.0));
    }
}

TEST_CASE("voxelize") {
    const VoxelGrid empty = voxelize(nothing, {8, 6, 4});
    CHECK(empty.count() == 0);
    CHECK(empty.size() == 192);

    const VoxelGrid s = voxelize(sphere, {128, 128, 128});
    const double frac = static_cast<double>(s.count()) / static_cast<double>(s.size());
    CHECK(std::abs(frac - kSphereVolume) < 0.05 * kSphereVolume);

    const ToothShape tooth = generate_tooth(ToothClass(3), 1);
    const VoxelGrid g = voxelize(tooth, {20, 12, 12});
    Rng rng(1);
    for (int k = 0; k < 200; ++k) {
        const std::size_t i = rng.below(20), j = rng.below(12), l = rng.below(12);
        CHECK(g.values[g.index(i, j, l)] == (tooth.contains(g.center(i, j, l)) ? 1 : 0));
    }
    CHECK(g.center(0, 0, 0) == Vec3(-0.5, -0.5, -0.5));
    CHECK(g.center(19, 11, 11) == Vec3(0.5, 0.5, 0.5));
    CHECK_THROWS_AS(VoxelGrid({0, 1, 1}), DimensionError);
}

TEST_CASE("voxel grid agrees with dense oracle evaluation") {
    const ToothShape tooth = generate_tooth(ToothClass(19), 5);
    VoxelGrid dense({36, 20, 20});
    for (std::size_t i = 0; i < 36; ++i)
        for (std::size_t j = 0; j < 20; ++j)
            for (std::size_t k = 0; k < 20; ++k) dense.values[dense.index(i, j, k)] = tooth(dense.center(i, j, k));
    CHECK(volumetric_iou(voxelize(tooth, {36, 20, 20}), dense) == 1.0);
}

TEST_CASE("sample_points") {
    const auto e = sample_points(nothing, 500, 1);
    for (auto l : e.labels) CHECK(l == 0);

    const auto s = sample_points(sphere, 100000, 9);
    double pos = 0;
    for (auto l : s.labels) pos += l;
    const double frac = pos / 100000.0;
    const double se = std::sqrt(kSphereVolume * (1 - kSphereVolume) / 100000.0);
    CHECK(std::abs(frac - kSphereVolume) < 3 * se);

    const auto again = sample_points(sphere, 100000, 9);
    CHECK(again.points == s.points);
    CHECK(sample_points(sphere, 10, 10).points != sample_points(sphere, 10, 11).points);
    for (float v : s.points) CHECK(std::abs(v) <= 0.5f);
    CHECK_THROWS_AS(sample_points(sphere, 0, 1), DomainError);
}

TEST_CASE("stored labels are reproduced by the oracle") {
    for (int cls : {2, 7, 13, 20}) {
        const ToothShape tooth = generate_tooth(ToothClass(cls), 3);
        const auto set = sample_points(tooth, 20000, 4);
        std::size_t mismatches = 0;
        for (std::size_t i = 0; i < set.size(); ++i) mismatches += (tooth(set.point(i)) ? 1 : 0) != set.labels[i];
        CHECK(mismatches == 0);
    }
}

TEST_CASE("render_patch") {
    for (double v : render_patch(nothing).pixels) CHECK(v == 0.0);
    for (double v : render_patch(full_cube).pixels) CHECK(v == 1.0);

    const PatchImage p = render_patch(sphere);
    // The longest chords pass through the center; chords shrink outward.
    CHECK(p.at(31, 31) == 1.0);
    CHECK(p.at(32, 32) == 1.0);
    for (std::size_t c = 32; c + 1 < 64; ++c) CHECK(p.at(32, c + 1) <= p.at(32, c));
    for (std::size_t r = 31; r > 0; --r) CHECK(p.at(r - 1, 31) <= p.at(r, 31));
    for (std::size_t r = 0; r < 64; ++r) {
        for (std::size_t c = 0; c < 64; ++c) {
            const double x = 0.5 - (r + 0.5) / 64.0, z = -0.5 + (c + 0.5) / 64.0;
            if (x * x + z * z > 0.09) CHECK(p.at(r, c) == 0.0);
        }
    }
}

TEST_CASE("tooth patch shows the crown on top") {
    const PatchImage p = render_patch(generate_tooth(ToothClass(3), 2));
    double top = 0, bottom = 0;
    for (std::size_t c = 0; c < 64; ++c) {
        for (std::size_t r = 0; r < 16; ++r) top += p.at(r, c);
        for (std::size_t r = 48; r < 64; ++r) bottom += p.at(r, c);
    }
    CHECK(top > bottom);
}

TEST_CASE("make_scene") {
    const Scene empty = make_scene({});
    CHECK(empty.px.rows == 256);
    CHECK(empty.px.cols == 768);
    CHECK(empty.seg.size() == 33);
    for (double v : empty.px.pixels) CHECK(v == 0.0);
    for (double v : empty.seg[0].pixels) CHECK(v == 1.0);

    const auto spec = generate_tooth_spec(ToothClass(8), 1);
    const Scene one = make_scene({spec});
    std::size_t silhouette = 0;
    for (std::size_t i = 0; i < one.px.pixels.size(); ++i) {
        const bool lit = one.px.pixels[i] > 0.0;
        CHECK((one.seg[8].pixels[i] == 1.0) == lit);
        CHECK(one.seg[0].pixels[i] == (lit ? 0.0 : 1.0));
        silhouette += lit;
        for (std::size_t ch = 1; ch < 33; ++ch)
            if (ch != 8) CHECK(one.seg[ch].pixels[i] == 0.0);
    }
    const GrayImage proj = project_occupancy(ToothShape(spec), 112, 112, 64);
    std::size_t expect = 0;
    for (double v : proj.pixels) expect += v > 0.0;
    CHECK(silhouette == expect);

    const Scene two = make_scene({generate_tooth_spec(ToothClass(8), 1), generate_tooth_spec(ToothClass(9), 1)});
    std::size_t both = 0;
    for (std::size_t i = 0; i < two.px.pixels.size(); ++i) both += two.seg[8].pixels[i] > 0 && two.seg[9].pixels[i] > 0;
    CHECK(both > 0);

    CHECK_THROWS_AS(make_scene({spec, spec}), DomainError);
}

TEST_CASE("scene channels crop back to the tooth patch") {
    const auto spec = generate_tooth_spec(ToothClass(30), 3);
    const Scene scene = make_scene({spec});
    const PatchImage p = extract_patch(scene.px, scene.seg[30]);
    validate_patch(p);
    double total = 0.0;
    for (double v : p.pixels) total += v;
    CHECK(total > 0.0);
}

TEST_CASE("split counts") {
    const SplitCounts one = split_counts(1);
    CHECK(one.train == 1);
    CHECK(one.val == 0);
    CHECK(one.test == 0);
    const SplitCounts full = split_counts(320);
    CHECK(full.train == 246);
    CHECK(full.val == 16);
    CHECK(full.test == 58);
    for (std::size_t n = 1; n < 400; ++n) {
        const SplitCounts c = split_counts(n);
        CHECK(c.train + c.val + c.test == n);
        CHECK(c.train >= 1);
    }
}

TEST_CASE("dataset: degenerate single sample lands in train") {
    DatasetOptions o;
    o.classes = {1};
    o.per_class = 1;
    o.points = 100;
    const Dataset ds = generate_dataset(o);
    REQUIRE(ds.samples.size() == 1);
    CHECK(ds.samples[0].record.split == Split::train);
}

TEST_CASE("dataset: default options give 320 samples split 246/16/58") {
    DatasetOptions o;
    o.points = 16;
    const Dataset ds = generate_dataset(o);
    CHECK(ds.samples.size() == 320);
    CHECK(ds.split(Split::train).size() == 246);
    CHECK(ds.split(Split::val).size() == 16);
    CHECK(ds.split(Split::test).size() == 58);
    CHECK(manifest_json(ds) == manifest_json(generate_dataset(o)));
    o.seed = 1;
    CHECK(manifest_json(ds) != manifest_json(generate_dataset(o)));
}

TEST_CASE("dataset: build, byte-identical manifest, load round trip") {
    DatasetOptions o;
    o.classes = {3, 14};
    o.per_class = 3;
    o.points = 500;
    o.seed = 11;
    const fs::path a = scratch("ds_a"), b = scratch("ds_b");
    const Dataset built = dataset_build(o, a);
    dataset_build(o, b);
    CHECK(slurp(a / "manifest.json") == slurp(b / "manifest.json"));
    CHECK(slurp(a / "samples" / "t03_000.ocdt") == slurp(b / "samples" / "t03_000.ocdt"));
    CHECK(fs::exists(a / "patches" / "t14_002.pgm"));

    const Dataset loaded = load_dataset(a);
    REQUIRE(loaded.samples.size() == built.samples.size());
    for (std::size_t i = 0; i < built.samples.size(); ++i) {
        const auto& x = built.samples[i];
        const auto& y = loaded.samples[i];
        CHECK(x.record.id == y.record.id);
        CHECK(x.record.split == y.record.split);
        CHECK(x.spec == y.spec);
        CHECK(x.points.points == y.points.points);
        CHECK(x.points.labels == y.points.labels);
        const ToothShape shape(y.spec);
        for (std::size_t k = 0; k < y.points.size(); ++k) CHECK((shape(y.points.point(k)) ? 1 : 0) == y.points.labels[k]);
    }
    CHECK(manifest_json(loaded) == slurp(a / "manifest.json"));
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST_CASE("dataset: missing manifest and bad options") {
    CHECK_THROWS_AS(load_dataset(scratch("nothing_here")), IoError);
    DatasetOptions o;
    o.per_class = 0;
    CHECK_THROWS_AS(generate_dataset(o), DomainError);
    o.per_class = 1;
    o.classes = {1, 1};
    CHECK_THROWS_AS(generate_dataset(o), DomainError);
    o.classes = {33};
    CHECK_THROWS_AS(generate_dataset(o), DomainError);
}

}  // TEST_SUITE
