#include <sstream>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dentocc/assembly.hpp"
#include "dentocc/checkpoint.hpp"
#include "dentocc/cli.hpp"
#include "dentocc/meshing.hpp"
#include "dentocc/metrics.hpp"
#include "dentocc/reconstructor.hpp"
#include "dentocc/synth.hpp"

namespace py = pybind11;
using namespace dentocc;

namespace {

using F64Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

GridDims dims_of(const std::vector<std::size_t>& d) {
    if (d.size() != 3) throw DimensionError("grid dims must have three entries");
    return {d[0], d[1], d[2]};
}

std::vector<Vec3> rows_of(const F64Array& a, const char* what) {
    if (a.ndim() != 2 || a.shape(1) != 3) throw DimensionError(std::string(what) + " must have shape [N,3]");
    const auto r = a.unchecked<2>();
    std::vector<Vec3> out(static_cast<std::size_t>(a.shape(0)));
    for (py::ssize_t i = 0; i < a.shape(0); ++i) out[i] = Vec3(r(i, 0), r(i, 1), r(i, 2));
    return out;
}

py::array_t<double> to_array(const std::vector<Vec3>& v) {
    py::array_t<double> out({static_cast<py::ssize_t>(v.size()), py::ssize_t{3}});
    auto w = out.mutable_unchecked<2>();
    for (std::size_t i = 0; i < v.size(); ++i)
        for (int k = 0; k < 3; ++k) w(i, k) = v[i][k];
    return out;
}

py::tuple mesh_tuple(const TriangleMesh& m) {
    py::array_t<std::uint32_t> faces({static_cast<py::ssize_t>(m.faces.size()), py::ssize_t{3}});
    auto f = faces.mutable_unchecked<2>();
    for (std::size_t i = 0; i < m.faces.size(); ++i)
        for (int k = 0; k < 3; ++k) f(i, k) = m.faces[i][k];
    return py::make_tuple(to_array(m.vertices), faces);
}

TriangleMesh mesh_of(const F64Array& vertices, const py::array_t<std::int64_t, py::array::c_style | py::array::forcecast>& faces) {
    TriangleMesh m;
    m.vertices = rows_of(vertices, "vertices");
    if (faces.ndim() != 2 || faces.shape(1) != 3) throw DimensionError("faces must have shape [F,3]");
    const auto r = faces.unchecked<2>();
    for (py::ssize_t i = 0; i < faces.shape(0); ++i) {
        std::array<std::uint32_t, 3> f{};
        for (int k = 0; k < 3; ++k) {
            if (r(i, k) < 0) throw DomainError("negative face index");
            f[k] = static_cast<std::uint32_t>(r(i, k));
        }
        m.faces.push_back(f);
    }
    m.validate();
    return m;
}

py::array_t<std::uint8_t> voxel_array(const VoxelGrid& g) {
    py::array_t<std::uint8_t> out({g.dims[0], g.dims[1], g.dims[2]});
    std::copy(g.values.begin(), g.values.end(), out.mutable_data());
    return out;
}

VoxelGrid voxels_of(const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 3) throw DimensionError("voxel grid must be 3-dimensional");
    VoxelGrid g({static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)), static_cast<std::size_t>(a.shape(2))});
    for (std::size_t i = 0; i < g.size(); ++i) g.values[i] = a.data()[i] != 0;
    return g;
}

PatchImage patch_of(const F64Array& a) {
    if (a.ndim() != 2) throw DimensionError("patch must be 2-dimensional");
    PatchImage p(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
    std::copy(a.data(), a.data() + p.pixels.size(), p.pixels.begin());
    return p;
}

py::array_t<double> patch_array(const PatchImage& p) {
    py::array_t<double> out({p.rows, p.cols});
    std::copy(p.pixels.begin(), p.pixels.end(), out.mutable_data());
    return out;
}

SurfaceSamples samples_of(const F64Array& points, const F64Array& normals) {
    SurfaceSamples s;
    s.points = rows_of(points, "points");
    s.normals = rows_of(normals, "normals");
    if (s.points.size() != s.normals.size()) throw DimensionError("points and normals differ in length");
    return s;
}

Tensor condition_for(const ToothReconstructor& m, int cls, const std::optional<F64Array>& patch) {
    if (!m.conditioned()) return {};
    if (!patch) throw DomainError("a conditioned model needs a patch");
    return m.condition(ToothClass(cls), patch_of(*patch));
}

}  // namespace

PYBIND11_MODULE(_dentocc, m) {
    m.doc() = "Conditional implicit occupancy reconstruction of synthetic teeth";

    // Translators run newest first, so the base class goes in first.
    py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<CheckpointError>(m, "CheckpointError", PyExc_RuntimeError);
    py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
    py::register_exception<IoError>(m, "IoError", PyExc_OSError);

    m.def("tooth_contains", [](int cls, std::uint64_t seed, const F64Array& points) {
        const ToothShape shape = generate_tooth(ToothClass(cls), seed);
        const auto pts = rows_of(points, "points");
        py::array_t<bool> out(static_cast<py::ssize_t>(pts.size()));
        for (std::size_t i = 0; i < pts.size(); ++i) out.mutable_data()[i] = shape.contains(pts[i]);
        return out;
    }, py::arg("cls"), py::arg("seed"), py::arg("points"), "Ground-truth occupancy of a synthetic tooth at [N,3] points.");

    m.def("voxelize_tooth", [](int cls, std::uint64_t seed, std::vector<std::size_t> dims) {
        return voxel_array(voxelize(generate_tooth(ToothClass(cls), seed), dims_of(dims)));
    }, py::arg("cls"), py::arg("seed"), py::arg("dims") = std::vector<std::size_t>{64, 64, 64});

    m.def("sample_points", [](int cls, std::uint64_t seed, std::size_t count, std::uint64_t sample_seed) {
        const PointSampleSet s = sample_points(generate_tooth(ToothClass(cls), seed), count, sample_seed);
        py::array_t<float> pts({static_cast<py::ssize_t>(s.size()), py::ssize_t{3}});
        std::copy(s.points.begin(), s.points.end(), pts.mutable_data());
        py::array_t<std::uint8_t> labels(static_cast<py::ssize_t>(s.size()));
        std::copy(s.labels.begin(), s.labels.end(), labels.mutable_data());
        return py::make_tuple(pts, labels);
    }, py::arg("cls"), py::arg("seed"), py::arg("count"), py::arg("sample_seed") = 0);

    m.def("render_patch", [](int cls, std::uint64_t seed) {
        return patch_array(render_patch(generate_tooth(ToothClass(cls), seed)));
    }, py::arg("cls"), py::arg("seed"), "64x64 intraoral-style patch of a synthetic tooth.");

    m.def("extract_mesh", [](const F64Array& values, double iso) {
        if (values.ndim() != 3) throw DimensionError("grid must be 3-dimensional");
        ScalarGrid g({static_cast<std::size_t>(values.shape(0)), static_cast<std::size_t>(values.shape(1)),
                      static_cast<std::size_t>(values.shape(2))});
        std::copy(values.data(), values.data() + g.values.size(), g.values.begin());
        return mesh_tuple(extract_mesh(g, iso));
    }, py::arg("values"), py::arg("iso") = kDefaultIso,
       "Padded marching cubes on a cell-centered grid over [-0.5,0.5]^3; returns (vertices, faces).");

    m.def("boundary_edge_count", [](const F64Array& v, const py::array_t<std::int64_t, py::array::c_style | py::array::forcecast>& f) {
        return boundary_edge_count(mesh_of(v, f));
    });

    m.def("volumetric_iou", [](const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& a,
                               const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& b) {
        return volumetric_iou(voxels_of(a), voxels_of(b));
    });
    m.def("chamfer_l1", [](const F64Array& p, const F64Array& pn, const F64Array& q, const F64Array& qn) {
        return chamfer_l1(samples_of(p, pn), samples_of(q, qn));
    }, py::arg("points_a"), py::arg("normals_a"), py::arg("points_b"), py::arg("normals_b"));
    m.def("normal_consistency", [](const F64Array& p, const F64Array& pn, const F64Array& q, const F64Array& qn) {
        return normal_consistency(samples_of(p, pn), samples_of(q, qn));
    }, py::arg("points_a"), py::arg("normals_a"), py::arg("points_b"), py::arg("normals_b"));

    m.def("place_teeth", [](const std::vector<std::tuple<int, F64Array, py::array_t<std::int64_t, py::array::c_style | py::array::forcecast>>>& teeth,
                            bool upper) {
        std::vector<std::pair<ToothClass, TriangleMesh>> in;
        for (const auto& [cls, v, f] : teeth) in.emplace_back(ToothClass(cls), mesh_of(v, f));
        return mesh_tuple(place_teeth(in, layout_slots(ArchCurve{}, 16), upper ? Jaw::upper : Jaw::lower));
    }, py::arg("teeth"), py::arg("upper"), "Places (class, vertices, faces) meshes on the default dental arch.");

    py::class_<ToothReconstructor>(m, "Reconstructor")
        .def(py::init([](const std::string& conditioning, bool class_embedding, std::uint64_t seed) {
                 ReconstructorConfig cfg;
                 cfg.net.conditioning = parse_conditioning(conditioning);
                 cfg.use_class_embedding = class_embedding;
                 return ToothReconstructor(cfg, seed);
             }),
             py::arg("conditioning") = "cx", py::arg("class_embedding") = true, py::arg("seed") = 0)
        .def_static("load", [](const std::string& path) { return ToothReconstructor::load(path); })
        .def("save", [](ToothReconstructor& self, const std::string& path) { self.save(path); })
        .def_property_readonly("conditioning", [](const ToothReconstructor& self) {
            return std::string(conditioning_name(self.config().net.conditioning));
        })
        .def("parameter_count", [](ToothReconstructor& self) {
            std::size_t n = 0;
            for (const auto& p : self.parameters()) n += p.tensor.data().size();
            return n;
        })
        .def("predict", [](const ToothReconstructor& self, const F64Array& points, int cls, std::optional<F64Array> patch) {
            const auto pts = rows_of(points, "points");
            std::vector<double> flat;
            flat.reserve(3 * pts.size());
            for (const auto& p : pts) flat.insert(flat.end(), {p.x(), p.y(), p.z()});
            const Tensor out = self.network().predict(Tensor({pts.size(), 3}, std::move(flat)),
                                                      condition_for(self, cls, patch));
            py::array_t<double> res(static_cast<py::ssize_t>(pts.size()));
            std::ranges::copy(out.data(), res.mutable_data());
            return res;
        }, py::arg("points"), py::arg("cls"), py::arg("patch") = py::none(), "Occupancy probabilities at [N,3] points.")
        .def("reconstruct", [](const ToothReconstructor& self, int cls, std::optional<F64Array> patch, std::size_t resolution, double iso) {
            const ScalarGrid g = eval_grid(self.network(), condition_for(self, cls, patch), {resolution, resolution, resolution});
            return mesh_tuple(extract_mesh(g, iso));
        }, py::arg("cls"), py::arg("patch") = py::none(), py::arg("resolution") = 128, py::arg("iso") = kDefaultIso);

    m.def("run_cli", [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = run_cli(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
    }, py::arg("args"), "Runs the command-line tool in-process; returns (exit code, stdout, stderr).");
}
