#include "dentocc/meshing.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "dentocc/error.hpp"

namespace dentocc {

void TriangleMesh::validate() const {
    const auto n = vertices.size();
    for (std::size_t f = 0; f < faces.size(); ++f) {
        const auto& t = faces[f];
        if (t[0] >= n || t[1] >= n || t[2] >= n) throw DomainError("face " + std::to_string(f) + " has an out-of-range index");
        if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) throw DomainError("face " + std::to_string(f) + " is degenerate");
    }
    if (!normals.empty()) {
        if (normals.size() != n) throw DimensionError("normals must match the vertex count");
        for (const auto& v : normals) {
            if (std::abs(v.norm() - 1.0) > 1e-6) throw NumericError("vertex normal is not unit length");
        }
    }
}

ScalarGrid::ScalarGrid(GridDims d, double fill) : dims(d) {
    for (std::size_t a = 0; a < 3; ++a) {
        if (d[a] < 2) throw DimensionError("scalar grid extents must be at least 2");
        spacing[static_cast<Eigen::Index>(a)] = 1.0 / static_cast<double>(d[a] - 1);
    }
    values.assign(d[0] * d[1] * d[2], fill);
}

ScalarGrid pad_grid(const ScalarGrid& grid, double value) {
    ScalarGrid out;
    out.dims = {grid.dims[0] + 2, grid.dims[1] + 2, grid.dims[2] + 2};
    out.spacing = grid.spacing;
    out.origin = grid.origin - grid.spacing;
    out.values.assign(out.dims[0] * out.dims[1] * out.dims[2], value);
    for (std::size_t i = 0; i < grid.dims[0]; ++i)
        for (std::size_t j = 0; j < grid.dims[1]; ++j)
            for (std::size_t k = 0; k < grid.dims[2]; ++k) out.at(i + 1, j + 1, k + 1) = grid.at(i, j, k);
    return out;
}

ScalarGrid to_scalar_grid(const VoxelGrid& voxels) {
    ScalarGrid g(voxels.dims);
    for (std::size_t i = 0; i < voxels.values.size(); ++i) g.values[i] = voxels.values[i];
    return g;
}

VoxelGrid threshold_grid(const ScalarGrid& grid, double iso) {
    VoxelGrid v(grid.dims);
    for (std::size_t i = 0; i < grid.values.size(); ++i) v.values[i] = grid.values[i] > iso ? 1 : 0;
    return v;
}

ScalarGrid eval_grid(const OccupancyNetwork& net, const Tensor& condition, GridDims dims, std::size_t chunk) {
    if (chunk == 0) throw DomainError("eval_grid: chunk must be positive");
    ScalarGrid grid(dims);
    const std::size_t total = grid.values.size();
    std::vector<double> pts;
    for (std::size_t start = 0; start < total; start += chunk) {
        const std::size_t m = std::min(chunk, total - start);
        pts.resize(3 * m);
        for (std::size_t r = 0; r < m; ++r) {
            const std::size_t flat = start + r;
            const std::size_t k = flat % dims[2];
            const std::size_t j = (flat / dims[2]) % dims[1];
            const std::size_t i = flat / (dims[1] * dims[2]);
            pts[3 * r] = cell_center(i, dims[0]);
            pts[3 * r + 1] = cell_center(j, dims[1]);
            pts[3 * r + 2] = cell_center(k, dims[2]);
        }
        const Tensor p = net.predict(Tensor({m, 3}, pts), condition);
        std::ranges::copy(p.data(), grid.values.begin() + static_cast<std::ptrdiff_t>(start));
    }
    return grid;
}

// ---------------------------------------------------------------------------
// Marching cubes
// ---------------------------------------------------------------------------

namespace {

// Corner c has offsets (c & 1, (c >> 1) & 1, (c >> 2) & 1).
int corner_bit(int c, int axis) { return (c >> axis) & 1; }

// Edge id = axis * 4 + (bit on axis+1) + 2 * (bit on axis+2).
int edge_between(int a, int b) {
    const int diff = a ^ b;
    const int axis = diff == 1 ? 0 : diff == 2 ? 1 : 2;
    return axis * 4 + corner_bit(a, (axis + 1) % 3) + 2 * corner_bit(a, (axis + 2) % 3);
}

int edge_axis(int e) { return e / 4; }

int edge_low_corner(int e) {
    const int axis = e / 4;
    const int u = e % 2, v = (e / 2) % 2;
    return (u << ((axis + 1) % 3)) | (v << ((axis + 2) % 3));
}

// Closed chain of crossing edges; consecutive edges share a cube face.
struct EdgeLoop {
    std::vector<int> edges;
    bool revisits_face = false;
};

using LoopList = std::vector<EdgeLoop>;

std::array<LoopList, 256> build_table() {
    // Faces as corner cycles, counter-clockwise seen from outside the cube.
    std::array<std::array<int, 4>, 6> faces{};
    for (int axis = 0; axis < 3; ++axis) {
        for (int side = 0; side < 2; ++side) {
            const int uv[4][2] = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
            auto& f = faces[static_cast<std::size_t>(2 * axis + side)];
            for (int i = 0; i < 4; ++i) {
                f[static_cast<std::size_t>(i)] =
                    (side << axis) | (uv[i][0] << ((axis + 1) % 3)) | (uv[i][1] << ((axis + 2) % 3));
            }
            if (side == 0) std::reverse(f.begin(), f.end());
        }
    }

    std::array<LoopList, 256> table;
    for (int mask = 0; mask < 256; ++mask) {
        auto inside = [&](int c) { return ((mask >> c) & 1) != 0; };
        std::array<int, 12> next, via;
        next.fill(-1);
        via.fill(-1);
        for (std::size_t fi = 0; fi < faces.size(); ++fi) {
            const auto& f = faces[fi];
            struct Crossing {
                int edge;
                bool entry;
            };
            std::vector<Crossing> xs;
            for (int i = 0; i < 4; ++i) {
                const int a = f[static_cast<std::size_t>(i)], b = f[static_cast<std::size_t>((i + 1) % 4)];
                if (inside(a) != inside(b)) xs.push_back({edge_between(a, b), inside(b)});
            }
            // Pair every entry with the following exit; on an ambiguous face this
            // cuts each inside corner off on its own.
            for (std::size_t p = 0; p < xs.size(); ++p) {
                if (!xs[p].entry) continue;
                next[static_cast<std::size_t>(xs[p].edge)] = xs[(p + 1) % xs.size()].edge;
                via[static_cast<std::size_t>(xs[p].edge)] = static_cast<int>(fi);
            }
        }
        std::array<bool, 12> used{};
        for (int start = 0; start < 12; ++start) {
            if (next[static_cast<std::size_t>(start)] < 0 || used[static_cast<std::size_t>(start)]) continue;
            EdgeLoop loop;
            std::array<bool, 6> seen{};
            for (int e = start; !used[static_cast<std::size_t>(e)]; e = next[static_cast<std::size_t>(e)]) {
                used[static_cast<std::size_t>(e)] = true;
                loop.edges.push_back(e);
                auto& s = seen[static_cast<std::size_t>(via[static_cast<std::size_t>(e)])];
                loop.revisits_face = loop.revisits_face || s;
                s = true;
            }
            table[static_cast<std::size_t>(mask)].push_back(std::move(loop));
        }
    }

    // Orient so that polygons face away from the inside corners: with only
    // corner 0 inside the normal must point toward (1,1,1).
    auto midpoint = [](int e) {
        Vec3 p(corner_bit(edge_low_corner(e), 0), corner_bit(edge_low_corner(e), 1), corner_bit(edge_low_corner(e), 2));
        p[edge_axis(e)] += 0.5;
        return p;
    };
    const auto& t = table[1].front().edges;
    const Vec3 n = (midpoint(t[1]) - midpoint(t[0])).cross(midpoint(t[2]) - midpoint(t[0]));
    if (n.dot(Vec3(1, 1, 1)) < 0) {
        for (auto& list : table)
            for (auto& loop : list) std::reverse(loop.edges.begin() + 1, loop.edges.end());
    }
    return table;
}

const std::array<LoopList, 256>& mc_table() {
    static const auto table = build_table();
    return table;
}

}  // namespace

TriangleMesh marching_cubes(const ScalarGrid& grid, double iso) {
    if (grid.values.size() != grid.dims[0] * grid.dims[1] * grid.dims[2]) throw DimensionError("scalar grid size mismatch");
    require_finite(grid.values, "marching_cubes grid");
    const auto& table = mc_table();
    TriangleMesh mesh;
    const auto [nx, ny, nz] = grid.dims;
    if (nx < 2 || ny < 2 || nz < 2) return mesh;

    // One vertex slot per lattice edge, keyed by (axis, lower lattice point).
    std::array<std::vector<std::int64_t>, 3> edge_vertex;
    for (auto& v : edge_vertex) v.assign(grid.values.size(), -1);

    auto vertex_on = [&](std::size_t i, std::size_t j, std::size_t k, int e) -> std::uint32_t {
        const int lc = edge_low_corner(e);
        const int axis = edge_axis(e);
        const std::size_t a = i + static_cast<std::size_t>(corner_bit(lc, 0));
        const std::size_t b = j + static_cast<std::size_t>(corner_bit(lc, 1));
        const std::size_t c = k + static_cast<std::size_t>(corner_bit(lc, 2));
        const std::size_t lo = grid.index(a, b, c);
        auto& slot = edge_vertex[static_cast<std::size_t>(axis)][lo];
        if (slot < 0) {
            const std::size_t hi = grid.index(a + (axis == 0), b + (axis == 1), c + (axis == 2));
            const double v0 = grid.values[lo], v1 = grid.values[hi];
            const double t = (iso - v0) / (v1 - v0);
            const Vec3 p0 = grid.position(a, b, c);
            const Vec3 p1 = grid.position(a + (axis == 0), b + (axis == 1), c + (axis == 2));
            slot = static_cast<std::int64_t>(mesh.vertices.size());
            mesh.vertices.push_back(p0 + t * (p1 - p0));
        }
        return static_cast<std::uint32_t>(slot);
    };

    std::vector<std::uint32_t> ring;
    for (std::size_t i = 0; i + 1 < nx; ++i) {
        for (std::size_t j = 0; j + 1 < ny; ++j) {
            for (std::size_t k = 0; k + 1 < nz; ++k) {
                int mask = 0;
                for (int c = 0; c < 8; ++c) {
                    const double v = grid.at(i + static_cast<std::size_t>(corner_bit(c, 0)),
                                             j + static_cast<std::size_t>(corner_bit(c, 1)),
                                             k + static_cast<std::size_t>(corner_bit(c, 2)));
                    if (v > iso) mask |= 1 << c;
                }
                for (const auto& loop : table[static_cast<std::size_t>(mask)]) {
                    ring.clear();
                    for (int e : loop.edges) ring.push_back(vertex_on(i, j, k, e));
                    if (!loop.revisits_face) {
                        for (std::size_t r = 1; r + 1 < ring.size(); ++r) mesh.faces.push_back({ring[0], ring[r], ring[r + 1]});
                        continue;
                    }
                    // A loop through the same face twice would put fan diagonals in
                    // that face, where the neighbouring cell can emit them too.
                    Vec3 center = Vec3::Zero();
                    for (auto v : ring) center += mesh.vertices[v];
                    const auto mid = static_cast<std::uint32_t>(mesh.vertices.size());
                    mesh.vertices.push_back(center / static_cast<double>(ring.size()));
                    for (std::size_t r = 0; r < ring.size(); ++r) mesh.faces.push_back({mid, ring[r], ring[(r + 1) % ring.size()]});
                }
            }
        }
    }
    return mesh;
}

TriangleMesh extract_mesh(const ScalarGrid& grid, double iso) { return marching_cubes(pad_grid(grid, 0.0), iso); }

TriangleMesh vertex_normals(TriangleMesh mesh) {
    if (mesh.vertices.empty() || mesh.faces.empty()) throw DomainError("vertex_normals: empty mesh");
    mesh.validate();
    std::vector<Vec3> acc(mesh.vertices.size(), Vec3::Zero());
    std::vector<std::uint8_t> touched(mesh.vertices.size(), 0);
    for (const auto& f : mesh.faces) {
        const Vec3& a = mesh.vertices[f[0]];
        // Cross product length is twice the area, so this is area-weighted.
        const Vec3 n = (mesh.vertices[f[1]] - a).cross(mesh.vertices[f[2]] - a);
        for (auto v : f) {
            acc[v] += n;
            touched[v] = 1;
        }
    }
    for (std::size_t v = 0; v < acc.size(); ++v) {
        if (!touched[v]) throw DomainError("vertex_normals: vertex " + std::to_string(v) + " belongs to no face");
    }
    // Vertices whose faces all have zero area borrow their neighbours' normals.
    std::vector<Vec3> borrowed(acc.size(), Vec3::Zero());
    for (const auto& f : mesh.faces) {
        for (auto v : f) {
            if (acc[v].squaredNorm() > 0) continue;
            for (auto w : f) {
                if (acc[w].squaredNorm() > 0) borrowed[v] += acc[w].normalized();
            }
        }
    }
    mesh.normals.resize(acc.size());
    for (std::size_t v = 0; v < acc.size(); ++v) {
        Vec3 n = acc[v].squaredNorm() > 0 ? acc[v] : borrowed[v];
        mesh.normals[v] = n.squaredNorm() > 0 ? n.normalized() : Vec3::UnitZ();
    }
    return mesh;
}

std::size_t boundary_edge_count(const TriangleMesh& mesh) {
    std::map<std::pair<std::uint32_t, std::uint32_t>, int> uses;
    for (const auto& f : mesh.faces) {
        for (int e = 0; e < 3; ++e) {
            auto a = f[static_cast<std::size_t>(e)], b = f[static_cast<std::size_t>((e + 1) % 3)];
            ++uses[{std::min(a, b), std::max(a, b)}];
        }
    }
    return static_cast<std::size_t>(std::count_if(uses.begin(), uses.end(), [](const auto& kv) { return kv.second == 1; }));
}

void export_mesh(const TriangleMesh& mesh, const std::filesystem::path& path) {
    mesh.validate();
    std::FILE* out = std::fopen(path.string().c_str(), "w");
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    for (const auto& v : mesh.vertices) std::fprintf(out, "v %.17g %.17g %.17g\n", v.x(), v.y(), v.z());
    for (const auto& f : mesh.faces) std::fprintf(out, "f %u %u %u\n", f[0] + 1, f[1] + 1, f[2] + 1);
    const bool failed = std::ferror(out) != 0;
    if (std::fclose(out) != 0 || failed) throw IoError("short write to " + path.string());
}

TriangleMesh import_mesh(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    TriangleMesh mesh;
    std::vector<std::array<long long, 3>> raw_faces;
    std::vector<std::size_t> face_lines;
    std::vector<long long> face_vcount;  // vertices defined before the face; anchors negative indices
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ss(line);
        std::string tag;
        if (!(ss >> tag) || tag[0] == '#') continue;
        if (tag == "v") {
            double x, y, z;
            if (!(ss >> x >> y >> z)) throw ParseError("bad vertex", line_no);
            mesh.vertices.emplace_back(x, y, z);
        } else if (tag == "f") {
            std::vector<long long> idx;
            std::string tok;
            while (ss >> tok) {
                const auto slash = tok.find('/');
                std::size_t used = 0;
                long long v = 0;
                try {
                    v = std::stoll(tok.substr(0, slash), &used);
                } catch (const std::exception&) {
                    throw ParseError("bad face index '" + tok + "'", line_no);
                }
                if (used != tok.substr(0, slash).size() || v == 0) throw ParseError("bad face index '" + tok + "'", line_no);
                idx.push_back(v);
            }
            if (idx.size() < 3) throw ParseError("face needs at least 3 vertices", line_no);
            for (std::size_t i = 1; i + 1 < idx.size(); ++i) {
                raw_faces.push_back({idx[0], idx[i], idx[i + 1]});
                face_lines.push_back(line_no);
                face_vcount.push_back(static_cast<long long>(mesh.vertices.size()));
            }
        } else if (tag == "vn" || tag == "vt" || tag == "o" || tag == "g" || tag == "s" || tag == "usemtl" || tag == "mtllib") {
            continue;
        } else {
            throw ParseError("unknown OBJ record '" + tag + "'", line_no);
        }
    }
    const auto n = static_cast<long long>(mesh.vertices.size());
    for (std::size_t f = 0; f < raw_faces.size(); ++f) {
        std::array<std::uint32_t, 3> tri{};
        for (std::size_t c = 0; c < 3; ++c) {
            long long v = raw_faces[f][c];
            if (v < 0) v = face_vcount[f] + v + 1;
            if (v < 1 || v > n) throw ParseError("face index out of range", face_lines[f]);
            tri[c] = static_cast<std::uint32_t>(v - 1);
        }
        if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2]) throw ParseError("degenerate face", face_lines[f]);
        mesh.faces.push_back(tri);
    }
    return mesh;
}

}  // namespace dentocc
