#include "dentocc/assembly.hpp"

#include <algorithm>
#include <cmath>

#include "dentocc/error.hpp"

namespace dentocc {

void ArchCurve::validate() const {
    if (!(width > 0.0) || !(depth > 0.0) || !(exponent > 0.0)) {
        throw DomainError("arch width, depth and exponent must be positive");
    }
}

double ArchCurve::y(double x) const {
    const double u = 2.0 * std::abs(x) / width;
    return depth * std::pow(std::max(0.0, 1.0 - u * u), exponent);
}

Eigen::Vector2d arch_point(const ArchCurve& curve, double t) {
    if (!(t >= 0.0 && t <= 1.0)) throw DomainError("arch_point: t must lie in [0,1]");
    curve.validate();
    const double x = (t - 0.5) * curve.width;
    return {x, curve.y(x)};
}

JawLayout layout_slots(const ArchCurve& curve, std::size_t n, std::size_t segments) {
    curve.validate();
    if (n == 0) throw DomainError("layout_slots: n must be at least 1");
    if (segments == 0) throw DomainError("layout_slots: need at least one segment");

    std::vector<double> cumulative(segments + 1, 0.0);
    Eigen::Vector2d prev = arch_point(curve, 0.0);
    for (std::size_t s = 1; s <= segments; ++s) {
        const Eigen::Vector2d p = arch_point(curve, static_cast<double>(s) / static_cast<double>(segments));
        cumulative[s] = cumulative[s - 1] + (p - prev).norm();
        prev = p;
    }
    const double total = cumulative.back();

    // Parameter at a given arc length, linear within the containing segment.
    auto t_at = [&](double length) {
        const auto it = std::lower_bound(cumulative.begin(), cumulative.end(), length);
        const auto s = static_cast<std::size_t>(std::max<std::ptrdiff_t>(1, it - cumulative.begin()));
        const double seg = cumulative[s] - cumulative[s - 1];
        const double frac = seg > 0 ? (length - cumulative[s - 1]) / seg : 0.0;
        return (static_cast<double>(s - 1) + frac) / static_cast<double>(segments);
    };

    JawLayout layout;
    layout.curve = curve;
    const double h = 0.5 / static_cast<double>(segments);
    for (std::size_t i = 0; i < n; ++i) {
        const double frac = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
        Slot slot;
        // Place mirrored slots exactly symmetric about the midline.
        const bool right_half = 2 * i + 1 > n;
        const double t_left = t_at((right_half ? 1.0 - frac : frac) * total);
        slot.t = right_half ? 1.0 - t_left : t_left;
        if (2 * i + 1 == n) slot.t = 0.5;
        slot.position = arch_point(curve, slot.t);
        const Eigen::Vector2d d = arch_point(curve, std::min(1.0, slot.t + h)) - arch_point(curve, std::max(0.0, slot.t - h));
        slot.tangent = d.normalized();
        layout.slots.push_back(slot);
    }
    return layout;
}

std::size_t slot_of(ToothClass cls) {
    return static_cast<std::size_t>(cls.upper() ? cls.index() - 1 : 32 - cls.index());
}

RigidTransform slot_transform(const Slot& slot) {
    RigidTransform tr;
    const Vec3 up(0.0, 0.0, 1.0);
    const Vec3 tangent(slot.tangent.x(), slot.tangent.y(), 0.0);
    tr.rotation.col(0) = up;
    tr.rotation.col(1) = tangent.cross(up);
    tr.rotation.col(2) = tangent;
    // Crowns (local +x) meet at z = 0.
    tr.translation = Vec3(slot.position.x(), slot.position.y(), -0.5);
    return tr;
}

TriangleMesh place_teeth(const std::vector<std::pair<ToothClass, TriangleMesh>>& teeth, const JawLayout& layout, Jaw jaw) {
    TriangleMesh out;
    std::vector<bool> used(layout.slots.size(), false);
    for (const auto& [cls, mesh] : teeth) {
        if (cls.upper() != (jaw == Jaw::upper)) {
            throw DomainError("class " + std::to_string(cls.index()) + " does not belong to the " +
                              (jaw == Jaw::upper ? "upper" : "lower") + " jaw");
        }
        const std::size_t s = slot_of(cls);
        if (s >= layout.slots.size()) throw DomainError("layout has no slot for class " + std::to_string(cls.index()));
        if (used[s]) throw DomainError("class " + std::to_string(cls.index()) + " placed twice");
        used[s] = true;
        mesh.validate();

        const RigidTransform tr = slot_transform(layout.slots[s]);
        const auto base = static_cast<std::uint32_t>(out.vertices.size());
        for (const auto& v : mesh.vertices) {
            Vec3 p = tr.apply(v);
            if (jaw == Jaw::upper) p.z() = -p.z();
            out.vertices.push_back(p);
        }
        for (const auto& f : mesh.faces) {
            if (jaw == Jaw::upper) {
                out.faces.push_back({base + f[0], base + f[2], base + f[1]});
            } else {
                out.faces.push_back({base + f[0], base + f[1], base + f[2]});
            }
        }
    }
    return out;
}

}  // namespace dentocc
