#pragma once

#include <utility>
#include <vector>

#include "dentocc/meshing.hpp"

namespace dentocc {

/// y(x) = depth * (1 - (2|x|/width)^2)^exponent on x in [-width/2, width/2].
struct ArchCurve {
    double width = 0.9;
    double depth = 0.45;
    double exponent = 0.8;

    void validate() const;
    double y(double x) const;
};

/// x = (t - 0.5) * width, y = curve(x).
Eigen::Vector2d arch_point(const ArchCurve& curve, double t);

struct Slot {
    double t = 0.0;
    Eigen::Vector2d position;
    Eigen::Vector2d tangent;  // unit, toward increasing t
};

struct JawLayout {
    ArchCurve curve;
    std::vector<Slot> slots;
};

inline constexpr std::size_t kArcSegments = 1024;

/// Slots at arc-length fractions (i + 0.5) / n of a `segments`-piece
/// polyline approximation of the curve.
JawLayout layout_slots(const ArchCurve& curve, std::size_t n = 16, std::size_t segments = kArcSegments);

enum class Jaw { upper, lower };

/// Slot index of a class within its jaw (0 = patient's right end of the arch).
std::size_t slot_of(ToothClass cls);

/// Rigid transform of a tooth into its slot: the tooth's long axis (local x)
/// becomes vertical, its mesiodistal axis (local z) follows the tangent.
struct RigidTransform {
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    Vec3 translation = Vec3::Zero();

    Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
};

RigidTransform slot_transform(const Slot& slot);

/// Transforms each tooth into its slot and concatenates the meshes. Upper
/// teeth are additionally mirrored in z (with their winding flipped).
/// Throws on a class from the other jaw or a repeated class.
TriangleMesh place_teeth(const std::vector<std::pair<ToothClass, TriangleMesh>>& teeth, const JawLayout& layout, Jaw jaw);

}  // namespace dentocc
