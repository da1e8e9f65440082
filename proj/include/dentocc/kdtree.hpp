#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dentocc/synth.hpp"

namespace dentocc {

/// Static 3-d tree for exact Euclidean nearest-neighbour queries.
class KdTree {
public:
    explicit KdTree(std::span<const Vec3> points);

    struct Hit {
        std::size_t index = 0;
        double distance = 0.0;
    };

    /// Closest stored point; ties resolve to the lowest index.
    Hit nearest(const Vec3& q) const;
    std::size_t size() const { return points_.size(); }

private:
    struct Node {
        std::uint32_t begin, end;   // range in order_
        std::int32_t left = -1, right = -1;
        int axis = 0;
        double split = 0.0;
    };

    std::int32_t build(std::uint32_t begin, std::uint32_t end);
    void search(std::int32_t node, const Vec3& q, Hit& best, double& best_sq) const;

    std::vector<Vec3> points_;
    std::vector<std::uint32_t> order_;
    std::vector<Node> nodes_;
};

}  // namespace dentocc
