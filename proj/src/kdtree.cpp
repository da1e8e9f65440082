#include "dentocc/kdtree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "dentocc/error.hpp"

namespace dentocc {

namespace {
constexpr std::uint32_t kLeafSize = 8;
}

KdTree::KdTree(std::span<const Vec3> points) : points_(points.begin(), points.end()), order_(points.size()) {
    if (points.empty()) throw DomainError("KdTree: no points");
    std::iota(order_.begin(), order_.end(), 0u);
    nodes_.reserve(2 * points.size() / kLeafSize + 1);
    build(0, static_cast<std::uint32_t>(points.size()));
}

std::int32_t KdTree::build(std::uint32_t begin, std::uint32_t end) {
    const auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back({begin, end});
    if (end - begin <= kLeafSize) return id;

    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 hi = -lo;
    for (auto i = begin; i < end; ++i) {
        lo = lo.cwiseMin(points_[order_[i]]);
        hi = hi.cwiseMax(points_[order_[i]]);
    }
    int axis = 0;
    (hi - lo).maxCoeff(&axis);
    const auto mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::uint32_t a, std::uint32_t b) { return points_[a][axis] < points_[b][axis]; });
    nodes_[static_cast<std::size_t>(id)].axis = axis;
    nodes_[static_cast<std::size_t>(id)].split = points_[order_[mid]][axis];
    const auto left = build(begin, mid);
    const auto right = build(mid, end);
    nodes_[static_cast<std::size_t>(id)].left = left;
    nodes_[static_cast<std::size_t>(id)].right = right;
    return id;
}

void KdTree::search(std::int32_t node_id, const Vec3& q, Hit& best, double& best_sq) const {
    const Node& node = nodes_[static_cast<std::size_t>(node_id)];
    if (node.left < 0) {
        for (auto i = node.begin; i < node.end; ++i) {
            const std::uint32_t p = order_[i];
            const double d = (points_[p] - q).squaredNorm();
            if (d < best_sq || (d == best_sq && p < best.index)) {
                best_sq = d;
                best.index = p;
            }
        }
        return;
    }
    // Left holds coordinates <= split, right holds coordinates >= split.
    const double diff = q[node.axis] - node.split;
    const auto near = diff < 0 ? node.left : node.right;
    const auto far = diff < 0 ? node.right : node.left;
    search(near, q, best, best_sq);
    if (diff * diff <= best_sq) search(far, q, best, best_sq);
}

KdTree::Hit KdTree::nearest(const Vec3& q) const {
    Hit best;
    best.index = std::numeric_limits<std::size_t>::max();
    double best_sq = std::numeric_limits<double>::infinity();
    search(0, q, best, best_sq);
    best.distance = std::sqrt(best_sq);
    return best;
}

}  // namespace dentocc
