#include "skeltop/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "skeltop/error.hpp"
#include "skeltop/parallel.hpp"

namespace skeltop {

namespace {

double sq_dist(const Point3& a, const Point3& b) {
    const double d0 = a[0] - b[0];
    const double d1 = a[1] - b[1];
    const double d2 = a[2] - b[2];
    return d0 * d0 + d1 * d1 + d2 * d2;
}

}  // namespace

KdTree::KdTree(std::vector<Point3> points) : points_(std::move(points)) {
    if (points_.size() > std::numeric_limits<std::uint32_t>::max()) {
        throw InvalidParameter("KdTree: too many points");
    }
    nodes_.reserve(points_.size());
    std::vector<std::uint32_t> order(points_.size());
    std::iota(order.begin(), order.end(), 0u);
    root_ = build(order, 0, order.size(), 0);
}

std::int32_t KdTree::build(std::vector<std::uint32_t>& order, std::size_t begin, std::size_t end,
                           int depth) {
    if (begin >= end) return -1;
    const auto axis = static_cast<std::uint8_t>(depth % 3);
    const std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(order.begin() + static_cast<std::ptrdiff_t>(begin),
                     order.begin() + static_cast<std::ptrdiff_t>(mid),
                     order.begin() + static_cast<std::ptrdiff_t>(end),
                     [&](std::uint32_t a, std::uint32_t b) {
                         return std::tie(points_[a][axis], a) < std::tie(points_[b][axis], b);
                     });
    const auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back({order[mid], -1, -1, axis});
    const auto left = build(order, begin, mid, depth + 1);
    const auto right = build(order, mid + 1, end, depth + 1);
    nodes_[static_cast<std::size_t>(id)].left = left;
    nodes_[static_cast<std::size_t>(id)].right = right;
    return id;
}

void KdTree::search(std::int32_t node, const Point3& q, Hit& best) const {
    if (node < 0) return;
    const Node& n = nodes_[static_cast<std::size_t>(node)];
    const Point3& p = points_[n.point];
    const double d = sq_dist(p, q);
    if (d < best.squared_distance) best = {n.point, d};
    const double delta = q[n.axis] - p[n.axis];
    const auto near = delta < 0 ? n.left : n.right;
    const auto far = delta < 0 ? n.right : n.left;
    search(near, q, best);
    if (delta * delta <= best.squared_distance) search(far, q, best);
}

KdTree::Hit KdTree::nearest(const Point3& query) const {
    if (empty()) throw InvalidParameter("KdTree::nearest on an empty tree");
    Hit best{0, std::numeric_limits<double>::infinity()};
    search(root_, query, best);
    return best;
}

std::vector<double> nearest_distances(std::span<const Point3> queries, const KdTree& tree) {
    std::vector<double> out(queries.size());
    parallel_for(queries.size(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            out[i] = std::sqrt(tree.nearest(queries[i]).squared_distance);
        }
    });
    return out;
}

std::vector<IndexPair> radius_pairs(std::span<const Point3> points, double radius) {
    if (!(radius > 0)) throw InvalidParameter("radius must be positive");
    struct CellKey {
        std::int64_t z, y, x;
        bool operator==(const CellKey&) const = default;
    };
    struct CellHash {
        std::size_t operator()(const CellKey& k) const noexcept {
            std::uint64_t h = static_cast<std::uint64_t>(k.z) * 0x9E3779B97F4A7C15ull;
            h ^= static_cast<std::uint64_t>(k.y) * 0xC2B2AE3D27D4EB4Full + (h << 6) + (h >> 2);
            h ^= static_cast<std::uint64_t>(k.x) * 0x165667B19E3779F9ull + (h << 6) + (h >> 2);
            return static_cast<std::size_t>(h);
        }
    };
    const auto cell_of = [radius](const Point3& p) {
        return CellKey{static_cast<std::int64_t>(std::floor(p[0] / radius)),
                       static_cast<std::int64_t>(std::floor(p[1] / radius)),
                       static_cast<std::int64_t>(std::floor(p[2] / radius))};
    };

    std::unordered_map<CellKey, std::vector<std::uint32_t>, CellHash> grid;
    for (std::uint32_t i = 0; i < points.size(); ++i) grid[cell_of(points[i])].push_back(i);

    const double r2 = radius * radius;
    std::vector<IndexPair> pairs;
    for (std::uint32_t i = 0; i < points.size(); ++i) {
        const CellKey c = cell_of(points[i]);
        for (std::int64_t dz = -1; dz <= 1; ++dz) {
            for (std::int64_t dy = -1; dy <= 1; ++dy) {
                for (std::int64_t dx = -1; dx <= 1; ++dx) {
                    const auto it = grid.find({c.z + dz, c.y + dy, c.x + dx});
                    if (it == grid.end()) continue;
                    for (const std::uint32_t j : it->second) {
                        if (j > i && sq_dist(points[i], points[j]) <= r2) pairs.emplace_back(i, j);
                    }
                }
            }
        }
    }
    std::sort(pairs.begin(), pairs.end());
    return pairs;
}

}  // namespace skeltop
