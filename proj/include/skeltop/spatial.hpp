#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace skeltop {

using Point3 = std::array<double, 3>;

/// Static 3-d tree for exact nearest-neighbour distance queries.
class KdTree {
public:
    explicit KdTree(std::vector<Point3> points);

    std::size_t size() const noexcept { return points_.size(); }
    bool empty() const noexcept { return points_.empty(); }

    struct Hit {
        std::size_t index;  // into the constructor's point list
        double squared_distance;
    };

    /// Requires a non-empty tree.
    Hit nearest(const Point3& query) const;

private:
    struct Node {
        std::uint32_t point;  // index into points_
        std::int32_t left = -1;
        std::int32_t right = -1;
        std::uint8_t axis = 0;
    };

    std::int32_t build(std::vector<std::uint32_t>& order, std::size_t begin, std::size_t end,
                       int depth);
    void search(std::int32_t node, const Point3& q, Hit& best) const;

    std::vector<Point3> points_;
    std::vector<Node> nodes_;
    std::int32_t root_ = -1;
};

/// Euclidean distance from every query to its nearest point in `tree`.
/// Runs in parallel over queries; the result is independent of thread count.
std::vector<double> nearest_distances(std::span<const Point3> queries, const KdTree& tree);

using IndexPair = std::pair<std::uint32_t, std::uint32_t>;

/// All unordered pairs (i < j) with ||p_i - p_j|| <= radius, found with a
/// uniform bucket grid of cell size `radius`. Sorted lexicographically.
std::vector<IndexPair> radius_pairs(std::span<const Point3> points, double radius);

}  // namespace skeltop
