#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include <json.hpp>

#include "skeltop/volume.hpp"

namespace skeltop {

/// Parallel-direction 3D medial-axis thinning (Lee, Kashyap & Chu family).
///
/// Repeatedly peels simple border voxels in the six face directions until a
/// full sweep deletes nothing. Endpoints (exactly one 26-neighbour) are kept.
/// The result is a subset of the input, has the same number of 26-connected
/// components, and is a fixed point of the operator. Deterministic.
Volume3D skeletonize(const Volume3D& mask);

/// Number of 26-connected foreground components.
std::size_t count_components_26(const Volume3D& mask);

using Edge = std::pair<std::uint32_t, std::uint32_t>;

struct SkeletonGraph {
    std::vector<VoxelCoord> nodes;  // node id = position in this list
    std::vector<Edge> edges;        // i < j, sorted, unique
    double radius = 2.0;

    bool operator==(const SkeletonGraph&) const = default;
};

/// Nodes are the foreground voxels in flat-index order; edges join every pair
/// at Euclidean distance <= r. Uses a bucket grid of cell size r.
SkeletonGraph graph_from_skeleton(const Volume3D& skel, double r = 2.0);

/// Same contract as graph_from_skeleton, by exhaustive pairwise scan.
SkeletonGraph graph_from_skeleton_bruteforce(const Volume3D& skel, double r = 2.0);

/// Graph over explicit distinct coordinates, in the order given.
SkeletonGraph graph_from_coords(std::vector<VoxelCoord> nodes, double r = 2.0);

struct ComponentPartition {
    std::vector<std::vector<std::uint32_t>> components;  // each sorted; ordered by smallest id
    double mean_size = 0.0;

    std::size_t count() const noexcept { return components.size(); }
};

ComponentPartition connected_components(const SkeletonGraph& g);

/// Nodes whose removal increases the number of connected components, ascending.
std::vector<std::uint32_t> articulation_nodes(const SkeletonGraph& g);

/// Drops `node` and its incident edges; higher ids shift down by one.
SkeletonGraph remove_node(const SkeletonGraph& g, std::uint32_t node);

/// {"nodes": [[z,y,x],...], "edges": [[i,j],...], "r": r}
nlohmann::json to_json(const SkeletonGraph& g);

}  // namespace skeltop
