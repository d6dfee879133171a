#include "skeltop/tasl.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "skeltop/error.hpp"
#include "skeltop/spatial.hpp"

namespace skeltop {

namespace {

std::vector<Point3> to_points(const SkeletonGraph& g) {
    std::vector<Point3> pts;
    pts.reserve(g.nodes.size());
    for (const auto& c : g.nodes) pts.push_back({double(c.z), double(c.y), double(c.x)});
    return pts;
}

double mean_nearest(const std::vector<Point3>& from, const KdTree& to) {
    const auto d = nearest_distances(from, to);
    return std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(d.size());
}

double bounding_box_diagonal(const SkeletonGraph& g) {
    VoxelCoord lo = g.nodes.front();
    VoxelCoord hi = g.nodes.front();
    for (const auto& c : g.nodes) {
        lo = {std::min(lo.z, c.z), std::min(lo.y, c.y), std::min(lo.x, c.x)};
        hi = {std::max(hi.z, c.z), std::max(hi.y, c.y), std::max(hi.x, c.x)};
    }
    const double dz = hi.z - lo.z + 1;
    const double dy = hi.y - lo.y + 1;
    const double dx = hi.x - lo.x + 1;
    return std::sqrt(dz * dz + dy * dy + dx * dx);
}

Volume3D binarize(const Volume3D& v, double tau) {
    return v.kind() == VolumeKind::Binary ? v : threshold(v, tau);
}

}  // namespace

void TaslWeights::validate() const {
    if (!(lambda_node >= 0 && lambda_edge >= 0 && lambda_path >= 0)) {
        throw InvalidParameter("TASL weights must be non-negative");
    }
    if (!(lambda_node > 0 || lambda_edge > 0 || lambda_path > 0)) {
        throw InvalidParameter("at least one TASL weight must be positive");
    }
    if (!(epsilon > 0)) throw InvalidParameter("TASL epsilon must be positive");
    if (!(tau > 0 && tau < 1)) throw InvalidParameter("TASL tau must lie in (0,1)");
    if (!(r > 0)) throw InvalidParameter("TASL radius r must be positive");
}

double node_discrepancy(const SkeletonGraph& pred, const SkeletonGraph& gt) {
    if (pred.nodes.empty() || gt.nodes.empty()) {
        throw EmptyGraph("node discrepancy needs two non-empty graphs");
    }
    const auto p = to_points(pred);
    const auto g = to_points(gt);
    const KdTree pred_tree(p);
    const KdTree gt_tree(g);
    return 0.5 * (mean_nearest(p, gt_tree) + mean_nearest(g, pred_tree));
}

double edge_discrepancy(const SkeletonGraph& pred, const SkeletonGraph& gt, double epsilon) {
    if (!(epsilon > 0)) throw InvalidParameter("epsilon must be positive");
    const double ep = static_cast<double>(pred.edges.size());
    const double eg = static_cast<double>(gt.edges.size());
    return std::abs(ep - eg) / (eg + epsilon);
}

double path_discrepancy(const SkeletonGraph& pred, const SkeletonGraph& gt, double epsilon) {
    if (!(epsilon > 0)) throw InvalidParameter("epsilon must be positive");
    const double lp = connected_components(pred).mean_size;
    const double lg = connected_components(gt).mean_size;
    return std::abs(lp - lg) / (lg + epsilon);
}

TaslBreakdown combine(double l_node, double l_edge, double l_path, const TaslWeights& w) {
    TaslBreakdown b;
    b.l_node = l_node;
    b.l_edge = l_edge;
    b.l_path = l_path;
    b.total = w.lambda_node * l_node + w.lambda_edge * l_edge + w.lambda_path * l_path;
    return b;
}

TaslBreakdown tasl_from_graphs(const SkeletonGraph& pred, const SkeletonGraph& gt,
                               const TaslWeights& w) {
    w.validate();
    if (gt.nodes.empty()) {
        TaslBreakdown b;
        b.degenerate = true;
        return b;
    }
    const double l_edge = edge_discrepancy(pred, gt, w.epsilon);
    const double l_path = path_discrepancy(pred, gt, w.epsilon);
    if (pred.nodes.empty()) {
        auto b = combine(bounding_box_diagonal(gt), l_edge, l_path, w);
        b.pred_empty = true;
        return b;
    }
    return combine(node_discrepancy(pred, gt), l_edge, l_path, w);
}

TaslBreakdown tasl(const Volume3D& pred, const Volume3D& gt, const TaslWeights& w) {
    w.validate();
    require_same_dims(pred, gt, "tasl");
    if (gt.kind() != VolumeKind::Binary) {
        throw InvalidParameter("tasl: ground truth must be a binary volume");
    }
    const auto pred_graph = graph_from_skeleton(skeletonize(binarize(pred, w.tau)), w.r);
    const auto gt_graph = graph_from_skeleton(skeletonize(gt), w.r);
    return tasl_from_graphs(pred_graph, gt_graph, w);
}

nlohmann::json to_json(const TaslBreakdown& b, const TaslWeights& w) {
    return {
        {"schema", 1},
        {"l_node", b.l_node},
        {"l_edge", b.l_edge},
        {"l_path", b.l_path},
        {"total", b.total},
        {"degenerate", b.degenerate},
        {"pred_empty", b.pred_empty},
        {"weights", {w.lambda_node, w.lambda_edge, w.lambda_path}},
        {"epsilon", w.epsilon},
        {"tau", w.tau},
        {"r", w.r},
    };
}

}  // namespace skeltop
