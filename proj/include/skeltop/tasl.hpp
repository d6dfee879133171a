#pragma once

#include <json.hpp>

#include "skeltop/skeleton.hpp"
#include "skeltop/volume.hpp"

namespace skeltop {

/// Weights and pipeline parameters of the topology-aware skeleton loss.
struct TaslWeights {
    double lambda_node = 1.0;
    double lambda_edge = 0.5;
    double lambda_path = 0.5;
    double epsilon = 1e-8;
    double tau = 0.5;  // binarisation threshold for probability inputs
    double r = 2.0;    // skeleton graph adjacency radius, voxel units

    /// Throws InvalidParameter when a field is out of its domain.
    void validate() const;
};

struct TaslBreakdown {
    double l_node = 0.0;
    double l_edge = 0.0;
    double l_path = 0.0;
    double total = 0.0;
    bool degenerate = false;  // ground-truth skeleton graph was empty
    bool pred_empty = false;  // predicted graph empty; l_node saturated
};

/// Symmetric mean nearest-neighbour distance between the two node sets.
/// Throws EmptyGraph if either graph has no nodes.
double node_discrepancy(const SkeletonGraph& pred, const SkeletonGraph& gt);

/// ||E_pred| - |E_gt|| / (|E_gt| + eps)
double edge_discrepancy(const SkeletonGraph& pred, const SkeletonGraph& gt, double epsilon);

/// |l(pred) - l(gt)| / (l(gt) + eps), l = mean component size (0 when empty).
double path_discrepancy(const SkeletonGraph& pred, const SkeletonGraph& gt, double epsilon);

/// Weighted combination of the three terms.
TaslBreakdown combine(double l_node, double l_edge, double l_path, const TaslWeights& w);

/// Loss between two prebuilt skeleton graphs, with the empty-graph policy:
/// empty gt -> all-zero breakdown flagged degenerate; empty pred -> l_node is
/// the diagonal of the gt voxel bounding box, the other terms by formula.
TaslBreakdown tasl_from_graphs(const SkeletonGraph& pred, const SkeletonGraph& gt,
                               const TaslWeights& w);

/// Full pipeline: threshold (probability inputs only), skeletonize, build
/// r-graphs, then tasl_from_graphs. Distances are in voxel units.
TaslBreakdown tasl(const Volume3D& pred, const Volume3D& gt, const TaslWeights& w = {});

nlohmann::json to_json(const TaslBreakdown& b, const TaslWeights& w);

}  // namespace skeltop
