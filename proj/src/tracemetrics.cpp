#include "skeltop/tracemetrics.hpp"

#include <numeric>

#include "skeltop/error.hpp"
#include "skeltop/spatial.hpp"

namespace skeltop {

namespace {

std::vector<double> nearest_to(const Morphology& from, const Morphology& to) {
    const auto q = node_positions(from);
    return nearest_distances(q, KdTree(node_positions(to)));
}

double mean(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

void require_theta(double theta) {
    if (!(theta > 0)) throw InvalidParameter("match threshold theta must be positive");
}

}  // namespace

double esa(const Morphology& pred, const Morphology& gt, EsaMode mode) {
    if (pred.empty() || gt.empty()) throw UndefinedMetric("ESA needs two non-empty traces");
    const double forward = mean(nearest_to(pred, gt));
    if (mode == EsaMode::Directed) return forward;
    return 0.5 * (forward + mean(nearest_to(gt, pred)));
}

double dsa(const Morphology& pred, const Morphology& gt, double theta) {
    require_theta(theta);
    if (gt.empty()) throw UndefinedMetric("DSA needs a non-empty ground-truth trace");
    double sum = 0.0;
    std::size_t count = 0;
    for (double d : nearest_to(pred, gt)) {
        if (d > theta) {
            sum += d;
            ++count;
        }
    }
    return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

double pds(const Morphology& pred, const Morphology& gt, double theta) {
    require_theta(theta);
    if (pred.empty() && gt.empty()) throw UndefinedMetric("PDS needs at least one node");
    std::size_t mismatched = 0;
    if (gt.empty() || pred.empty()) {
        mismatched = pred.size() + gt.size();
    } else {
        for (double d : nearest_to(pred, gt)) mismatched += d > theta;
        for (double d : nearest_to(gt, pred)) mismatched += d > theta;
    }
    return static_cast<double>(mismatched) / static_cast<double>(pred.size() + gt.size());
}

TraceReport evaluate_trace(const Morphology& pred, const Morphology& gt,
                           const TraceOptions& options) {
    require_theta(options.theta);
    const Morphology p = options.resample_step ? resample(pred, *options.resample_step) : pred;
    const Morphology g = options.resample_step ? resample(gt, *options.resample_step) : gt;
    TraceReport r;
    r.esa = esa(p, g, options.esa_mode);
    r.dsa = dsa(p, g, options.theta);
    r.pds = pds(p, g, options.theta);
    r.match_threshold = options.theta;
    r.n_pred = p.size();
    r.n_gt = g.size();
    r.resample_step = options.resample_step;
    r.esa_mode = options.esa_mode;
    return r;
}

nlohmann::json to_json(const TraceReport& r) {
    return {
        {"schema", 1},
        {"esa", r.esa},
        {"dsa", r.dsa},
        {"pds", r.pds},
        {"esa_mode", r.esa_mode == EsaMode::Directed ? "directed" : "symmetric"},
        {"match_threshold", r.match_threshold},
        {"n_pred", r.n_pred},
        {"n_gt", r.n_gt},
        {"resample_step", r.resample_step ? nlohmann::json(*r.resample_step) : nlohmann::json(nullptr)},
    };
}

}  // namespace skeltop
