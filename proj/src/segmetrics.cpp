#include "skeltop/segmetrics.hpp"

#include <algorithm>

#include "skeltop/error.hpp"
#include "skeltop/spatial.hpp"

namespace skeltop {

namespace {

double ratio(std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

std::vector<Point3> surface_points(const Volume3D& mask, DistanceUnits units) {
    const auto& s = mask.spacing();
    const bool phys = units == DistanceUnits::Physical;
    std::vector<Point3> pts;
    for (const auto& c : surface_voxels(mask)) {
        pts.push_back({c.z * (phys ? s.z : 1.0), c.y * (phys ? s.y : 1.0), c.x * (phys ? s.x : 1.0)});
    }
    return pts;
}

double directed_hd95(const std::vector<Point3>& from, const std::vector<Point3>& to) {
    auto d = nearest_distances(from, KdTree(to));
    const auto k = nearest_rank_index(d.size(), 95);
    std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k), d.end());
    return d[k];
}

}  // namespace

PrecisionRecall precision_recall_f1(const Volume3D& pred, const Volume3D& gt) {
    require_same_dims(pred, gt, "precision_recall_f1");
    PrecisionRecall r;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const bool p = pred.data()[i] > 0.0f;
        const bool g = gt.data()[i] > 0.0f;
        r.counts.tp += p && g;
        r.counts.fp += p && !g;
        r.counts.fn += !p && g;
    }
    r.precision = ratio(r.counts.tp, r.counts.tp + r.counts.fp);
    r.recall = ratio(r.counts.tp, r.counts.tp + r.counts.fn);
    const double denom = r.precision + r.recall;
    r.f1 = denom > 0 ? 2.0 * r.precision * r.recall / denom : 0.0;
    return r;
}

std::size_t nearest_rank_index(std::size_t n, unsigned percent) {
    if (n == 0) throw UndefinedMetric("percentile of an empty sample");
    const std::size_t rank = (static_cast<std::size_t>(percent) * n + 99) / 100;  // ceil(q n)
    return std::max<std::size_t>(rank, 1) - 1;
}

double hd95(const Volume3D& pred, const Volume3D& gt, Hd95Mode mode, DistanceUnits units) {
    require_same_dims(pred, gt, "hd95");
    const auto ps = surface_points(pred, units);
    const auto gs = surface_points(gt, units);
    if (ps.empty() || gs.empty()) {
        throw UndefinedMetric("HD95 is undefined for an empty mask");
    }
    const double forward = directed_hd95(ps, gs);
    if (mode == Hd95Mode::Directed) return forward;
    return std::max(forward, directed_hd95(gs, ps));
}

SegReport evaluate_segmentation(const Volume3D& pred, const Volume3D& gt, DistanceUnits units) {
    SegReport r;
    r.prf = precision_recall_f1(pred, gt);
    r.units = units;
    if (pred.foreground_count() > 0 && gt.foreground_count() > 0) {
        r.hd95_directed = hd95(pred, gt, Hd95Mode::Directed, units);
        r.hd95_symmetric = hd95(pred, gt, Hd95Mode::Symmetric, units);
    }
    return r;
}

nlohmann::json to_json(const SegReport& r) {
    const auto opt = [](const std::optional<double>& v) {
        return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
    };
    return {
        {"schema", 1},
        {"precision_pct", 100.0 * r.prf.precision},
        {"recall_pct", 100.0 * r.prf.recall},
        {"f1_pct", 100.0 * r.prf.f1},
        {"tp", r.prf.counts.tp},
        {"fp", r.prf.counts.fp},
        {"fn", r.prf.counts.fn},
        {"hd95_directed", opt(r.hd95_directed)},
        {"hd95_symmetric", opt(r.hd95_symmetric)},
        {"hd95_percentile", "nearest-rank"},
        {"distance_units", r.units == DistanceUnits::Voxel ? "voxel" : "physical"},
    };
}

}  // namespace skeltop
