#pragma once

#include <optional>

#include <json.hpp>

#include "skeltop/swc.hpp"

namespace skeltop {

enum class EsaMode {
    Directed,   // prediction nodes -> nearest ground-truth node
    Symmetric,  // mean of both directed averages
};

/// Mean over prediction nodes of the distance to the nearest ground-truth node.
/// Throws UndefinedMetric on empty input.
double esa(const Morphology& pred, const Morphology& gt, EsaMode mode = EsaMode::Directed);

/// Mean nearest-gt distance over the prediction nodes farther than theta from
/// every gt node; 0 when there are none.
double dsa(const Morphology& pred, const Morphology& gt, double theta = 2.0);

/// Mismatched nodes of both traces (nearest distance to the other trace > theta)
/// over the total node count.
double pds(const Morphology& pred, const Morphology& gt, double theta = 2.0);

struct TraceOptions {
    double theta = 2.0;
    std::optional<double> resample_step;
    EsaMode esa_mode = EsaMode::Directed;
};

struct TraceReport {
    double esa = 0.0;
    double dsa = 0.0;
    double pds = 0.0;
    double match_threshold = 2.0;
    std::size_t n_pred = 0;
    std::size_t n_gt = 0;
    std::optional<double> resample_step;
    EsaMode esa_mode = EsaMode::Directed;
};

TraceReport evaluate_trace(const Morphology& pred, const Morphology& gt,
                           const TraceOptions& options = {});

nlohmann::json to_json(const TraceReport& r);

}  // namespace skeltop
