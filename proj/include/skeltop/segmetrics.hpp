#pragma once

#include <cstddef>
#include <optional>

#include <json.hpp>

#include "skeltop/volume.hpp"

namespace skeltop {

struct ConfusionCounts {
    std::size_t tp = 0, fp = 0, fn = 0;
};

/// Fractions in [0,1]; any 0/0 is reported as 0.
struct PrecisionRecall {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    ConfusionCounts counts;
};

PrecisionRecall precision_recall_f1(const Volume3D& pred, const Volume3D& gt);

enum class Hd95Mode {
    Directed,   // prediction surface -> ground-truth surface
    Symmetric,  // max of both directions
};

enum class DistanceUnits { Voxel, Physical };

/// Nearest-rank 95th percentile (ceil(0.95 n)-th smallest) of distances from
/// each source surface voxel to the nearest target surface voxel.
/// Throws UndefinedMetric if either mask is empty.
double hd95(const Volume3D& pred, const Volume3D& gt, Hd95Mode mode = Hd95Mode::Directed,
            DistanceUnits units = DistanceUnits::Voxel);

/// Index (0-based) of the nearest-rank q-th percentile in a sorted sample of size n.
std::size_t nearest_rank_index(std::size_t n, unsigned percent);

struct SegReport {
    PrecisionRecall prf;
    std::optional<double> hd95_directed;   // empty when undefined
    std::optional<double> hd95_symmetric;
    DistanceUnits units = DistanceUnits::Voxel;
};

SegReport evaluate_segmentation(const Volume3D& pred, const Volume3D& gt,
                                DistanceUnits units = DistanceUnits::Voxel);

/// Precision, recall and F1 are emitted as percentages.
nlohmann::json to_json(const SegReport& r);

}  // namespace skeltop
