#pragma once

#include <span>
#include <vector>

#include "skeltop/volume.hpp"

namespace skeltop {

inline constexpr double kCeClamp = 1e-7;

/// 1 - 2 sum(p g) / (sum(p^2) + sum(g^2) + eps), summed in flat-index order.
double dice_loss(const Volume3D& p, const Volume3D& g, double epsilon = 1e-8);

/// -sum[g ln p + (1-g) ln(1-p)] with p clamped to [kCeClamp, 1-kCeClamp].
double ce_loss(const Volume3D& p, const Volume3D& g);

struct ScaleLoss {
    double dice = 0.0;
    double ce = 0.0;
    double tasl = 0.0;
};

struct DeepSupervisionConfig {
    std::vector<double> scale_weights;
    double beta = 1.0;
    double epsilon_dice = 1e-8;

    /// lambda_s proportional to 2^-s over `scales` outputs, normalised to sum 1.
    static DeepSupervisionConfig halving(std::size_t scales, double beta = 1.0);

    void validate() const;
};

/// sum_s lambda_s (1 + beta tasl_s)(dice_s + ce_s)
double total_loss(std::span<const ScaleLoss> inputs, const DeepSupervisionConfig& cfg);

}  // namespace skeltop
