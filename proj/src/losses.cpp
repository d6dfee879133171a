#include "skeltop/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "skeltop/error.hpp"

namespace skeltop {

double dice_loss(const Volume3D& p, const Volume3D& g, double epsilon) {
    require_same_dims(p, g, "dice_loss");
    if (!(epsilon > 0)) throw InvalidParameter("dice epsilon must be positive");
    double inter = 0.0, pp = 0.0, gg = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double pi = p.data()[i];
        const double gi = g.data()[i];
        inter += pi * gi;
        pp += pi * pi;
        gg += gi * gi;
    }
    return 1.0 - 2.0 * inter / (pp + gg + epsilon);
}

double ce_loss(const Volume3D& p, const Volume3D& g) {
    require_same_dims(p, g, "ce_loss");
    double sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double pi = std::clamp(static_cast<double>(p.data()[i]), kCeClamp, 1.0 - kCeClamp);
        const double gi = g.data()[i];
        sum += gi * std::log(pi) + (1.0 - gi) * std::log(1.0 - pi);
    }
    return -sum;
}

DeepSupervisionConfig DeepSupervisionConfig::halving(std::size_t scales, double beta) {
    DeepSupervisionConfig cfg;
    cfg.beta = beta;
    double w = 1.0, sum = 0.0;
    for (std::size_t s = 0; s < scales; ++s, w *= 0.5) {
        cfg.scale_weights.push_back(w);
        sum += w;
    }
    for (auto& v : cfg.scale_weights) v /= sum;
    return cfg;
}

void DeepSupervisionConfig::validate() const {
    if (std::any_of(scale_weights.begin(), scale_weights.end(),
                    [](double v) { return !(v >= 0) || !std::isfinite(v); })) {
        throw InvalidParameter("scale weights must be finite and non-negative");
    }
    if (std::none_of(scale_weights.begin(), scale_weights.end(), [](double v) { return v > 0; })) {
        throw InvalidParameter("at least one scale weight must be positive");
    }
    if (!(beta >= 0) || !std::isfinite(beta)) throw InvalidParameter("beta must be non-negative");
    if (!(epsilon_dice > 0)) throw InvalidParameter("dice epsilon must be positive");
}

double total_loss(std::span<const ScaleLoss> inputs, const DeepSupervisionConfig& cfg) {
    cfg.validate();
    if (inputs.size() != cfg.scale_weights.size()) {
        throw DimensionMismatch("total_loss: " + std::to_string(inputs.size()) +
                                " scale inputs but " + std::to_string(cfg.scale_weights.size()) +
                                " scale weights");
    }
    double total = 0.0;
    for (std::size_t s = 0; s < inputs.size(); ++s) {
        const auto& in = inputs[s];
        if (!std::isfinite(in.dice) || !std::isfinite(in.ce) || !std::isfinite(in.tasl) ||
            in.dice < 0 || in.dice > 1 || in.ce < 0 || in.tasl < 0) {
            throw InvalidParameter("scale " + std::to_string(s) +
                                   ": need finite dice in [0,1], ce >= 0, tasl >= 0");
        }
        total += cfg.scale_weights[s] * (1.0 + cfg.beta * in.tasl) * (in.dice + in.ce);
    }
    return total;
}

}  // namespace skeltop
