#pragma once

#include <cstdint>
#include <random>
#include <utility>

#include <json.hpp>

#include "skeltop/swc.hpp"
#include "skeltop/volume.hpp"

namespace skeltop {

/// Portable random stream over std::mt19937_64. The uniform and normal
/// conversions are implemented here rather than with <random> distributions,
/// whose output differs between standard libraries.
///
/// Streams: tree geometry draws from seed `s`; rasterisation noise draws from
/// seed `s ^ 0x9E3779B97F4A7C15`.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }
    /// [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// [0, n)
    std::size_t index(std::size_t n) {
        return static_cast<std::size_t>(uniform() * static_cast<double>(n));
    }
    /// Standard normal via Box-Muller (one value per call).
    double normal();

private:
    std::mt19937_64 engine_;
};

inline constexpr std::uint64_t kNoiseStream = 0x9E3779B97F4A7C15ull;

struct SynthSpec {
    std::uint64_t seed = 1;
    Dims dims{48, 48, 48};
    int n_branch_points = 2;
    double segment_length_min = 8.0;
    double segment_length_max = 12.0;
    double tube_radius = 1.5;
    double noise_sigma = 0.0;
    double blur_sigma = 0.0;

    void validate() const;
};

SynthSpec synth_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SynthSpec& s);

/// Random tree: a main path of up to four segments from a root, plus
/// `n_branch_points` side branches of up to two segments each. Branch
/// directions lie in the forward hemisphere of the parent segment; segments
/// keep a clearance from unrelated parts of the tree. Node ids start at 1,
/// SWC x/y/z map to voxel x/y/z. Throws GenerationError when the tree cannot
/// be placed inside the volume.
Morphology generate_tree(const SynthSpec& spec);

struct Rasterized {
    Volume3D mask;
    Volume3D prob;
};

/// mask: union of tube_radius balls swept along every segment, plus every
/// node voxel. prob: mask blurred with a Gaussian of blur_sigma, plus
/// N(0, noise_sigma) noise, clamped to [0, 1].
Rasterized rasterize(const Morphology& m, const SynthSpec& spec);

/// First node of every side branch: all children of a branch point except the
/// lowest-id one.
std::vector<std::int64_t> branch_heads(const Morphology& m);

}  // namespace skeltop
