#include "skeltop/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <string>

#include "skeltop/error.hpp"

namespace skeltop {

namespace {

using Vec3 = std::array<double, 3>;  // (x, y, z)

Vec3 add(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
Vec3 sub(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
Vec3 scale(const Vec3& a, double s) { return {a[0] * s, a[1] * s, a[2] * s}; }
double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

double point_segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
    const Vec3 ab = sub(b, a);
    const double len2 = dot(ab, ab);
    double t = len2 > 0 ? dot(sub(p, a), ab) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return norm(sub(p, add(a, scale(ab, t))));
}

// Direction within `half_angle` of `axis`, uniform over the spherical cap.
Vec3 sample_cap(Rng& rng, const Vec3& axis, double half_angle) {
    const double cos_t = rng.uniform(std::cos(half_angle), 1.0);
    const double sin_t = std::sqrt(std::max(0.0, 1.0 - cos_t * cos_t));
    const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const Vec3 helper = std::abs(axis[0]) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
    Vec3 u = cross(axis, helper);
    u = scale(u, 1.0 / norm(u));
    const Vec3 v = cross(axis, u);
    return add(scale(axis, cos_t), add(scale(u, sin_t * std::cos(phi)), scale(v, sin_t * std::sin(phi))));
}

struct Segment {
    Vec3 a, b;
};

class TreeBuilder {
public:
    TreeBuilder(const SynthSpec& spec, Rng& rng) : spec_(spec), rng_(rng) {
        margin_ = spec.tube_radius;
        hi_ = {static_cast<double>(spec.dims.width) - 1.0 - margin_,
               static_cast<double>(spec.dims.height) - 1.0 - margin_,
               static_cast<double>(spec.dims.depth) - 1.0 - margin_};
        clearance_ = 2.0 * spec.tube_radius + 3.0;
    }

    bool inside(const Vec3& p) const {
        for (int k = 0; k < 3; ++k) {
            if (p[static_cast<std::size_t>(k)] < margin_ || p[static_cast<std::size_t>(k)] > hi_[static_cast<std::size_t>(k)]) return false;
        }
        return true;
    }

    std::int64_t add_root() {
        Vec3 p;
        for (std::size_t k = 0; k < 3; ++k) {
            const double mid = 0.5 * (margin_ + hi_[k]);
            const double span = 0.25 * (hi_[k] - margin_);
            p[k] = rng_.uniform(mid - span, mid + span);
        }
        return add_node(p, -1, 1);
    }

    // Tries to grow one segment from `from` with a direction in the cap around
    // `axis`. Returns the new node id, or -1.
    std::int64_t grow(std::int64_t from, const Vec3& axis, double half_angle) {
        constexpr int kAttempts = 64;
        const Vec3 start = pos(from);
        for (int attempt = 0; attempt < kAttempts; ++attempt) {
            const Vec3 dir = sample_cap(rng_, axis, half_angle);
            const double len = rng_.uniform(spec_.segment_length_min, spec_.segment_length_max);
            const Vec3 end = add(start, scale(dir, len));
            if (!inside(end) || !clear(start, end)) continue;
            const auto id = add_node(end, from, 3);
            segments_.push_back({start, end});
            return id;
        }
        return -1;
    }

    Vec3 direction_into(std::int64_t id) const {
        const auto& r = records_.at(static_cast<std::size_t>(id - 1));
        if (r.parent == -1) return {1, 0, 0};
        const Vec3 d = sub(pos(id), pos(r.parent));
        return scale(d, 1.0 / norm(d));
    }

    std::size_t child_count(std::int64_t id) const {
        return static_cast<std::size_t>(std::count_if(
            records_.begin(), records_.end(), [id](const SwcRecord& r) { return r.parent == id; }));
    }

    Vec3 pos(std::int64_t id) const {
        const auto& r = records_.at(static_cast<std::size_t>(id - 1));
        return {r.x, r.y, r.z};
    }

    std::vector<SwcRecord>& records() { return records_; }

private:
    std::int64_t add_node(const Vec3& p, std::int64_t parent, int type) {
        const auto id = static_cast<std::int64_t>(records_.size()) + 1;
        records_.push_back({id, type, p[0], p[1], p[2], spec_.tube_radius, parent});
        return id;
    }

    // Points of the new segment farther than `clearance_` from its start must
    // keep that clearance from every existing segment.
    bool clear(const Vec3& a, const Vec3& b) const {
        const double len = norm(sub(b, a));
        const int samples = static_cast<int>(std::ceil(len / 0.5));
        for (int s = 0; s <= samples; ++s) {
            const Vec3 p = add(a, scale(sub(b, a), static_cast<double>(s) / samples));
            if (norm(sub(p, a)) < clearance_) continue;
            for (const auto& seg : segments_) {
                if (point_segment_distance(p, seg.a, seg.b) < clearance_) return false;
            }
        }
        return true;
    }

    const SynthSpec& spec_;
    Rng& rng_;
    double margin_;
    Vec3 hi_;
    double clearance_;
    std::vector<SwcRecord> records_;
    std::vector<Segment> segments_;
};

// One attempt on the shared stream; on failure returns nothing and sets `why`.
std::optional<std::vector<SwcRecord>> build_tree(const SynthSpec& spec, Rng& rng, std::string& why) {
    constexpr int kMainSegments = 4;
    constexpr int kBranchSegments = 2;
    constexpr double kMainBend = std::numbers::pi / 4;
    constexpr double kForward = std::numbers::pi / 2;

    TreeBuilder tree(spec, rng);
    const auto root = tree.add_root();
    auto tip = tree.grow(root, sample_cap(rng, {0, 0, 1}, std::numbers::pi), kMainBend);
    if (tip < 0) {
        why = "cannot place a segment of length >= " + std::to_string(spec.segment_length_min);
        return std::nullopt;
    }
    for (int s = 1; s < kMainSegments; ++s) {
        const auto next = tree.grow(tip, tree.direction_into(tip), kMainBend);
        if (next < 0) break;
        tip = next;
    }

    for (int b = 0; b < spec.n_branch_points; ++b) {
        std::vector<std::int64_t> candidates;
        for (const auto& r : tree.records()) {
            if (r.parent != -1 && tree.child_count(r.id) == 1) candidates.push_back(r.id);
        }
        for (std::size_t i = candidates.size(); i > 1; --i) {
            std::swap(candidates[i - 1], candidates[rng.index(i)]);
        }
        bool placed = false;
        for (const auto from : candidates) {
            auto head = tree.grow(from, tree.direction_into(from), kForward);
            if (head < 0) continue;
            for (int s = 1; s < kBranchSegments; ++s) {
                const auto next = tree.grow(head, tree.direction_into(head), kMainBend);
                if (next < 0) break;
                head = next;
            }
            placed = true;
            break;
        }
        if (!placed) {
            why = "cannot place branch point " + std::to_string(b + 1) + " of " +
                  std::to_string(spec.n_branch_points);
            return std::nullopt;
        }
    }
    return std::move(tree.records());
}

std::vector<float> gaussian_blur(const std::vector<float>& in, Dims dims, double sigma) {
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> w(static_cast<std::size_t>(2 * radius + 1));
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        w[static_cast<std::size_t>(i + radius)] = std::exp(-(i * i) / (2.0 * sigma * sigma));
        sum += w[static_cast<std::size_t>(i + radius)];
    }
    for (auto& v : w) v /= sum;

    std::vector<double> cur(in.begin(), in.end()), next(in.size());
    const std::array<std::size_t, 3> extent = {dims.depth, dims.height, dims.width};
    const std::array<std::size_t, 3> stride = {dims.height * dims.width, dims.width, 1};
    for (std::size_t axis = 0; axis < 3; ++axis) {
        for (std::size_t i = 0; i < cur.size(); ++i) {
            const auto pos = static_cast<long>((i / stride[axis]) % extent[axis]);
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k) {
                const long q = pos + k;
                if (q < 0 || q >= static_cast<long>(extent[axis])) continue;
                acc += w[static_cast<std::size_t>(k + radius)] *
                       cur[static_cast<std::size_t>(static_cast<long>(i) + k * static_cast<long>(stride[axis]))];
            }
            next[i] = acc;
        }
        std::swap(cur, next);
    }
    return std::vector<float>(cur.begin(), cur.end());
}

}  // namespace

double Rng::normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

void SynthSpec::validate() const {
    if (dims.voxel_count() == 0) throw InvalidParameter("synth dims must be positive");
    if (n_branch_points < 0) throw InvalidParameter("n_branch_points must be >= 0");
    if (!(segment_length_min > 0) || !(segment_length_min <= segment_length_max)) {
        throw InvalidParameter("segment_length needs 0 < min <= max");
    }
    if (!(tube_radius > 0)) throw InvalidParameter("tube_radius must be positive");
    if (!(noise_sigma >= 0) || !(blur_sigma >= 0)) {
        throw InvalidParameter("noise_sigma and blur_sigma must be non-negative");
    }
}

SynthSpec synth_spec_from_json(const nlohmann::json& j) {
    SynthSpec s;
    const auto get = [&](const char* name, auto& out) {
        if (!j.contains(name)) return;
        try {
            j.at(name).get_to(out);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("field \"") + name + "\"", e.what());
        }
    };
    if (!j.is_object()) throw ParseError("spec", "expected a JSON object");
    get("seed", s.seed);
    if (j.contains("dims")) {
        std::vector<long long> d;
        get("dims", d);
        if (d.size() != 3 || std::any_of(d.begin(), d.end(), [](long long v) { return v <= 0; })) {
            throw ParseError("field \"dims\"", "expected three positive integers [d,h,w]");
        }
        s.dims = {static_cast<std::size_t>(d[0]), static_cast<std::size_t>(d[1]),
                  static_cast<std::size_t>(d[2])};
    }
    get("n_branch_points", s.n_branch_points);
    if (j.contains("segment_length")) {
        std::vector<double> seg;
        get("segment_length", seg);
        if (seg.size() != 2) throw ParseError("field \"segment_length\"", "expected [min, max]");
        s.segment_length_min = seg[0];
        s.segment_length_max = seg[1];
    }
    get("tube_radius", s.tube_radius);
    get("noise_sigma", s.noise_sigma);
    get("blur_sigma", s.blur_sigma);
    try {
        s.validate();
    } catch (const InvalidParameter& e) {
        throw ParseError("spec", e.what());
    }
    return s;
}

nlohmann::json to_json(const SynthSpec& s) {
    return {{"seed", s.seed},
            {"dims", {s.dims.depth, s.dims.height, s.dims.width}},
            {"n_branch_points", s.n_branch_points},
            {"segment_length", {s.segment_length_min, s.segment_length_max}},
            {"tube_radius", s.tube_radius},
            {"noise_sigma", s.noise_sigma},
            {"blur_sigma", s.blur_sigma}};
}

Morphology generate_tree(const SynthSpec& spec) {
    spec.validate();
    const std::array<std::size_t, 3> extent = {spec.dims.width, spec.dims.height, spec.dims.depth};
    for (auto e : extent) {
        if (static_cast<double>(e) - 1.0 - 2.0 * spec.tube_radius < 0.0) {
            throw GenerationError("volume " + spec.dims.to_string() + " is too small for tube radius " +
                                  std::to_string(spec.tube_radius));
        }
    }

    Rng rng(spec.seed);
    constexpr int kTreeAttempts = 16;
    std::string failure;
    for (int attempt = 0; attempt < kTreeAttempts; ++attempt) {
        if (auto records = build_tree(spec, rng, failure)) return Morphology{std::move(*records)};
    }
    throw GenerationError(failure + " inside " + spec.dims.to_string() + " after " +
                          std::to_string(kTreeAttempts) + " attempts");
}

Rasterized rasterize(const Morphology& m, const SynthSpec& spec) {
    spec.validate();
    const Dims dims = spec.dims;
    const auto mask = Volume3D::zeros(dims, VolumeKind::Binary);
    std::vector<float> data(dims.voxel_count(), 0.0f);

    std::map<std::int64_t, const SwcRecord*> by_id;
    for (const auto& r : m.records) by_id[r.id] = &r;

    const double rad = spec.tube_radius;
    const auto stamp = [&](const Vec3& a, const Vec3& b) {
        const auto lo = [&](std::size_t k) {
            return static_cast<long>(std::max(0.0, std::floor(std::min(a[k], b[k]) - rad)));
        };
        const auto hi = [&](std::size_t k, std::size_t n) {
            return static_cast<long>(std::min(static_cast<double>(n) - 1.0, std::ceil(std::max(a[k], b[k]) + rad)));
        };
        for (long z = lo(2); z <= hi(2, dims.depth); ++z)
            for (long y = lo(1); y <= hi(1, dims.height); ++y)
                for (long x = lo(0); x <= hi(0, dims.width); ++x) {
                    const Vec3 p{double(x), double(y), double(z)};
                    if (point_segment_distance(p, a, b) <= rad) {
                        data[mask.index(static_cast<std::size_t>(z), static_cast<std::size_t>(y),
                                        static_cast<std::size_t>(x))] = 1.0f;
                    }
                }
    };

    for (const auto& r : m.records) {
        const Vec3 p{r.x, r.y, r.z};
        const auto parent = by_id.find(r.parent);  // roots stamp a ball
        stamp(p, parent == by_id.end() ? p : Vec3{parent->second->x, parent->second->y, parent->second->z});
        const VoxelCoord c{static_cast<int>(std::lround(r.z)), static_cast<int>(std::lround(r.y)),
                           static_cast<int>(std::lround(r.x))};
        if (!mask.contains(c)) {
            throw InvalidParameter("node " + std::to_string(r.id) + " lies outside " + dims.to_string());
        }
        data[mask.index(c)] = 1.0f;
    }

    std::vector<float> prob = data;
    if (spec.blur_sigma > 0) prob = gaussian_blur(prob, dims, spec.blur_sigma);
    if (spec.noise_sigma > 0) {
        Rng noise(spec.seed ^ kNoiseStream);
        for (auto& v : prob) v = static_cast<float>(static_cast<double>(v) + spec.noise_sigma * noise.normal());
    }
    for (auto& v : prob) v = std::clamp(v, 0.0f, 1.0f);

    return {Volume3D(dims, VolumeKind::Binary, std::move(data)),
            Volume3D(dims, VolumeKind::Probability, std::move(prob))};
}

std::vector<std::int64_t> branch_heads(const Morphology& m) {
    std::map<std::int64_t, std::vector<std::int64_t>> children;
    for (const auto& r : m.records) {
        if (r.parent != -1) children[r.parent].push_back(r.id);
    }
    std::vector<std::int64_t> heads;
    for (auto& [parent, kids] : children) {
        if (kids.size() < 2) continue;
        std::sort(kids.begin(), kids.end());
        heads.insert(heads.end(), kids.begin() + 1, kids.end());
    }
    std::sort(heads.begin(), heads.end());
    return heads;
}

}  // namespace skeltop
