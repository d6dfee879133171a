#pragma once
// Independent brute-force references for the library's accelerated paths.
// Nothing here calls into the code it checks.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <queue>
#include <set>
#include <vector>

#include "skeltop/inflate.hpp"
#include "skeltop/skeleton.hpp"
#include "skeltop/swc.hpp"
#include "skeltop/volume.hpp"

namespace oracle {

using P3 = std::array<double, 3>;

inline double dist(const P3& a, const P3& b) {
    return std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) +
                     (a[2] - b[2]) * (a[2] - b[2]));
}

/// All-pairs nearest distance from each query to `points`.
inline std::vector<double> nearest(const std::vector<P3>& queries, const std::vector<P3>& points) {
    std::vector<double> out;
    for (const auto& q : queries) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& p : points) best = std::min(best, dist(q, p));
        out.push_back(best);
    }
    return out;
}

inline std::vector<P3> positions(const skeltop::Morphology& m) {
    std::vector<P3> out;
    for (const auto& r : m.records) out.push_back({r.x, r.y, r.z});
    return out;
}

inline double mean(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

inline double esa(const skeltop::Morphology& pred, const skeltop::Morphology& gt) {
    return mean(nearest(positions(pred), positions(gt)));
}

inline double dsa(const skeltop::Morphology& pred, const skeltop::Morphology& gt, double theta) {
    std::vector<double> far;
    for (double d : nearest(positions(pred), positions(gt))) {
        if (d > theta) far.push_back(d);
    }
    return far.empty() ? 0.0 : mean(far);
}

inline double pds(const skeltop::Morphology& pred, const skeltop::Morphology& gt, double theta) {
    double bad = 0;
    for (double d : nearest(positions(pred), positions(gt))) bad += d > theta;
    for (double d : nearest(positions(gt), positions(pred))) bad += d > theta;
    return bad / static_cast<double>(pred.size() + gt.size());
}

/// Foreground voxels with a background or out-of-range 6-neighbour, by scan.
inline std::vector<P3> surface(const skeltop::Volume3D& m) {
    std::vector<P3> out;
    const auto& d = m.dims();
    const auto fg = [&](long z, long y, long x) {
        if (z < 0 || y < 0 || x < 0 || z >= long(d.depth) || y >= long(d.height) || x >= long(d.width)) {
            return false;
        }
        return m.at(size_t(z), size_t(y), size_t(x)) > 0;
    };
    for (long z = 0; z < long(d.depth); ++z)
        for (long y = 0; y < long(d.height); ++y)
            for (long x = 0; x < long(d.width); ++x) {
                if (!fg(z, y, x)) continue;
                if (!fg(z - 1, y, x) || !fg(z + 1, y, x) || !fg(z, y - 1, x) || !fg(z, y + 1, x) ||
                    !fg(z, y, x - 1) || !fg(z, y, x + 1)) {
                    out.push_back({double(z), double(y), double(x)});
                }
            }
    return out;
}

/// Directed HD95 by sorting all nearest distances and indexing ceil(0.95 n).
inline double hd95_directed(const skeltop::Volume3D& pred, const skeltop::Volume3D& gt) {
    auto d = nearest(surface(pred), surface(gt));
    std::sort(d.begin(), d.end());
    const auto rank = static_cast<size_t>(std::ceil(0.95 * static_cast<double>(d.size()) - 1e-9));
    return d[rank - 1];
}

/// Edge set of an r-graph by all-pairs scan over explicit coordinates.
inline std::set<std::pair<uint32_t, uint32_t>> edges(const std::vector<skeltop::VoxelCoord>& nodes,
                                                     double r) {
    std::set<std::pair<uint32_t, uint32_t>> out;
    for (uint32_t i = 0; i < nodes.size(); ++i)
        for (uint32_t j = i + 1; j < nodes.size(); ++j) {
            const P3 a{double(nodes[i].z), double(nodes[i].y), double(nodes[i].x)};
            const P3 b{double(nodes[j].z), double(nodes[j].y), double(nodes[j].x)};
            if (dist(a, b) <= r) out.insert({i, j});
        }
    return out;
}

/// Component labels by BFS; components ordered by smallest member.
inline std::vector<std::vector<uint32_t>> components(size_t n,
                                                     const std::vector<skeltop::Edge>& edges) {
    std::vector<std::vector<uint32_t>> adj(n);
    for (auto [a, b] : edges) {
        adj[a].push_back(b);
        adj[b].push_back(a);
    }
    std::vector<int> label(n, -1);
    std::vector<std::vector<uint32_t>> out;
    for (uint32_t s = 0; s < n; ++s) {
        if (label[s] >= 0) continue;
        out.emplace_back();
        std::queue<uint32_t> q;
        q.push(s);
        label[s] = int(out.size() - 1);
        while (!q.empty()) {
            auto v = q.front();
            q.pop();
            out.back().push_back(v);
            for (auto u : adj[v]) {
                if (label[u] < 0) {
                    label[u] = label[s];
                    q.push(u);
                }
            }
        }
        std::sort(out.back().begin(), out.back().end());
    }
    return out;
}

/// 26-connected component count by BFS over a std::set of coordinates.
inline size_t components26(const skeltop::Volume3D& m) {
    std::set<std::array<int, 3>> left;
    for (const auto& c : m.foreground()) left.insert({c.z, c.y, c.x});
    size_t count = 0;
    while (!left.empty()) {
        ++count;
        std::vector<std::array<int, 3>> stack{*left.begin()};
        left.erase(left.begin());
        while (!stack.empty()) {
            auto c = stack.back();
            stack.pop_back();
            for (int dz = -1; dz <= 1; ++dz)
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        auto it = left.find({c[0] + dz, c[1] + dy, c[2] + dx});
                        if (it != left.end()) {
                            stack.push_back(*it);
                            left.erase(it);
                        }
                    }
        }
    }
    return count;
}

inline bool has_2x2x2_block(const skeltop::Volume3D& m) {
    const auto& d = m.dims();
    for (size_t z = 0; z + 1 < d.depth; ++z)
        for (size_t y = 0; y + 1 < d.height; ++y)
            for (size_t x = 0; x + 1 < d.width; ++x) {
                bool full = true;
                for (size_t k = 0; k < 8 && full; ++k) {
                    full = m.at(z + (k >> 2), y + ((k >> 1) & 1), x + (k & 1)) > 0;
                }
                if (full) return true;
            }
    return false;
}

/// Zero-pad explicitly, then slide; shares no code with skeltop::conv2d.
inline skeltop::Field2D conv2d(const skeltop::Field2D& img, const skeltop::Kernel2D& k, size_t stride) {
    const size_t ph = k.k_h / 2, pw = k.k_w / 2;
    const size_t H = img.height + 2 * ph, W = img.width + 2 * pw;
    std::vector<double> padded(img.channels * H * W, 0.0);
    for (size_t c = 0; c < img.channels; ++c)
        for (size_t y = 0; y < img.height; ++y)
            for (size_t x = 0; x < img.width; ++x)
                padded[(c * H + y + ph) * W + x + pw] = img.data[(c * img.height + y) * img.width + x];
    skeltop::Field2D out{k.c_out, (H - k.k_h) / stride + 1, (W - k.k_w) / stride + 1, {}};
    out.data.assign(out.channels * out.height * out.width, 0.0);
    for (size_t o = 0; o < k.c_out; ++o)
        for (size_t y = 0; y < out.height; ++y)
            for (size_t x = 0; x < out.width; ++x) {
                double acc = 0;
                for (size_t c = 0; c < k.c_in; ++c)
                    for (size_t a = 0; a < k.k_h; ++a)
                        for (size_t b = 0; b < k.k_w; ++b)
                            acc += k.weights[((o * k.c_in + c) * k.k_h + a) * k.k_w + b] *
                                   padded[(c * H + y * stride + a) * W + x * stride + b];
                out.data[(o * out.height + y) * out.width + x] = acc;
            }
    return out;
}

inline skeltop::Field3D conv3d(const skeltop::Field3D& v, const skeltop::Kernel3D& k,
                               skeltop::Stride3 s) {
    const size_t pd = k.k_d / 2, ph = k.k_h / 2, pw = k.k_w / 2;
    const size_t D = v.depth + 2 * pd, H = v.height + 2 * ph, W = v.width + 2 * pw;
    std::vector<double> padded(v.channels * D * H * W, 0.0);
    for (size_t c = 0; c < v.channels; ++c)
        for (size_t z = 0; z < v.depth; ++z)
            for (size_t y = 0; y < v.height; ++y)
                for (size_t x = 0; x < v.width; ++x)
                    padded[((c * D + z + pd) * H + y + ph) * W + x + pw] =
                        v.data[((c * v.depth + z) * v.height + y) * v.width + x];
    skeltop::Field3D out{k.c_out, (D - k.k_d) / s.d + 1, (H - k.k_h) / s.h + 1, (W - k.k_w) / s.w + 1, {}};
    out.data.assign(out.channels * out.depth * out.height * out.width, 0.0);
    for (size_t o = 0; o < k.c_out; ++o)
        for (size_t z = 0; z < out.depth; ++z)
            for (size_t y = 0; y < out.height; ++y)
                for (size_t x = 0; x < out.width; ++x) {
                    double acc = 0;
                    for (size_t c = 0; c < k.c_in; ++c)
                        for (size_t a = 0; a < k.k_d; ++a)
                            for (size_t b = 0; b < k.k_h; ++b)
                                for (size_t e = 0; e < k.k_w; ++e)
                                    acc += k.weights[(((o * k.c_in + c) * k.k_d + a) * k.k_h + b) * k.k_w + e] *
                                           padded[((c * D + z * s.d + a) * H + y * s.h + b) * W + x * s.w + e];
                    out.data[((o * out.depth + z) * out.height + y) * out.width + x] = acc;
                }
    return out;
}

}  // namespace oracle
