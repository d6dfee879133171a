#include "skeltop/skeleton.hpp"

#include <algorithm>
#include <array>
#include <numeric>

#include "skeltop/error.hpp"
#include "skeltop/spatial.hpp"

namespace skeltop {

namespace {

// 3x3x3 neighbourhood index of offset (dz, dy, dx); 13 is the centre.
constexpr int nb(int dz, int dy, int dx) { return (dz + 1) * 9 + (dy + 1) * 3 + (dx + 1); }
constexpr int kCenter = 13;

using Neighborhood = std::array<std::uint8_t, 27>;

// Cells of the centre cube's boundary together with the neighbour cubes that
// also contain them. A cell disappears with the centre voxel iff none of its
// sharing cubes is foreground.
struct CellTable {
    std::array<std::array<int, 1>, 6> faces{};
    std::array<std::array<int, 3>, 12> edges{};
    std::array<std::array<int, 7>, 8> vertices{};
    std::array<std::vector<int>, 27> adjacency;  // 26-adjacency between neighbourhood slots

    CellTable() {
        int f = 0;
        for (int axis = 0; axis < 3; ++axis) {
            for (int s : {-1, 1}) {
                int o[3] = {0, 0, 0};
                o[axis] = s;
                faces[static_cast<std::size_t>(f++)] = {nb(o[0], o[1], o[2])};
            }
        }
        int e = 0;
        for (int axis = 0; axis < 3; ++axis) {
            const int a1 = (axis + 1) % 3;
            const int a2 = (axis + 2) % 3;
            for (int s1 : {-1, 1}) {
                for (int s2 : {-1, 1}) {
                    int k = 0;
                    for (int t1 : {0, s1}) {
                        for (int t2 : {0, s2}) {
                            if (t1 == 0 && t2 == 0) continue;
                            int o[3] = {0, 0, 0};
                            o[a1] = t1;
                            o[a2] = t2;
                            edges[static_cast<std::size_t>(e)][static_cast<std::size_t>(k++)] =
                                nb(o[0], o[1], o[2]);
                        }
                    }
                    ++e;
                }
            }
        }
        int v = 0;
        for (int s0 : {-1, 1}) {
            for (int s1 : {-1, 1}) {
                for (int s2 : {-1, 1}) {
                    int k = 0;
                    for (int t0 : {0, s0}) {
                        for (int t1 : {0, s1}) {
                            for (int t2 : {0, s2}) {
                                if (t0 == 0 && t1 == 0 && t2 == 0) continue;
                                vertices[static_cast<std::size_t>(v)][static_cast<std::size_t>(k++)] =
                                    nb(t0, t1, t2);
                            }
                        }
                    }
                    ++v;
                }
            }
        }
        for (int a = 0; a < 27; ++a) {
            if (a == kCenter) continue;
            for (int b = 0; b < 27; ++b) {
                if (b == kCenter || b == a) continue;
                const int dz = a / 9 - b / 9;
                const int dy = (a / 3) % 3 - (b / 3) % 3;
                const int dx = a % 3 - b % 3;
                if (std::abs(dz) <= 1 && std::abs(dy) <= 1 && std::abs(dx) <= 1) {
                    adjacency[static_cast<std::size_t>(a)].push_back(b);
                }
            }
        }
    }
};

const CellTable& cells() {
    static const CellTable table;
    return table;
}

template <std::size_t N>
bool any_set(const Neighborhood& n, const std::array<int, N>& slots) {
    return std::any_of(slots.begin(), slots.end(),
                       [&](int s) { return n[static_cast<std::size_t>(s)] != 0; });
}

// Removing the centre keeps the Euler characteristic of the 26-connected
// object: +1 (cube) - lost faces + lost edges - lost vertices == 0.
bool is_euler_invariant(const Neighborhood& n) {
    const auto& t = cells();
    int delta = 1;
    for (const auto& f : t.faces) delta -= any_set(n, f) ? 0 : 1;
    for (const auto& e : t.edges) delta += any_set(n, e) ? 0 : 1;
    for (const auto& v : t.vertices) delta -= any_set(n, v) ? 0 : 1;
    return delta == 0;
}

// The foreground 26-neighbours form exactly one 26-connected component.
bool has_single_neighbor_component(const Neighborhood& n) {
    const auto& t = cells();
    std::array<bool, 27> seen{};
    std::array<int, 27> stack{};
    int components = 0;
    for (int s = 0; s < 27; ++s) {
        if (s == kCenter || !n[static_cast<std::size_t>(s)] || seen[static_cast<std::size_t>(s)]) {
            continue;
        }
        if (++components > 1) return false;
        int top = 0;
        stack[static_cast<std::size_t>(top++)] = s;
        seen[static_cast<std::size_t>(s)] = true;
        while (top > 0) {
            const int cur = stack[static_cast<std::size_t>(--top)];
            for (int nbr : t.adjacency[static_cast<std::size_t>(cur)]) {
                if (n[static_cast<std::size_t>(nbr)] && !seen[static_cast<std::size_t>(nbr)]) {
                    seen[static_cast<std::size_t>(nbr)] = true;
                    stack[static_cast<std::size_t>(top++)] = nbr;
                }
            }
        }
    }
    return components == 1;
}

bool is_simple(const Neighborhood& n) {
    return is_euler_invariant(n) && has_single_neighbor_component(n);
}

// Zero-padded working copy so every foreground voxel has a full neighbourhood.
class PaddedGrid {
public:
    explicit PaddedGrid(const Volume3D& mask)
        : d_(mask.dims().depth + 2), h_(mask.dims().height + 2), w_(mask.dims().width + 2),
          cells_(d_ * h_ * w_, 0) {
        for (std::size_t z = 0; z < mask.dims().depth; ++z) {
            for (std::size_t y = 0; y < mask.dims().height; ++y) {
                for (std::size_t x = 0; x < mask.dims().width; ++x) {
                    cells_[idx(z + 1, y + 1, x + 1)] = mask.at(z, y, x) > 0.0f ? 1 : 0;
                }
            }
        }
    }

    std::size_t idx(std::size_t z, std::size_t y, std::size_t x) const {
        return (z * h_ + y) * w_ + x;
    }
    std::uint8_t& operator[](std::size_t i) { return cells_[i]; }
    std::uint8_t operator[](std::size_t i) const { return cells_[i]; }

    Neighborhood neighborhood(std::size_t i) const {
        Neighborhood n{};
        std::size_t k = 0;
        for (int dz = -1; dz <= 1; ++dz) {
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    const auto off = (static_cast<std::ptrdiff_t>(dz) * static_cast<std::ptrdiff_t>(h_) + dy) *
                                         static_cast<std::ptrdiff_t>(w_) + dx;
                    n[k++] = cells_[static_cast<std::size_t>(static_cast<std::ptrdiff_t>(i) + off)];
                }
            }
        }
        return n;
    }

    std::size_t d() const { return d_; }
    std::size_t h() const { return h_; }
    std::size_t w() const { return w_; }

private:
    std::size_t d_, h_, w_;
    std::vector<std::uint8_t> cells_;
};

}  // namespace

Volume3D skeletonize(const Volume3D& mask) {
    PaddedGrid grid(mask);
    const auto h = static_cast<std::ptrdiff_t>(grid.h());
    const auto w = static_cast<std::ptrdiff_t>(grid.w());
    // Border directions in sweep order: -y, +y, +x, -x, +z, -z.
    const std::array<std::ptrdiff_t, 6> border_offset = {-w, w, 1, -1, h * w, -h * w};

    std::vector<std::size_t> candidates;
    int unchanged_sweeps = 0;
    while (unchanged_sweeps < 6) {
        unchanged_sweeps = 0;
        for (const auto off : border_offset) {
            candidates.clear();
            for (std::size_t z = 1; z + 1 < grid.d(); ++z) {
                for (std::size_t y = 1; y + 1 < grid.h(); ++y) {
                    for (std::size_t x = 1; x + 1 < grid.w(); ++x) {
                        const std::size_t i = grid.idx(z, y, x);
                        if (!grid[i]) continue;
                        if (grid[static_cast<std::size_t>(static_cast<std::ptrdiff_t>(i) + off)]) continue;
                        const auto n = grid.neighborhood(i);
                        const int count = std::accumulate(n.begin(), n.end(), 0) - 1;
                        if (count == 1) continue;  // endpoint
                        if (!is_simple(n)) continue;
                        candidates.push_back(i);
                    }
                }
            }
            // Sequential re-check: earlier deletions in this sweep can make a
            // candidate non-simple.
            bool changed = false;
            for (const std::size_t i : candidates) {
                if (is_simple(grid.neighborhood(i))) {
                    grid[i] = 0;
                    changed = true;
                }
            }
            if (!changed) ++unchanged_sweeps;
        }
    }

    std::vector<float> out(mask.size(), 0.0f);
    for (std::size_t z = 0; z < mask.dims().depth; ++z) {
        for (std::size_t y = 0; y < mask.dims().height; ++y) {
            for (std::size_t x = 0; x < mask.dims().width; ++x) {
                out[mask.index(z, y, x)] = grid[grid.idx(z + 1, y + 1, x + 1)] ? 1.0f : 0.0f;
            }
        }
    }
    return Volume3D(mask.dims(), VolumeKind::Binary, std::move(out), mask.spacing());
}

std::size_t count_components_26(const Volume3D& mask) {
    std::vector<std::uint8_t> seen(mask.size(), 0);
    std::vector<std::size_t> stack;
    std::size_t components = 0;
    for (std::size_t start = 0; start < mask.size(); ++start) {
        if (mask.data()[start] <= 0.0f || seen[start]) continue;
        ++components;
        seen[start] = 1;
        stack.push_back(start);
        while (!stack.empty()) {
            const auto c = mask.coord(stack.back());
            stack.pop_back();
            for (int dz = -1; dz <= 1; ++dz) {
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        const VoxelCoord n{c.z + dz, c.y + dy, c.x + dx};
                        if (!mask.contains(n)) continue;
                        const auto i = mask.index(n);
                        if (mask.data()[i] > 0.0f && !seen[i]) {
                            seen[i] = 1;
                            stack.push_back(i);
                        }
                    }
                }
            }
        }
    }
    return components;
}

SkeletonGraph graph_from_coords(std::vector<VoxelCoord> nodes, double r) {
    if (!(r > 0)) throw InvalidParameter("graph radius r must be positive");
    std::vector<Point3> pts;
    pts.reserve(nodes.size());
    for (const auto& c : nodes) pts.push_back({double(c.z), double(c.y), double(c.x)});
    SkeletonGraph g;
    g.nodes = std::move(nodes);
    g.edges = radius_pairs(pts, r);
    g.radius = r;
    return g;
}

SkeletonGraph graph_from_skeleton(const Volume3D& skel, double r) {
    return graph_from_coords(skel.foreground(), r);
}

SkeletonGraph graph_from_skeleton_bruteforce(const Volume3D& skel, double r) {
    if (!(r > 0)) throw InvalidParameter("graph radius r must be positive");
    SkeletonGraph g;
    g.nodes = skel.foreground();
    g.radius = r;
    const double r2 = r * r;
    for (std::uint32_t i = 0; i < g.nodes.size(); ++i) {
        for (std::uint32_t j = i + 1; j < g.nodes.size(); ++j) {
            if (squared_distance(g.nodes[i], g.nodes[j]) <= r2) g.edges.emplace_back(i, j);
        }
    }
    return g;
}

ComponentPartition connected_components(const SkeletonGraph& g) {
    const std::size_t n = g.nodes.size();
    std::vector<std::uint32_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0u);
    const auto find = [&](std::uint32_t v) {
        while (parent[v] != v) {
            parent[v] = parent[parent[v]];
            v = parent[v];
        }
        return v;
    };
    for (const auto& [a, b] : g.edges) {
        const auto ra = find(a);
        const auto rb = find(b);
        if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
    }

    ComponentPartition out;
    std::vector<std::int64_t> slot(n, -1);
    for (std::uint32_t v = 0; v < n; ++v) {
        const auto root = find(v);
        if (slot[root] < 0) {
            slot[root] = static_cast<std::int64_t>(out.components.size());
            out.components.emplace_back();
        }
        out.components[static_cast<std::size_t>(slot[root])].push_back(v);
    }
    if (!out.components.empty()) {
        out.mean_size = static_cast<double>(n) / static_cast<double>(out.components.size());
    }
    return out;
}

std::vector<std::uint32_t> articulation_nodes(const SkeletonGraph& g) {
    const std::size_t n = g.nodes.size();
    std::vector<std::vector<std::uint32_t>> adj(n);
    for (const auto& [a, b] : g.edges) {
        adj[a].push_back(b);
        adj[b].push_back(a);
    }
    constexpr std::uint32_t kNone = ~0u;
    std::vector<std::uint32_t> disc(n, kNone), low(n, 0), parent(n, kNone);
    std::vector<std::size_t> next_child(n, 0);
    std::vector<std::uint8_t> is_cut(n, 0);
    std::uint32_t timer = 0;

    for (std::uint32_t root = 0; root < n; ++root) {
        if (disc[root] != kNone) continue;
        std::size_t root_children = 0;
        std::vector<std::uint32_t> stack{root};
        disc[root] = low[root] = timer++;
        while (!stack.empty()) {
            const auto v = stack.back();
            if (next_child[v] < adj[v].size()) {
                const auto u = adj[v][next_child[v]++];
                if (disc[u] == kNone) {
                    parent[u] = v;
                    disc[u] = low[u] = timer++;
                    if (v == root) ++root_children;
                    stack.push_back(u);
                } else if (u != parent[v]) {
                    low[v] = std::min(low[v], disc[u]);
                }
            } else {
                stack.pop_back();
                const auto p = parent[v];
                if (p != kNone) {
                    low[p] = std::min(low[p], low[v]);
                    if (p != root && low[v] >= disc[p]) is_cut[p] = 1;
                }
            }
        }
        if (root_children > 1) is_cut[root] = 1;
    }

    std::vector<std::uint32_t> out;
    for (std::uint32_t v = 0; v < n; ++v) {
        if (is_cut[v]) out.push_back(v);
    }
    return out;
}

SkeletonGraph remove_node(const SkeletonGraph& g, std::uint32_t node) {
    if (node >= g.nodes.size()) throw InvalidParameter("remove_node: id out of range");
    SkeletonGraph out;
    out.radius = g.radius;
    out.nodes = g.nodes;
    out.nodes.erase(out.nodes.begin() + node);
    const auto shift = [node](std::uint32_t v) { return v > node ? v - 1 : v; };
    for (const auto& [a, b] : g.edges) {
        if (a == node || b == node) continue;
        out.edges.emplace_back(shift(a), shift(b));
    }
    return out;
}

nlohmann::json to_json(const SkeletonGraph& g) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& c : g.nodes) nodes.push_back({c.z, c.y, c.x});
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& [a, b] : g.edges) edges.push_back({a, b});
    return {{"nodes", std::move(nodes)}, {"edges", std::move(edges)}, {"r", g.radius}};
}

}  // namespace skeltop
