#include "skeltop/swc.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <unordered_map>

#include "skeltop/binary_io.hpp"
#include "skeltop/error.hpp"

namespace skeltop {

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        const std::size_t b = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
        if (i > b) out.push_back(line.substr(b, i - b));
    }
    return out;
}

template <class T>
bool parse_number(std::string_view s, T& out) {
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

}  // namespace

Morphology parse_swc(std::string_view text, const std::string& source) {
    static constexpr const char* kFieldNames[7] = {"id", "type", "x", "y", "z", "radius", "parent"};
    const auto at_line = [&](std::size_t line) { return source + ":" + std::to_string(line); };

    Morphology m;
    std::vector<std::size_t> line_of;  // parallel to m.records
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        const auto end = nl == std::string_view::npos ? text.size() : nl;
        const std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;

        const auto fields = split_fields(line);
        if (fields.empty() || fields.front().front() == '#') {
            if (nl == std::string_view::npos) break;
            continue;
        }
        if (fields.size() != 7) {
            throw ParseError(at_line(line_no), "expected 7 fields \"id type x y z radius parent\", got " +
                                                   std::to_string(fields.size()));
        }
        SwcRecord r;
        double* reals[5] = {&r.x, &r.y, &r.z, &r.radius, nullptr};
        bool ok = true;
        std::size_t bad = 0;
        for (std::size_t f = 0; f < 7 && ok; ++f) {
            bad = f;
            if (f == 0) {
                ok = parse_number(fields[f], r.id);
            } else if (f == 1) {
                ok = parse_number(fields[f], r.type);
            } else if (f == 6) {
                ok = parse_number(fields[f], r.parent);
            } else {
                ok = parse_number(fields[f], *reals[f - 2]) && std::isfinite(*reals[f - 2]);
            }
        }
        if (!ok) {
            throw ParseError(at_line(line_no), std::string("field \"") + kFieldNames[bad] +
                                                   "\" is not a valid number: \"" +
                                                   std::string(fields[bad]) + "\"");
        }
        if (!(r.radius > 0)) {
            throw ParseError(at_line(line_no), "field \"radius\" must be positive");
        }
        if (r.parent < -1) {
            throw ParseError(at_line(line_no), "field \"parent\" must be -1 or an existing id");
        }
        if (r.parent == r.id) throw ParseError(at_line(line_no), "record is its own parent");
        m.records.push_back(r);
        line_of.push_back(line_no);
        if (nl == std::string_view::npos) break;
    }

    std::unordered_map<std::int64_t, std::size_t> index;
    for (std::size_t i = 0; i < m.records.size(); ++i) {
        if (!index.emplace(m.records[i].id, i).second) {
            throw ParseError(at_line(line_of[i]),
                             "duplicate id " + std::to_string(m.records[i].id));
        }
    }
    for (std::size_t i = 0; i < m.records.size(); ++i) {
        const auto p = m.records[i].parent;
        if (p != -1 && !index.count(p)) {
            throw ParseError(at_line(line_of[i]), "parent id " + std::to_string(p) + " does not exist");
        }
    }
    // Cycle check: 0 = unvisited, 1 = on the current chain, 2 = reaches a root.
    std::vector<std::uint8_t> state(m.records.size(), 0);
    std::vector<std::size_t> chain;
    for (std::size_t start = 0; start < m.records.size(); ++start) {
        chain.clear();
        std::size_t cur = start;
        while (state[cur] == 0) {
            state[cur] = 1;
            chain.push_back(cur);
            const auto p = m.records[cur].parent;
            if (p == -1) break;
            cur = index.at(p);
        }
        if (state[cur] == 1 && m.records[cur].parent != -1) {
            throw ParseError(at_line(line_of[cur]), "parent chain of id " +
                                                        std::to_string(m.records[cur].id) +
                                                        " forms a cycle");
        }
        for (auto c : chain) state[c] = 2;
    }
    if (!m.records.empty() && std::none_of(m.records.begin(), m.records.end(),
                                           [](const SwcRecord& r) { return r.parent == -1; })) {
        throw ParseError(source, "no root record (parent -1)");
    }

    std::sort(m.records.begin(), m.records.end(),
              [](const SwcRecord& a, const SwcRecord& b) { return a.id < b.id; });
    return m;
}

std::string write_swc(const Morphology& m) {
    std::vector<const SwcRecord*> order;
    for (const auto& r : m.records) order.push_back(&r);
    std::sort(order.begin(), order.end(), [](auto* a, auto* b) { return a->id < b->id; });
    std::string out;
    for (const auto* r : order) {
        out += std::to_string(r->id) + ' ' + std::to_string(r->type) + ' ' + format_double(r->x) +
               ' ' + format_double(r->y) + ' ' + format_double(r->z) + ' ' +
               format_double(r->radius) + ' ' + std::to_string(r->parent) + '\n';
    }
    return out;
}

Morphology read_swc_file(const std::filesystem::path& path) {
    return parse_swc(detail::read_file(path), path.string());
}

void write_swc_file(const Morphology& m, const std::filesystem::path& path) {
    detail::write_file(path, write_swc(m));
}

Morphology resample(const Morphology& m, double step) {
    if (!(step > 0)) throw InvalidParameter("resample step must be positive");
    std::unordered_map<std::int64_t, const SwcRecord*> by_id;
    std::int64_t next_id = 0;
    for (const auto& r : m.records) {
        by_id[r.id] = &r;
        next_id = std::max(next_id, r.id + 1);
    }
    Morphology out;
    std::vector<SwcRecord> inserted;
    for (const auto& r : m.records) {
        SwcRecord child = r;
        if (r.parent != -1) {
            const SwcRecord& p = *by_id.at(r.parent);
            const double dx = r.x - p.x, dy = r.y - p.y, dz = r.z - p.z;
            const double len = std::sqrt(dx * dx + dy * dy + dz * dz);
            const auto pieces = static_cast<std::int64_t>(std::ceil(len / step));
            std::int64_t prev = p.id;
            for (std::int64_t k = 1; k < pieces; ++k) {
                const double t = static_cast<double>(k) / static_cast<double>(pieces);
                SwcRecord mid{next_id++, r.type, p.x + t * dx, p.y + t * dy, p.z + t * dz,
                              p.radius + t * (r.radius - p.radius), prev};
                prev = mid.id;
                inserted.push_back(mid);
            }
            child.parent = prev;
        }
        out.records.push_back(child);
    }
    out.records.insert(out.records.end(), inserted.begin(), inserted.end());
    std::sort(out.records.begin(), out.records.end(),
              [](const SwcRecord& a, const SwcRecord& b) { return a.id < b.id; });
    return out;
}

Morphology remove_subtree(const Morphology& m, std::int64_t id) {
    std::multimap<std::int64_t, std::int64_t> children;
    for (const auto& r : m.records) children.emplace(r.parent, r.id);
    std::vector<std::int64_t> stack{id};
    std::unordered_map<std::int64_t, bool> doomed;
    while (!stack.empty()) {
        const auto cur = stack.back();
        stack.pop_back();
        doomed[cur] = true;
        auto [b, e] = children.equal_range(cur);
        for (auto it = b; it != e; ++it) stack.push_back(it->second);
    }
    Morphology out;
    for (const auto& r : m.records) {
        if (!doomed.count(r.id)) out.records.push_back(r);
    }
    return out;
}

std::vector<std::array<double, 3>> node_positions(const Morphology& m) {
    std::vector<std::array<double, 3>> out;
    out.reserve(m.records.size());
    for (const auto& r : m.records) out.push_back({r.x, r.y, r.z});
    return out;
}

}  // namespace skeltop
