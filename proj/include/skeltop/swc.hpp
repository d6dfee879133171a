#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace skeltop {

struct SwcRecord {
    std::int64_t id = 0;
    int type = 0;
    double x = 0.0, y = 0.0, z = 0.0;
    double radius = 1.0;
    std::int64_t parent = -1;  // -1 marks a root

    bool operator==(const SwcRecord&) const = default;
};

/// A neuron trace: records sorted by ascending id, unique ids, every non-root
/// parent present, acyclic.
struct Morphology {
    std::vector<SwcRecord> records;

    bool empty() const noexcept { return records.empty(); }
    std::size_t size() const noexcept { return records.size(); }
    bool operator==(const Morphology&) const = default;
};

/// Parses SWC text. `source` prefixes error locations ("<source>:<line>").
/// Blank lines and lines starting with '#' are skipped.
Morphology parse_swc(std::string_view text, const std::string& source = "<swc>");

/// One record per line, space-separated, ascending ids, shortest round-trip
/// number formatting.
std::string write_swc(const Morphology& m);

Morphology read_swc_file(const std::filesystem::path& path);
void write_swc_file(const Morphology& m, const std::filesystem::path& path);

/// Subdivides every parent-child segment so consecutive points are at most
/// `step` apart. Original records keep their ids; inserted points get fresh
/// ids above the current maximum, in record order.
Morphology resample(const Morphology& m, double step);

/// Drops `id` and all of its descendants.
Morphology remove_subtree(const Morphology& m, std::int64_t id);

/// Node positions (x, y, z).
std::vector<std::array<double, 3>> node_positions(const Morphology& m);

}  // namespace skeltop
