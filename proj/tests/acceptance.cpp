// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "skeltop/binary_io.hpp"
#include "skeltop/error.hpp"
#include "skeltop/inflate.hpp"
#include "skeltop/losses.hpp"
#include "skeltop/segmetrics.hpp"
#include "skeltop/skeleton.hpp"
#include "skeltop/swc.hpp"
#include "skeltop/synth.hpp"
#include "skeltop/tasl.hpp"
#include "skeltop/tracemetrics.hpp"
#include "skeltop/volume_io.hpp"
#include "support/oracles.hpp"
#include "support/process.hpp"
#include "support/shapes.hpp"

using namespace skeltop;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances.
constexpr double kPathTol = 1e-6;         // criterion 2
constexpr double kInflateTol = 1e-6;      // criteria 4, 5
constexpr double kMassTol = 1e-12;        // criterion 5
constexpr double kDiceTol = 1e-9;         // criterion 6
constexpr double kCeTol = 1e-6;           // criterion 6
constexpr double kMetricTol = 1e-9;       // criterion 7

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok && pass) detail << "first failure: " << what << "; ";
        pass = pass && ok;
    }
};

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) return INFINITY;
    double m = 0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

// Seeded neuron fixtures with 0..3 branch points.
std::vector<std::pair<Morphology, SynthSpec>> neuron_corpus(std::size_t count) {
    std::vector<std::pair<Morphology, SynthSpec>> out;
    for (std::uint64_t seed = 1; out.size() < count; ++seed) {
        SynthSpec spec;
        spec.seed = seed;
        spec.n_branch_points = static_cast<int>(seed % 4);
        out.emplace_back(generate_tree(spec), spec);
    }
    return out;
}

Outcome tasl_identity() {
    Outcome o;
    std::size_t n = 0;
    for (const auto& [m, spec] : neuron_corpus(50)) {
        auto noisy = spec;
        noisy.blur_sigma = 0.7;
        noisy.noise_sigma = 0.1;
        const auto mask = rasterize(m, spec).mask;
        const auto thresholded = threshold(rasterize(m, noisy).prob);
        for (const auto* x : {&mask, &thresholded}) {
            if (x->foreground_count() == 0) continue;
            const auto b = tasl(*x, *x);
            o.require(b.total == 0.0, "seed " + std::to_string(spec.seed) + " total " + std::to_string(b.total));
            ++n;
        }
    }
    o.require(n >= 50, "only " + std::to_string(n) + " masks");
    o.detail << n << " masks, all totals exactly 0";
    return o;
}

Outcome tasl_fragmentation() {
    Outcome o;
    std::vector<std::pair<std::string, Volume3D>> trees;
    for (const auto& [m, spec] : neuron_corpus(20)) {
        trees.emplace_back("neuron seed " + std::to_string(spec.seed), rasterize(m, spec).mask);
    }
    for (auto& s : shapes::corpus()) trees.push_back(std::move(s));

    std::size_t checked = 0, without_split = 0;
    double worst = 0;
    for (const auto& [name, mask] : trees) {
        const auto gt = graph_from_skeleton(skeletonize(mask));
        const std::size_t n = gt.nodes.size();
        if (n < 5 || connected_components(gt).count() != 1) continue;
        bool found = false;
        for (auto a : articulation_nodes(gt)) {
            const auto pred = remove_node(gt, a);
            if (connected_components(pred).count() != 2) continue;
            const auto b = tasl_from_graphs(pred, gt, TaslWeights{});
            const double expected = (static_cast<double>(n) + 1) / (2.0 * static_cast<double>(n));
            worst = std::max(worst, std::abs(b.l_path - expected));
            o.require(std::abs(b.l_path - expected) <= kPathTol, name + ": l_path " + std::to_string(b.l_path));
            o.require(b.total > 0.0, name + ": total not positive");
            found = true;
            break;
        }
        if (found) ++checked;
        else ++without_split;
    }
    o.require(checked >= 20, "only " + std::to_string(checked) + " trees exercised");
    o.detail << checked << " single-component trees, max |l_path - (n+1)/2n| = " << worst;
    if (without_split > 0) o.detail << ", " << without_split << " had no two-way articulation node";
    return o;
}

Outcome graph_oracle() {
    Outcome o;
    Rng rng(2024);
    std::size_t total_nodes = 0;
    for (int inst = 0; inst < 200; ++inst) {
        // Alternate sparse and dense placements; n in [1, 1000].
        const std::size_t n = 1 + rng.index(1000);
        const int extent = inst % 2 == 0 ? 32 : 12;
        std::set<std::array<int, 3>> picked;
        while (picked.size() < n && picked.size() < std::size_t(extent * extent * extent)) {
            picked.insert({static_cast<int>(rng.index(extent)), static_cast<int>(rng.index(extent)),
                           static_cast<int>(rng.index(extent))});
        }
        std::vector<VoxelCoord> coords;
        for (const auto& p : picked) coords.push_back({p[0], p[1], p[2]});
        const auto mask = mask_from_coords({32, 32, 32}, coords);
        const auto fast = graph_from_skeleton(mask, 2.0);
        const auto brute = graph_from_skeleton_bruteforce(mask, 2.0);
        const auto ref = oracle::edges(fast.nodes, 2.0);
        const std::set<std::pair<std::uint32_t, std::uint32_t>> got(fast.edges.begin(), fast.edges.end());
        o.require(fast == brute, "instance " + std::to_string(inst) + " differs from brute force");
        o.require(got == ref, "instance " + std::to_string(inst) + " differs from the all-pairs oracle");
        total_nodes += fast.nodes.size();
    }
    o.detail << "200 instances, " << total_nodes << " nodes in total";
    return o;
}

Kernel2D random_kernel(Rng& rng, std::size_t co, std::size_t ci, std::size_t k) {
    Kernel2D kern{co, ci, k, k, std::vector<double>(co * ci * k * k)};
    for (auto& w : kern.weights) w = rng.uniform(-1, 1);
    return kern;
}

Field3D random_field(Rng& rng, std::size_t c, std::size_t d, std::size_t h, std::size_t w) {
    Field3D f{c, d, h, w, std::vector<double>(c * d * h * w)};
    for (auto& v : f.data) v = rng.uniform(-1, 1);
    return f;
}

Outcome center_inflation() {
    Outcome o;
    Rng rng(11);
    double worst = 0;
    for (int pair = 0; pair < 20; ++pair) {
        const std::size_t kd = pair % 2 == 0 ? 3 : 5;
        const std::size_t k = pair % 3 == 0 ? 5 : 3;
        const auto kern = random_kernel(rng, 1 + rng.index(3), 1 + rng.index(3), k);
        const auto vol = random_field(rng, kern.c_in, 4 + rng.index(6), 5 + rng.index(6), 5 + rng.index(6));
        const auto out3 = conv3d(vol, inflate_center(kern, kd));
        for (std::size_t t = 0; t < vol.depth; ++t) {
            const auto ref = oracle::conv2d(depth_slice(vol, t), kern, 1);
            const auto got = depth_slice(out3, t);
            const double d = max_abs_diff(got.data, ref.data);
            worst = std::max(worst, d);
            o.require(d <= kInflateTol, "pair " + std::to_string(pair) + " depth " + std::to_string(t));
        }
    }
    o.detail << "20 pairs, max |conv3d - per-slice conv2d| = " << worst;
    return o;
}

Outcome average_inflation() {
    Outcome o;
    Rng rng(12);
    double worst_mass = 0, worst_interior = 0;
    for (int pair = 0; pair < 20; ++pair) {
        const std::size_t kd = 1 + 2 * (pair % 3);  // 1, 3, 5
        const auto kern = random_kernel(rng, 1 + rng.index(3), 1 + rng.index(3), 3);
        const auto k3 = inflate_average(kern, kd);
        const double mass = max_abs_diff(depth_sum(k3).weights, kern.weights);
        worst_mass = std::max(worst_mass, mass);
        o.require(mass <= kMassTol, "mass pair " + std::to_string(pair));

        Field2D slice{kern.c_in, 6 + rng.index(5), 6 + rng.index(5), {}};
        slice.data.resize(slice.channels * slice.height * slice.width);
        for (auto& v : slice.data) v = rng.uniform(-1, 1);
        const std::size_t depth = kd + 2 + rng.index(4);
        const auto out3 = conv3d(repeat_along_depth(slice, depth), k3);
        const auto ref = oracle::conv2d(slice, kern, 1);
        for (std::size_t t = kd / 2; t + kd / 2 < depth; ++t) {
            const double d = max_abs_diff(depth_slice(out3, t).data, ref.data);
            worst_interior = std::max(worst_interior, d);
            o.require(d <= kInflateTol, "interior pair " + std::to_string(pair));
        }
    }
    o.detail << "max depth-sum residual " << worst_mass << ", max interior residual " << worst_interior;
    return o;
}

Outcome loss_formulas() {
    Outcome o;
    const Volume3D half({4, 5, 6}, VolumeKind::Probability, std::vector<float>(120, 0.5f));
    const Volume3D ones({4, 5, 6}, VolumeKind::Binary, std::vector<float>(120, 1.0f));
    const double dice = dice_loss(half, ones);
    o.require(std::abs(dice - 0.2) <= kDiceTol, "dice " + std::to_string(dice));

    const Volume3D p({1, 1, 1}, VolumeKind::Probability, {0.5f});
    const Volume3D g({1, 1, 1}, VolumeKind::Binary, {1.0f});
    const double ce = ce_loss(p, g);
    o.require(std::abs(ce - std::log(2.0)) <= kCeTol, "ce " + std::to_string(ce));

    const std::vector<ScaleLoss> in{{0.3, 0.9, 0.7}, {0.2, 0.4, 1.3}, {0.6, 1.1, 0.0}};
    const DeepSupervisionConfig off{{0.5, 0.3, 0.2}, 0.0, 1e-8};
    const double reduced = total_loss(in, off);
    double expected = 0;
    for (std::size_t s = 0; s < in.size(); ++s) expected += off.scale_weights[s] * (in[s].dice + in[s].ce);
    o.require(reduced == expected, "beta=0 reduction");

    const DeepSupervisionConfig two{{1.0, 0.5}, 2.0, 1e-8};
    const std::vector<ScaleLoss> ex{{0.5, 0.5, 0.5}, {1.0, 1.0, 0.0}};
    const double total = total_loss(ex, two);
    o.require(total == 3.0, "two-scale example " + std::to_string(total));
    o.detail << "dice " << dice << ", ce " << ce << ", two-scale total " << total;
    return o;
}

Morphology random_trace(Rng& rng, std::size_t n, double extent) {
    Morphology m;
    for (std::size_t i = 0; i < n; ++i) {
        const auto id = static_cast<std::int64_t>(i + 1);
        m.records.push_back({id, 3, rng.uniform(0, extent), rng.uniform(0, extent), rng.uniform(0, extent), 1.0,
                             i == 0 ? -1 : static_cast<std::int64_t>(rng.index(i) + 1)});
    }
    return m;
}

Volume3D random_mask(Rng& rng, Dims d, double fill) {
    std::vector<float> v(d.voxel_count());
    for (auto& x : v) x = rng.uniform() < fill ? 1.0f : 0.0f;
    v[rng.index(v.size())] = 1.0f;
    return Volume3D(d, VolumeKind::Binary, std::move(v));
}

Outcome metric_oracles() {
    Outcome o;
    Rng rng(77);
    double worst = 0;
    for (int inst = 0; inst < 100; ++inst) {
        const auto a = random_trace(rng, 1 + rng.index(500), 40);
        const auto b = random_trace(rng, 1 + rng.index(500), 40);
        const double theta = rng.uniform(0.5, 6.0);
        const double d1 = std::abs(esa(a, b) - oracle::esa(a, b));
        const double d2 = std::abs(dsa(a, b, theta) - oracle::dsa(a, b, theta));
        const double d3 = std::abs(pds(a, b, theta) - oracle::pds(a, b, theta));
        worst = std::max({worst, d1, d2, d3});
        o.require(d1 <= kMetricTol && d2 <= kMetricTol && d3 <= kMetricTol,
                  "trace instance " + std::to_string(inst));
        o.require(esa(a, a) == 0.0 && dsa(a, a, theta) == 0.0 && pds(a, a, theta) == 0.0,
                  "identity instance " + std::to_string(inst));

        const Dims dims{6 + rng.index(5), 6 + rng.index(5), 6 + rng.index(5)};
        const auto pm = random_mask(rng, dims, rng.uniform(0.02, 0.3));
        const auto gm = random_mask(rng, dims, rng.uniform(0.02, 0.3));
        o.require(surface_voxels(pm).size() <= 500 && surface_voxels(gm).size() <= 500, "surface too large");
        const double dh = std::abs(hd95(pm, gm, Hd95Mode::Directed) - oracle::hd95_directed(pm, gm));
        worst = std::max(worst, dh);
        o.require(dh <= kMetricTol, "hd95 instance " + std::to_string(inst));
        o.require(hd95(pm, pm) == 0.0, "hd95 identity " + std::to_string(inst));
    }
    o.detail << "100 instances, max deviation " << worst;
    return o;
}

Outcome skeleton_contract() {
    Outcome o;
    const auto corpus = shapes::corpus();
    o.require(corpus.size() >= 20, "corpus has fewer than 20 shapes");
    for (const auto& [name, m] : corpus) {
        const auto s = skeletonize(m);
        bool subset = true;
        for (std::size_t i = 0; i < s.size(); ++i) subset = subset && (s.data()[i] <= m.data()[i]);
        o.require(subset, name + ": not a subset");
        o.require(oracle::components26(s) == oracle::components26(m), name + ": component count changed");
        o.require(!oracle::has_2x2x2_block(s), name + ": 2x2x2 block survives");
        o.require(skeletonize(s) == s, name + ": not idempotent");
    }
    o.detail << corpus.size() << " shapes";
    return o;
}

struct Malformed {
    std::string file;
    std::string content;
    std::vector<std::string> args;
    std::string needle;  // must appear in the diagnostic
};

Outcome format_round_trips(const fs::path& dir) {
    Outcome o;
    std::size_t swc = 0;
    for (const auto& [m, spec] : neuron_corpus(50)) {
        o.require(parse_swc(write_swc(m)) == m, "swc seed " + std::to_string(spec.seed));
        const auto rs = resample(m, 0.7);
        o.require(parse_swc(write_swc(rs)) == rs, "resampled swc seed " + std::to_string(spec.seed));
        ++swc;
    }

    Rng rng(3);
    std::vector<float> v(16 * 16 * 16);
    for (auto& x : v) x = static_cast<float>(rng.uniform());
    const Volume3D vol({16, 16, 16}, VolumeKind::Probability, v, {1.0, 0.5, 2.0});
    write_volume(vol, dir / "rt.json");
    const auto back = read_volume(dir / "rt.json");
    write_volume(back, dir / "rt2.json");
    o.require(back == vol, "RawJson values differ");
    o.require(detail::read_file(dir / "rt.raw") == detail::read_file(dir / "rt2.raw"), "RawJson bytes differ");

    const std::string good_swc = "1 1 0 0 0 1 -1\n2 3 1 0 0 1 1\n";
    detail::write_file(dir / "good.swc", good_swc);
    detail::write_file(dir / "good.json", R"({"dims":[2,2,2],"kind":"binary","dtype":"u8","data_file":"good.raw"})");
    detail::write_file(dir / "good.raw", std::string(8, '\1'));
    detail::write_file(dir / "short.raw", std::string(63 * 4, '\0'));
    const auto trace = [](const std::string& f) {
        return std::vector<std::string>{"trace-eval", "--pred", f, "--gt", "good.swc"};
    };
    const auto seg = [](const std::string& f) {
        return std::vector<std::string>{"seg-eval", "--pred", f, "--gt", "good.json"};
    };
    const std::vector<Malformed> corpus = {
        {"fields.swc", "1 1 0 0 0 -1\n", trace("fields.swc"), "fields.swc:1"},
        {"nonnum.swc", "1 1 0 zero 0 1 -1\n", trace("nonnum.swc"), "nonnum.swc:1"},
        {"dangling.swc", "1 1 0 0 0 1 -1\n2 3 1 0 0 1 99\n", trace("dangling.swc"), "dangling.swc:2"},
        {"dup.swc", "1 1 0 0 0 1 -1\n1 3 1 0 0 1 -1\n", trace("dup.swc"), "dup.swc:2"},
        {"cycle.swc", "1 1 0 0 0 1 -1\n2 3 1 0 0 1 3\n3 3 2 0 0 1 2\n", trace("cycle.swc"), "cycle.swc"},
        {"short.json", R"({"dims":[4,4,4],"kind":"probability","dtype":"f32","data_file":"short.raw"})",
         seg("short.json"), "size mismatch"},
        {"broken.json", R"({"dims":[2,2,2],"kind":)", seg("broken.json"), "broken.json"},
        {"kind.json", R"({"dims":[2,2,2],"kind":"label","dtype":"u8","data_file":"good.raw"})", seg("kind.json"),
         "\"kind\""},
        {"gzip.nrrd", "NRRD0004\ntype: uint8\ndimension: 3\nsizes: 2 2 2\nencoding: gzip\n\n" + std::string(8, '\1'),
         seg("gzip.nrrd"), "encoding"},
        {"field.nrrd", "NRRD0004\ntype: uint8\ndimension: 3\nsizes: 2 2 2\nkinds: domain domain domain\n\n",
         seg("field.nrrd"), "kinds"},
    };
    for (const auto& bad : corpus) {
        detail::write_file(dir / bad.file, bad.content);
        const auto r = proc::run_cli(dir, bad.args);
        o.require(r.exit_code == 2, bad.file + ": exit " + std::to_string(r.exit_code));
        o.require(r.err.find("error[parse]") != std::string::npos, bad.file + ": not a parse error: " + r.err);
        o.require(r.err.find(bad.needle) != std::string::npos, bad.file + ": diagnostic lacks " + bad.needle);
    }
    o.detail << swc << " SWC round trips, RawJson bit-exact, " << corpus.size() << " malformed files rejected";
    return o;
}

Outcome cli_determinism(const fs::path& dir) {
    Outcome o;
    SynthSpec spec;
    spec.seed = 21;
    spec.dims = {40, 40, 40};
    spec.blur_sigma = 0.6;
    spec.noise_sigma = 0.08;
    detail::write_file(dir / "spec.json", to_json(spec).dump());
    const auto setup = proc::run_cli(dir, {"synth", "--spec", "spec.json", "--out-prefix", "n"});
    o.require(setup.exit_code == 0, "synth failed: " + setup.err);
    auto pruned = remove_subtree(read_swc_file(dir / "n.swc"), branch_heads(read_swc_file(dir / "n.swc")).front());
    write_swc_file(pruned, dir / "pruned.swc");
    Rng rng(5);
    Tensor k{{2, 1, 3, 3}, std::vector<float>(18)};
    for (auto& x : k.data) x = static_cast<float>(rng.uniform(-1, 1));
    write_tensor(k, dir / "k.json");
    detail::write_file(dir / "scales.json",
                       R"({"scales":[{"pred":"n_prob.json","gt":"n_mask.json"},{"dice":0.4,"ce":0.3,"tasl":0.2}]})");
    fs::create_directories(dir / "P");
    fs::create_directories(dir / "G");
    fs::copy_file(dir / "pruned.swc", dir / "P" / "x.swc", fs::copy_options::overwrite_existing);
    fs::copy_file(dir / "n.swc", dir / "G" / "x.swc", fs::copy_options::overwrite_existing);
    detail::write_file(dir / "P" / "y.swc", "garbage\n");
    fs::copy_file(dir / "n.swc", dir / "G" / "y.swc", fs::copy_options::overwrite_existing);

    const std::vector<std::pair<std::vector<std::string>, std::vector<std::string>>> commands = {
        {{"seg-eval", "--pred", "n_prob.json", "--gt", "n_mask.json"}, {}},
        {{"trace-eval", "--pred", "pruned.swc", "--gt", "n.swc", "--resample", "1.0"}, {}},
        {{"trace-eval", "--pred-dir", "P", "--gt-dir", "G"}, {}},
        {{"tasl", "--pred", "n_prob.json", "--gt", "n_mask.json"}, {}},
        {{"loss", "--scales", "scales.json"}, {}},
        {{"skeletonize", "--in", "n_mask.json", "--out", "skel.json"}, {"skel.json", "skel.raw"}},
        {{"graph", "--in", "skel.json", "--out", "graph.json"}, {"graph.json"}},
        {{"inflate", "--kernel", "k.json", "--kd", "3", "--mode", "average", "--out", "k3.json"}, {"k3.json", "k3.raw"}},
        {{"inflate", "verify", "--kernel", "k.json", "--kd", "3", "--volume", "n_prob.json"}, {}},
        {{"synth", "--spec", "spec.json", "--out-prefix", "n"}, {"n.swc", "n_mask.raw", "n_prob.raw"}},
    };
    for (const auto& [args, outputs] : commands) {
        const auto a = proc::run_cli(dir, args);
        std::vector<std::string> first;
        for (const auto& f : outputs) first.push_back(detail::read_file(dir / f));
        const auto b = proc::run_cli(dir, args);
        const std::string name = args[0] + (args.size() > 1 && args[1] == "verify" ? " verify" : "");
        o.require(!a.out.empty(), name + ": no output (" + a.err + ")");
        o.require(a.out == b.out && a.exit_code == b.exit_code, name + ": stdout differs between runs");
        for (std::size_t i = 0; i < outputs.size(); ++i) {
            o.require(detail::read_file(dir / outputs[i]) == first[i], name + ": " + outputs[i] + " differs");
        }
    }
    o.detail << commands.size() << " command invocations, each run twice";
    return o;
}

}  // namespace

int main() {
    const auto dir = proc::fresh_dir("skeltop_acceptance");
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"TASL identity on synthetic masks", tasl_identity},
        {"TASL fragmentation closed form", tasl_fragmentation},
        {"graph construction equals brute force", graph_oracle},
        {"center inflation slice equivalence", center_inflation},
        {"average inflation mass and interior equivalence", average_inflation},
        {"loss formula checks", loss_formulas},
        {"metric oracles", metric_oracles},
        {"skeletonization contract", skeleton_contract},
        {"format round trips and malformed inputs", [&] { return format_round_trips(dir / "formats"); }},
        {"CLI determinism", [&] { return cli_determinism(dir / "determinism"); }},
    };
    fs::create_directories(dir / "formats");
    fs::create_directories(dir / "determinism");

    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail << "exception: " << e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        failed += !o.pass;
        std::printf("criterion %2zu: %s  %s (%s) [%.1fs]\n", i + 1, o.pass ? "PASS" : "FAIL",
                    criteria[i].first.c_str(), o.detail.str().c_str(), secs);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
