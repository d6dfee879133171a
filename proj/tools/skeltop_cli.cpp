// skeltop: batch command-line front end. Reports go to stdout as JSON,
// diagnostics to stderr. Exit status: 0 ok, 1 I/O failure, 2 invalid input.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
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

namespace fs = std::filesystem;
using nlohmann::json;
using namespace skeltop;

namespace {

constexpr int kExitIo = 1;
constexpr int kExitInvalid = 2;

struct Failure {
    int exit_code;
    std::string error_class;
    std::string message;
};

Failure classify(const std::exception& e) {
    const std::string msg = e.what();
    if (dynamic_cast<const IoError*>(&e)) return {kExitIo, "io", msg};
    if (dynamic_cast<const ParseError*>(&e)) return {kExitInvalid, "parse", msg};
    if (dynamic_cast<const DimensionMismatch*>(&e)) return {kExitInvalid, "dimension-mismatch", msg};
    if (dynamic_cast<const InvalidParameter*>(&e)) return {kExitInvalid, "invalid-parameter", msg};
    if (dynamic_cast<const UndefinedMetric*>(&e)) return {kExitInvalid, "undefined-metric", msg};
    if (dynamic_cast<const EmptyGraph*>(&e)) return {kExitInvalid, "empty-graph", msg};
    if (dynamic_cast<const GenerationError*>(&e)) return {kExitInvalid, "generation", msg};
    if (dynamic_cast<const json::exception*>(&e)) return {kExitInvalid, "parse", msg};
    return {kExitIo, "internal", msg};
}

// Re-raise a parse error with the file it came from in front of its location.
[[noreturn]] void rethrow_with_source(const ParseError& e, const fs::path& source) {
    const std::string what = e.what();
    const std::string message = what.substr(std::min(what.size(), e.where().size() + 2));
    throw ParseError(source.string() + ": " + e.where(), message);
}

json read_json_file(const fs::path& path) {
    const std::string text = detail::read_file(path);
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(path.string(), std::string("malformed JSON: ") + e.what());
    }
}

bool is_tensor_header(const fs::path& path) {
    if (format_from_path(path) != VolumeFormat::RawJson) return false;
    const auto j = json::parse(detail::read_file(path), nullptr, false);
    return j.is_object() && j.contains("shape");
}

// A volume file, or a [c, d, h, w] tensor of class probabilities from which
// the foreground channel is taken.
Volume3D load_prediction(const fs::path& path, std::size_t channel) {
    if (!is_tensor_header(path)) return read_volume(path);
    const Tensor t = read_tensor(path);
    if (t.shape.size() != 4) {
        throw ParseError(path.string() + ": field \"shape\"",
                         "a multi-channel prediction needs shape [c, d, h, w]");
    }
    if (channel >= t.shape[0]) {
        throw InvalidParameter(path.string() + ": channel " + std::to_string(channel) +
                               " out of range for " + std::to_string(t.shape[0]) + " channels");
    }
    const Dims dims{t.shape[1], t.shape[2], t.shape[3]};
    const auto n = dims.voxel_count();
    const auto first = t.data.begin() + static_cast<std::ptrdiff_t>(channel * n);
    try {
        return Volume3D(dims, VolumeKind::Probability,
                        std::vector<float>(first, first + static_cast<std::ptrdiff_t>(n)));
    } catch (const InvalidParameter& e) {
        throw InvalidParameter(path.string() + ": channel " + std::to_string(channel) + ": " + e.what());
    }
}

Volume3D load_ground_truth(const fs::path& path) {
    auto gt = read_volume(path);
    if (gt.kind() != VolumeKind::Binary) {
        throw InvalidParameter(path.string() + ": ground truth must be a binary volume");
    }
    return gt;
}

// ---- batch mode -------------------------------------------------------------

using PairFn = std::function<json(const fs::path& pred, const fs::path& gt)>;

std::map<std::string, std::vector<fs::path>> files_by_stem(const fs::path& dir,
                                                           const std::vector<std::string>& exts) {
    if (!fs::is_directory(dir)) throw IoError(dir.string() + ": not a directory");
    std::map<std::string, std::vector<fs::path>> out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const auto ext = entry.path().extension().string();
        if (std::find(exts.begin(), exts.end(), ext) == exts.end()) continue;
        out[entry.path().stem().string()].push_back(entry.path());
    }
    for (auto& [stem, paths] : out) std::sort(paths.begin(), paths.end());
    return out;
}

fs::path single_file(const std::string& stem, const std::vector<fs::path>& paths, const fs::path& dir) {
    if (paths.size() > 1) {
        throw InvalidParameter(dir.string() + ": stem \"" + stem + "\" matches " +
                               std::to_string(paths.size()) + " files");
    }
    return paths.front();
}

// Pairs files by stem; each pair fails on its own. Returns the worst exit code.
int run_batch(const std::string& command, const fs::path& pred_dir, const fs::path& gt_dir,
              const std::vector<std::string>& exts, const PairFn& fn, json& report) {
    const auto preds = files_by_stem(pred_dir, exts);
    const auto gts = files_by_stem(gt_dir, exts);
    int worst = 0;
    json results = json::array();
    for (const auto& [stem, paths] : preds) {
        json entry;
        try {
            const auto pred = single_file(stem, paths, pred_dir);
            const auto gt = gts.find(stem);
            if (gt == gts.end()) {
                throw IoError(gt_dir.string() + ": no ground truth with stem \"" + stem + "\"");
            }
            entry = fn(pred, single_file(stem, gt->second, gt_dir));
        } catch (const std::exception& e) {
            const auto f = classify(e);
            entry = {{"error", f.message}, {"error_class", f.error_class}};
            worst = std::max(worst, f.exit_code);
        }
        entry["name"] = stem;
        results.push_back(std::move(entry));
    }
    report = {{"schema", 1}, {"command", command}, {"results", std::move(results)}};
    return worst;
}

const std::vector<std::string> kVolumeExts = {".json", ".nrrd"};
const std::vector<std::string> kSwcExts = {".swc"};

struct PairArgs {
    std::string pred, gt, pred_dir, gt_dir;

    void add_to(CLI::App* cmd, const std::string& what) {
        cmd->add_option("--pred", pred, "predicted " + what);
        cmd->add_option("--gt", gt, "ground-truth " + what);
        cmd->add_option("--pred-dir", pred_dir, "directory of predictions (batch mode)");
        cmd->add_option("--gt-dir", gt_dir, "directory of ground truths, paired by file stem");
    }

    int run(const std::string& command, const std::vector<std::string>& exts, const PairFn& fn,
            json& report) const {
        const bool single = !pred.empty() || !gt.empty();
        const bool batch = !pred_dir.empty() || !gt_dir.empty();
        if (single == batch || (single && (pred.empty() || gt.empty())) ||
            (batch && (pred_dir.empty() || gt_dir.empty()))) {
            throw InvalidParameter(command + ": give either --pred and --gt, or --pred-dir and --gt-dir");
        }
        if (batch) return run_batch(command, pred_dir, gt_dir, exts, fn, report);
        report = fn(pred, gt);
        return 0;
    }
};

// ---- commands -----------------------------------------------------------------

json seg_eval(const fs::path& pred_path, const fs::path& gt_path, double tau, DistanceUnits units,
              std::size_t channel) {
    const auto pred = load_prediction(pred_path, channel);
    const auto gt = load_ground_truth(gt_path);
    require_same_dims(pred, gt, ("seg-eval: " + pred_path.string() + " vs " + gt_path.string()).c_str());
    const auto mask = pred.kind() == VolumeKind::Probability ? threshold(pred, tau) : pred;
    auto j = to_json(evaluate_segmentation(mask, gt, units));
    j["tau"] = tau;
    return j;
}

json tasl_eval(const fs::path& pred_path, const fs::path& gt_path, const TaslWeights& w,
               std::size_t channel) {
    const auto pred = load_prediction(pred_path, channel);
    const auto gt = load_ground_truth(gt_path);
    require_same_dims(pred, gt, ("tasl: " + pred_path.string() + " vs " + gt_path.string()).c_str());
    return to_json(tasl(pred, gt, w), w);
}

json trace_eval(const fs::path& pred_path, const fs::path& gt_path, const TraceOptions& opts) {
    return to_json(evaluate_trace(read_swc_file(pred_path), read_swc_file(gt_path), opts));
}

double number_field(const json& entry, const char* name, const std::string& where) {
    const auto it = entry.find(name);
    if (it == entry.end() || !it->is_number()) {
        throw ParseError(where + "." + name, "expected a number");
    }
    const double v = it->get<double>();
    if (!std::isfinite(v) || v < 0) throw ParseError(where + "." + name, "expected a finite non-negative number");
    return v;
}

json loss_eval(const fs::path& path, std::optional<double> beta_override) {
    const json j = read_json_file(path);
    const auto where = [&](const std::string& f) { return path.string() + ": field \"" + f + "\""; };
    if (!j.is_object() || !j.contains("scales") || !j.at("scales").is_array() || j.at("scales").empty()) {
        throw ParseError(where("scales"), "expected a non-empty array of per-scale entries");
    }
    const auto& scales = j.at("scales");

    DeepSupervisionConfig cfg = DeepSupervisionConfig::halving(scales.size());
    try {
        if (j.contains("scale_weights")) j.at("scale_weights").get_to(cfg.scale_weights);
        if (j.contains("beta")) j.at("beta").get_to(cfg.beta);
        if (j.contains("epsilon_dice")) j.at("epsilon_dice").get_to(cfg.epsilon_dice);
    } catch (const json::exception& e) {
        throw ParseError(path.string(), std::string("bad loss configuration: ") + e.what());
    }
    if (beta_override) cfg.beta = *beta_override;

    std::vector<ScaleLoss> inputs;
    for (std::size_t s = 0; s < scales.size(); ++s) {
        const auto& e = scales[s];
        const std::string at = path.string() + ": scales[" + std::to_string(s) + "]";
        if (!e.is_object()) throw ParseError(at, "expected an object");
        ScaleLoss in;
        if (e.contains("pred") || e.contains("gt")) {
            if (!e.contains("pred") || !e.contains("gt") || !e.at("pred").is_string() || !e.at("gt").is_string()) {
                throw ParseError(at, "volume entries need string fields \"pred\" and \"gt\"");
            }
            const auto base = path.parent_path();
            const auto pred = read_volume(base / e.at("pred").get<std::string>());
            const auto gt = load_ground_truth(base / e.at("gt").get<std::string>());
            const auto prob = pred.kind() == VolumeKind::Probability ? pred : as_probability(pred);
            in.dice = dice_loss(prob, gt, cfg.epsilon_dice);
            in.ce = ce_loss(prob, gt);
            in.tasl = tasl(pred, gt).total;
        } else {
            in.dice = number_field(e, "dice", at);
            in.ce = number_field(e, "ce", at);
            in.tasl = number_field(e, "tasl", at);
            if (in.dice > 1.0) throw ParseError(at + ".dice", "dice loss must lie in [0, 1]");
        }
        inputs.push_back(in);
    }

    const double total = total_loss(inputs, cfg);
    json per_scale = json::array();
    for (std::size_t s = 0; s < inputs.size(); ++s) {
        const auto& in = inputs[s];
        per_scale.push_back({{"dice", in.dice},
                             {"ce", in.ce},
                             {"tasl", in.tasl},
                             {"weighted", cfg.scale_weights[s] * (1.0 + cfg.beta * in.tasl) * (in.dice + in.ce)}});
    }
    return {{"schema", 1},
            {"total", total},
            {"beta", cfg.beta},
            {"scale_weights", cfg.scale_weights},
            {"scales", std::move(per_scale)}};
}

Field3D field_from_volume_file(const fs::path& path) {
    if (is_tensor_header(path)) return field3d_from_tensor(read_tensor(path));
    const auto v = read_volume(path);
    Field3D f{1, v.dims().depth, v.dims().height, v.dims().width, {}};
    f.data.assign(v.data().begin(), v.data().end());
    return f;
}

std::string residual_key(const char* name) { return std::string(name) + "_residual"; }

json inflate_verify(const fs::path& kernel_path, std::size_t kd, const fs::path& volume_path) {
    const auto k = kernel2d_from_tensor(read_tensor(kernel_path));
    const auto vol = field_from_volume_file(volume_path);
    const auto r = verify_inflation(k, kd, vol);
    constexpr double kTolerance = 1e-6;
    double worst = r.center_slice;
    if (r.average_interior) worst = std::max(worst, *r.average_interior);
    json j = {{"schema", 1},
              {"kd", kd},
              {residual_key("center_slice"), r.center_slice},
              {residual_key("average_interior"), nullptr},
              {residual_key("center_mass"), r.center_mass},
              {residual_key("average_mass"), r.average_mass},
              {"max_equivalence_residual", worst},
              {"tolerance", kTolerance},
              {"pass", worst <= kTolerance && r.center_mass == 0.0 && r.average_mass <= 1e-12}};
    if (r.average_interior) j[residual_key("average_interior")] = *r.average_interior;
    return j;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"skeltop: topology-aware skeleton loss, kernel inflation and neuron metrics"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "show help for every subcommand");

    std::function<int(json&)> action;

    // seg-eval
    PairArgs seg_args;
    double seg_tau = 0.5;
    std::string seg_units = "voxel";
    std::size_t seg_channel = 1;
    auto* seg = app.add_subcommand("seg-eval", "precision, recall, F1 and HD95 of a segmentation");
    seg_args.add_to(seg, "volume (probability volume, binary mask, or [c,d,h,w] tensor)");
    seg->add_option("--tau", seg_tau, "binarisation threshold for probability inputs")->capture_default_str();
    seg->add_option("--units", seg_units, "HD95 distance units")
        ->check(CLI::IsMember({"voxel", "physical"}))
        ->capture_default_str();
    seg->add_option("--channel", seg_channel, "foreground channel of a [c,d,h,w] tensor")->capture_default_str();
    seg->callback([&] {
        action = [&](json& out) {
            const auto units = seg_units == "physical" ? DistanceUnits::Physical : DistanceUnits::Voxel;
            return seg_args.run("seg-eval", kVolumeExts,
                                [&](const fs::path& p, const fs::path& g) {
                                    return seg_eval(p, g, seg_tau, units, seg_channel);
                                },
                                out);
        };
    });

    // trace-eval
    PairArgs trace_args;
    TraceOptions trace_opts;
    std::optional<double> trace_resample;
    std::string trace_esa = "directed";
    auto* trace = app.add_subcommand("trace-eval", "ESA, DSA and PDS between two SWC traces");
    trace_args.add_to(trace, "SWC trace");
    trace->add_option("--theta", trace_opts.theta, "mismatch distance threshold (voxels)")->capture_default_str();
    trace->add_option("--resample", trace_resample, "resample both traces to this node spacing first");
    trace->add_option("--esa-mode", trace_esa, "ESA direction")
        ->check(CLI::IsMember({"directed", "symmetric"}))
        ->capture_default_str();
    trace->callback([&] {
        action = [&](json& out) {
            trace_opts.resample_step = trace_resample;
            trace_opts.esa_mode = trace_esa == "symmetric" ? EsaMode::Symmetric : EsaMode::Directed;
            return trace_args.run("trace-eval", kSwcExts,
                                  [&](const fs::path& p, const fs::path& g) { return trace_eval(p, g, trace_opts); },
                                  out);
        };
    });

    // tasl
    PairArgs tasl_args;
    TaslWeights tasl_w;
    std::vector<double> tasl_lambdas = {tasl_w.lambda_node, tasl_w.lambda_edge, tasl_w.lambda_path};
    std::size_t tasl_channel = 1;
    auto* tasl_cmd = app.add_subcommand("tasl", "topology-aware skeleton loss between two volumes");
    tasl_args.add_to(tasl_cmd, "volume (probability volume, binary mask, or [c,d,h,w] tensor)");
    tasl_cmd->add_option("--tau", tasl_w.tau, "binarisation threshold")->capture_default_str();
    tasl_cmd->add_option("--r", tasl_w.r, "skeleton graph radius (voxels)")->capture_default_str();
    tasl_cmd->add_option("--weights", tasl_lambdas, "lambda_node,lambda_edge,lambda_path")
        ->delimiter(',')
        ->expected(3)
        ->capture_default_str();
    tasl_cmd->add_option("--eps", tasl_w.epsilon, "stabilising epsilon")->capture_default_str();
    tasl_cmd->add_option("--channel", tasl_channel, "foreground channel of a [c,d,h,w] tensor")
        ->capture_default_str();
    tasl_cmd->callback([&] {
        action = [&](json& out) {
            tasl_w.lambda_node = tasl_lambdas[0];
            tasl_w.lambda_edge = tasl_lambdas[1];
            tasl_w.lambda_path = tasl_lambdas[2];
            tasl_w.validate();
            return tasl_args.run("tasl", kVolumeExts,
                                 [&](const fs::path& p, const fs::path& g) {
                                     return tasl_eval(p, g, tasl_w, tasl_channel);
                                 },
                                 out);
        };
    });

    // loss
    std::string loss_scales;
    std::optional<double> loss_beta;
    auto* loss = app.add_subcommand("loss", "deep-supervision total loss from per-scale inputs");
    loss->add_option("--scales", loss_scales, "JSON file with per-scale dice/ce/tasl or pred/gt volumes")
        ->required();
    loss->add_option("--beta", loss_beta, "TASL strength (overrides the file)");
    loss->callback([&] {
        action = [&](json& out) {
            out = loss_eval(loss_scales, loss_beta);
            return 0;
        };
    });

    // skeletonize
    std::string skel_in, skel_out;
    double skel_tau = 0.5;
    auto* skel = app.add_subcommand("skeletonize", "3D thinning of a mask");
    skel->add_option("--in", skel_in, "input volume")->required();
    skel->add_option("--out", skel_out, "output mask (.json or .nrrd)")->required();
    skel->add_option("--tau", skel_tau, "binarisation threshold for probability inputs")->capture_default_str();
    skel->callback([&] {
        action = [&](json& out) {
            const auto in = read_volume(skel_in);
            const auto mask = in.kind() == VolumeKind::Probability ? threshold(in, skel_tau) : in;
            const auto s = skeletonize(mask);
            write_volume(s, skel_out);
            out = {{"schema", 1},
                   {"out", skel_out},
                   {"foreground_in", mask.foreground_count()},
                   {"foreground_out", s.foreground_count()},
                   {"components", count_components_26(s)}};
            return 0;
        };
    });

    // graph
    std::string graph_in, graph_out;
    double graph_r = 2.0;
    bool graph_thin = false;
    auto* graph = app.add_subcommand("graph", "radius graph over the foreground voxels of a skeleton");
    graph->add_option("--in", graph_in, "skeleton mask")->required();
    graph->add_option("--out", graph_out, "graph JSON output")->required();
    graph->add_option("--r", graph_r, "adjacency radius (voxels)")->capture_default_str();
    graph->add_flag("--skeletonize", graph_thin, "thin the input first");
    graph->callback([&] {
        action = [&](json& out) {
            if (!(graph_r > 0)) throw InvalidParameter("graph: --r must be positive");
            auto in = read_volume(graph_in);
            if (in.kind() != VolumeKind::Binary) throw InvalidParameter(graph_in + ": expected a binary mask");
            if (graph_thin) in = skeletonize(in);
            const auto g = graph_from_skeleton(in, graph_r);
            detail::write_file(graph_out, to_json(g).dump() + "\n");
            const auto parts = connected_components(g);
            out = {{"schema", 1},
                   {"out", graph_out},
                   {"r", graph_r},
                   {"nodes", g.nodes.size()},
                   {"edges", g.edges.size()},
                   {"components", parts.count()},
                   {"mean_component_size", parts.mean_size}};
            return 0;
        };
    });

    // inflate
    std::string infl_kernel, infl_out, infl_mode = "center", verify_kernel, verify_volume;
    std::size_t infl_kd = 3, verify_kd = 3;
    auto* infl = app.add_subcommand("inflate", "lift a 2D kernel tensor to 3D");
    infl->add_option("--kernel", infl_kernel, "2D kernel tensor [c_out,c_in,k_h,k_w]");
    infl->add_option("--kd", infl_kd, "depth of the inflated kernel")->capture_default_str();
    infl->add_option("--mode", infl_mode, "inflation rule")
        ->check(CLI::IsMember({"center", "average"}))
        ->capture_default_str();
    infl->add_option("--out", infl_out, "output tensor");
    auto* verify = infl->add_subcommand("verify", "check the inflation equivalences on a volume");
    verify->add_option("--kernel", verify_kernel, "2D kernel tensor")->required();
    verify->add_option("--kd", verify_kd, "odd inflation depth")->capture_default_str();
    verify->add_option("--volume", verify_volume, "volume or [c,d,h,w] / [d,h,w] tensor")->required();
    infl->require_subcommand(0, 1);
    infl->callback([&] {
        if (verify->parsed()) {
            action = [&](json& out) {
                out = inflate_verify(verify_kernel, verify_kd, verify_volume);
                return 0;
            };
            return;
        }
        action = [&](json& out) {
            if (infl_kernel.empty() || infl_out.empty()) {
                throw InvalidParameter("inflate: --kernel and --out are required");
            }
            const auto k = kernel2d_from_tensor(read_tensor(infl_kernel));
            const auto k3 = infl_mode == "center" ? inflate_center(k, infl_kd) : inflate_average(k, infl_kd);
            const auto t = to_tensor(k3);
            write_tensor(t, infl_out);
            out = {{"schema", 1}, {"mode", infl_mode}, {"kd", infl_kd}, {"shape", t.shape}, {"out", infl_out}};
            return 0;
        };
    });

    // synth
    std::string synth_spec, synth_prefix, synth_format = "rawjson";
    auto* synth = app.add_subcommand("synth", "generate a synthetic neuron: SWC, mask and probability volume");
    synth->add_option("--spec", synth_spec, "generator spec JSON")->required();
    synth->add_option("--out-prefix", synth_prefix, "output path prefix")->required();
    synth->add_option("--format", synth_format, "volume format")
        ->check(CLI::IsMember({"rawjson", "nrrd"}))
        ->capture_default_str();
    synth->callback([&] {
        action = [&](json& out) {
            SynthSpec spec;
            try {
                spec = synth_spec_from_json(read_json_file(synth_spec));
            } catch (const ParseError& e) {
                rethrow_with_source(e, synth_spec);
            }
            const auto m = generate_tree(spec);
            const auto r = rasterize(m, spec);
            const std::string ext = synth_format == "nrrd" ? ".nrrd" : ".json";
            const std::string swc = synth_prefix + ".swc";
            const std::string mask = synth_prefix + "_mask" + ext;
            const std::string prob = synth_prefix + "_prob" + ext;
            write_swc_file(m, swc);
            write_volume(r.mask, mask);
            write_volume(r.prob, prob);
            out = {{"schema", 1},
                   {"spec", to_json(spec)},
                   {"nodes", m.size()},
                   {"branch_heads", branch_heads(m)},
                   {"mask_foreground", r.mask.foreground_count()},
                   {"files", {{"swc", swc}, {"mask", mask}, {"prob", prob}}}};
            return 0;
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "skeltop: error[usage]: " << e.what() << "\n";
        return kExitInvalid;
    }

    try {
        json report;
        const int code = action(report);
        std::cout << report.dump(2) << "\n";
        return code;
    } catch (const std::exception& e) {
        const auto f = classify(e);
        std::cerr << "skeltop: error[" << f.error_class << "]: " << f.message << "\n";
        return f.exit_code;
    }
}
