#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "dceseg/clustering.hpp"
#include "dceseg/equivtest.hpp"
#include "dceseg/eval.hpp"
#include "dceseg/io.hpp"
#include "dceseg/model.hpp"
#include "dceseg/special.hpp"
#include "dceseg/synth.hpp"

using json = nlohmann::json;
using namespace dceseg;

namespace {

std::string sig6(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

StabilizedSequence load_sequence(const std::string& path, bool stabilized, double exponent,
                                 std::uint32_t n0) {
    DcesData d = read_dces(path);
    StabilizedSequence seq;
    if (stabilized) {
        seq.dims = d.dims;
        seq.times = std::move(d.times);
        seq.data = std::move(d.data);
        seq.exponent = exponent;
    } else {
        RawSequence raw;
        raw.dims = d.dims;
        raw.times = std::move(d.times);
        raw.data = std::move(d.data);
        seq = stabilize(raw, exponent);
    }
    if (n0 > 0)
        seq = remove_baseline(seq, n0);
    return seq;
}

struct SynthOpts {
    std::string kind = "chessboard";
    std::string out;
    std::uint64_t seed = 0;
    double snr = 1.0;
    std::uint32_t side = 0;
    std::uint32_t n = 0;
};

int cmd_synth(const SynthOpts& o) {
    PhantomSpec spec;
    if (o.kind == "chessboard")
        spec = chessboard_spec(o.side ? o.side : 55, o.n ? o.n : 100, {}, o.snr, o.seed);
    else if (o.kind == "phantom11")
        spec = phantom11_spec(o.side ? o.side : 112, o.n ? o.n : 120, o.snr, o.seed);
    else
        throw std::invalid_argument("unknown phantom kind: " + o.kind);

    const auto ph = generate(spec);
    write_dces(o.out + ".dces", ph.sequence.dims, ph.sequence.times, ph.sequence.data);
    write_label_map(o.out + "_truth.pgm", ph.truth);

    std::ostringstream cfg;
    cfg << "kind " << o.kind << "\n"
        << "side " << spec.dims.extent[0] << "\n"
        << "n " << spec.times.size() << "\n"
        << "snr " << sig6(o.snr) << "\n"
        << "seed " << o.seed << "\n"
        << "stabilized true\n"
        << "regions " << spec.curves.size() << "\n";
    std::vector<std::size_t> hist(spec.curves.size(), 0);
    for (auto l : spec.labels)
        ++hist[std::size_t(l)];
    for (std::size_t l = 0; l < spec.curves.size(); ++l)
        cfg << "curve " << l << " amplitude " << sig6(spec.curves[l].amplitude) << " peak "
            << sig6(spec.curves[l].peak_time) << " sharpness " << sig6(spec.curves[l].sharpness)
            << " voxels " << hist[l] << "\n";
    const auto scheme = build_scheme(std::uint32_t(spec.times.size()));
    for (const auto& s : separation_report(spec, scheme))
        cfg << "separation " << s.label_a << " " << s.label_b << " " << sig6(s.max_energy)
            << " delta_eq " << sig6(s.delta_equivalent) << "\n";
    atomic_write(o.out + "_spec.txt", cfg.str());

    std::cout << "wrote " << o.out << ".dces, " << o.out << "_truth.pgm, " << o.out
              << "_spec.txt\n";
    return 0;
}

struct SegmentOpts {
    std::string input, out;
    double alpha = 0.001;
    double delta = -1.0;
    double exponent = 0.45;
    std::uint32_t n0 = 0;
    int connectivity = 0;
    bool no_global = false;
    bool stabilized = false;
    bool auto_delta_flag = false;
    std::string grid_spec = "0.2:4:0.2";
    double slope_threshold = 0.1;
};

std::vector<double> parse_grid(const std::string& spec) {
    double lo = 0, hi = 0, step = 0;
    if (std::sscanf(spec.c_str(), "%lf:%lf:%lf", &lo, &hi, &step) != 3 || step <= 0 || hi < lo)
        throw std::invalid_argument("delta grid must be LO:HI:STEP with STEP > 0");
    std::vector<double> g;
    for (double v = lo; v <= hi + 1e-12; v += step)
        g.push_back(v);
    return g;
}

int cmd_segment(const SegmentOpts& o) {
    if (o.delta < 0 && !o.auto_delta_flag)
        throw std::invalid_argument("either --delta or --auto-delta is required");

    const auto seq = load_sequence(o.input, o.stabilized, o.exponent, o.n0);
    SegmentParams params;
    params.alpha = o.alpha;
    params.connectivity = o.connectivity;
    params.skip_global = o.no_global;
    params.exponent = o.exponent;
    params.baseline_count = o.n0;

    json summary;
    summary["command"] = "segment";
    summary["input"] = o.input;
    summary["alpha"] = o.alpha;
    summary["exponent"] = o.exponent;
    summary["n0"] = o.n0;
    summary["stabilized_input"] = o.stabilized;
    summary["skip_global"] = o.no_global;
    summary["n_retained"] = seq.time_count();
    summary["dims"] = {seq.dims.extent[0], seq.dims.extent[1], seq.dims.extent[2]};

    if (o.auto_delta_flag) {
        const auto grid = parse_grid(o.grid_spec);
        const auto scan = auto_delta(seq, params, grid, o.slope_threshold);
        params.delta = scan.selected;
        json table = json::array();
        for (std::size_t i = 0; i < scan.deltas.size(); ++i)
            table.push_back({{"delta", scan.deltas[i]}, {"clusters", scan.cluster_counts[i]}});
        summary["auto_delta"] = {{"grid", o.grid_spec},
                                 {"slope_threshold", o.slope_threshold},
                                 {"table", table},
                                 {"delta_knee", scan.delta_knee},
                                 {"selected", scan.selected},
                                 {"saturated", scan.saturated}};
        if (scan.saturated)
            std::cerr << "warning: cluster-count slope never fell below the threshold; "
                         "using the largest grid delta\n";
    } else {
        params.delta = o.delta;
    }

    const auto seg = segment_stabilized(seq, params);

    summary["delta"] = params.delta;
    summary["margin_energy"] = double(seq.time_count()) * params.delta * params.delta;
    summary["connectivity"] = seg.params.connectivity;
    summary["max_level"] = seg.max_level;
    summary["l_loc"] = seg.local_count;
    summary["l_star"] = seg.final_count;
    summary["runtime_seconds"] = seg.runtime_seconds;
    summary["merges"] = seg.trace.size();

    LabelMap labels{seg.dims, seg.labels};
    const std::string label_path = o.out + (seg.dims.ndims == 2 ? "_labels.pgm" : "_labels.txt");
    write_label_map(label_path, labels);
    write_trace_csv(o.out + "_trace.csv", seg.trace);
    write_means_csv(o.out + "_curves.csv", seg, seq.times);
    summary["files"] = {label_path, o.out + "_trace.csv", o.out + "_curves.csv"};
    atomic_write(o.out + "_summary.json", summary.dump(2) + "\n");

    std::cout << "l_loc " << seg.local_count << "\n"
              << "l_star " << seg.final_count << "\n"
              << "delta " << sig6(params.delta) << "\n"
              << "runtime_seconds " << sig6(seg.runtime_seconds) << "\n";
    return 0;
}

struct EvalOpts {
    std::string map_a, map_b, out;
};

int cmd_eval(const EvalOpts& o) {
    const auto a = read_label_map(o.map_a);
    const auto b = read_label_map(o.map_b);
    const auto fm = fm_index(a, b);
    const auto wfm = weighted_fm(a, b);
    std::cout << "FM " << sig6(fm.value) << (fm.degenerate ? " degenerate" : "") << "\n";
    std::cout << "wFM " << sig6(wfm.value) << (wfm.degenerate ? " degenerate" : "") << "\n";
    if (!o.out.empty()) {
        const auto mask = error_map(a, b);
        write_mask_pgm(o.out + "_errormap.pgm", a.dims, mask);
        std::size_t marked = 0;
        for (auto m : mask)
            marked += m;
        std::cout << "error_voxels " << marked << "\n";
        std::cout << "tie_break smallest-label\n";
    }
    return 0;
}

struct ResidualOpts {
    std::string input, labels, out;
    double exponent = 0.45;
    std::uint32_t n0 = 0;
    bool stabilized = false;
};

int cmd_residuals(const ResidualOpts& o) {
    const auto seq = load_sequence(o.input, o.stabilized, o.exponent, o.n0);
    const auto labels = read_label_map(o.labels);
    if (!(labels.dims == seq.dims))
        throw std::invalid_argument("label map grid does not match the sequence");

    const auto field = normalized_residuals(seq, labels.labels);

    std::vector<double> values;
    values.reserve(field.values.size());
    for (std::size_t v = 0; v < field.valid.size(); ++v)
        if (field.valid[v])
            for (std::uint32_t j = 0; j < field.time_count; ++j)
                values.push_back(field.values[v * field.time_count + j]);

    // 0.1-wide bins over [-6, 6]
    const int nbins = 120;
    std::vector<std::size_t> bins(nbins, 0);
    std::size_t below = 0, above = 0;
    for (double x : values) {
        if (x < -6.0)
            ++below;
        else if (x >= 6.0)
            ++above;
        else
            ++bins[std::size_t((x + 6.0) / 0.1)];
    }
    std::ostringstream hist;
    hist << "bin_low,bin_high,count\n";
    for (int b = 0; b < nbins; ++b)
        hist << sig6(-6.0 + 0.1 * b) << ',' << sig6(-6.0 + 0.1 * (b + 1)) << ',' << bins[b]
             << '\n';
    atomic_write(o.out + "_hist.csv", hist.str());

    auto sorted = values;
    std::sort(sorted.begin(), sorted.end());
    const double d = ks_statistic(sorted, [](double x) { return normal_cdf(x); });
    const double p = ks_pvalue(d, sorted.size());

    std::cout << "residuals " << values.size() << "\n"
              << "outliers_below " << below << "\n"
              << "outliers_above " << above << "\n"
              << "ks_statistic " << sig6(d) << "\n"
              << "ks_pvalue " << sig6(p) << "\n"
              << "ks_reject_at_0.01 " << (p <= 0.01 ? "true" : "false") << "\n";
    if (!field.skipped_clusters.empty()) {
        std::cout << "skipped_singleton_clusters";
        for (auto c : field.skipped_clusters)
            std::cout << ' ' << c;
        std::cout << "\n";
        std::cerr << "warning: " << field.skipped_clusters.size()
                  << " singleton cluster(s) carry no residuals\n";
    }
    return 0;
}

struct MarginOpts {
    std::uint32_t n = 100;
    double kappa = 11.0;
    std::uint64_t grid_size = 0;
    std::string dims;
};

int cmd_margin(const MarginOpts& o) {
    std::uint64_t cells = o.grid_size;
    if (!o.dims.empty()) {
        unsigned long x = 0, y = 0, z = 1;
        const int got = std::sscanf(o.dims.c_str(), "%lux%lux%lu", &x, &y, &z);
        if (got < 2)
            throw std::invalid_argument("--dims must look like 512x512 or 25x100x100");
        if (got == 2)
            z = 1;
        cells = std::uint64_t(x) * y * z;
    }
    const auto bound = min_margin(o.n, o.kappa);
    std::cout << "n " << o.n << "\n"
              << "kappa " << sig6(o.kappa) << "\n"
              << "min_margin " << sig6(bound.energy) << "\n"
              << "delta_min " << sig6(bound.delta_min) << "\n";
    if (cells > 0)
        std::cout << "grid_size " << cells << "\n"
                  << "wrong_binding_bound " << sig6(wrong_binding_bound(cells, o.n, o.kappa))
                  << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Segmentation of dynamic image sequences by hierarchical merging under a "
                 "multi-resolution equivalence test"};
    app.require_subcommand(1);

    SynthOpts so;
    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic ground-truth sequence");
    synth_cmd->add_option("--kind", so.kind, "chessboard or phantom11");
    synth_cmd->add_option("--out", so.out, "output prefix")->required();
    synth_cmd->add_option("--seed", so.seed, "noise seed");
    synth_cmd->add_option("--snr", so.snr, "multiplier applied to the true curves");
    synth_cmd->add_option("--side", so.side, "grid side length (default per kind)");
    synth_cmd->add_option("--n", so.n, "number of images (default per kind)");

    SegmentOpts go;
    auto* seg_cmd = app.add_subcommand("segment", "Segment a DCES sequence");
    seg_cmd->add_option("--input", go.input, "input .dces file")->required();
    seg_cmd->add_option("--out", go.out, "output prefix")->required();
    seg_cmd->add_option("--alpha", go.alpha, "test level (default 0.001)");
    seg_cmd->add_option("--delta", go.delta, "equivalence tolerance");
    seg_cmd->add_option("-a,--exponent", go.exponent, "stabilization exponent (default 0.45)");
    seg_cmd->add_option("--n0", go.n0, "baseline image count to remove");
    seg_cmd->add_option("--connectivity", go.connectivity, "4|8 in 2D, 6|26 in 3D");
    seg_cmd->add_flag("--no-global", go.no_global, "stop after the local phase");
    seg_cmd->add_flag("--stabilized", go.stabilized, "input is already variance-stabilized");
    seg_cmd->add_flag("--auto-delta", go.auto_delta_flag, "pick delta by the slope rule");
    seg_cmd->add_option("--delta-grid", go.grid_spec, "LO:HI:STEP grid for --auto-delta");
    seg_cmd->add_option("--slope-threshold", go.slope_threshold,
                        "relative-slope threshold for --auto-delta (default 0.1)");

    EvalOpts eo;
    auto* eval_cmd = app.add_subcommand("eval", "Compare two label maps");
    eval_cmd->add_option("--map-a", eo.map_a, "first (reference) label map")->required();
    eval_cmd->add_option("--map-b", eo.map_b, "second label map")->required();
    eval_cmd->add_option("--out", eo.out, "output prefix for the error map");

    ResidualOpts ro;
    auto* res_cmd = app.add_subcommand("residuals", "Normalized-residual diagnostics");
    res_cmd->add_option("--input", ro.input, "input .dces file")->required();
    res_cmd->add_option("--labels", ro.labels, "segmentation label map")->required();
    res_cmd->add_option("--out", ro.out, "output prefix")->required();
    res_cmd->add_option("-a,--exponent", ro.exponent, "stabilization exponent");
    res_cmd->add_option("--n0", ro.n0, "baseline image count to remove");
    res_cmd->add_flag("--stabilized", ro.stabilized, "input is already variance-stabilized");

    MarginOpts mo;
    auto* margin_cmd = app.add_subcommand("margin", "Tolerance and error-bound guidance");
    margin_cmd->add_option("--n", mo.n, "number of (retained) images")->required();
    margin_cmd->add_option("--kappa", mo.kappa, "wrong-binding strength (default 11)");
    margin_cmd->add_option("--grid-size", mo.grid_size, "number of voxels");
    margin_cmd->add_option("--dims", mo.dims, "grid extents, e.g. 512x512");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*synth_cmd)
            return cmd_synth(so);
        if (*seg_cmd)
            return cmd_segment(go);
        if (*eval_cmd)
            return cmd_eval(eo);
        if (*res_cmd)
            return cmd_residuals(ro);
        if (*margin_cmd)
            return cmd_margin(mo);
    } catch (const FormatError& e) {
        std::cerr << "error: EFORMAT at byte " << e.offset() << ": " << e.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: EPARAM: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: EIO: " << e.what() << "\n";
        return 4;
    }
    return 1;
}
