#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dceseg/clustering.hpp"
#include "dceseg/equivtest.hpp"
#include "dceseg/eval.hpp"
#include "dceseg/io.hpp"
#include "dceseg/model.hpp"
#include "dceseg/special.hpp"
#include "dceseg/synth.hpp"

namespace py = pybind11;
using namespace dceseg;

namespace {

// Sequences cross the boundary as (nt, ny, nx) or (nt, nz, ny, nx) arrays,
// x fastest; internally curves are voxel-major.

GridDims dims_from_shape(const py::array& arr) {
    if (arr.ndim() == 3)
        return GridDims::d2(std::uint32_t(arr.shape(2)), std::uint32_t(arr.shape(1)));
    if (arr.ndim() == 4)
        return GridDims::d3(std::uint32_t(arr.shape(3)), std::uint32_t(arr.shape(2)),
                            std::uint32_t(arr.shape(1)));
    throw std::invalid_argument("sequence array must be (nt, ny, nx) or (nt, nz, ny, nx)");
}

std::vector<double> default_times(std::uint32_t n) {
    std::vector<double> t(n);
    for (std::uint32_t j = 0; j < n; ++j)
        t[j] = double(j + 1);
    return t;
}

StabilizedSequence sequence_from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& arr,
                                       std::optional<std::vector<double>> times, double exponent) {
    StabilizedSequence seq;
    seq.dims = dims_from_shape(arr);
    const auto n = std::uint32_t(arr.shape(0));
    seq.times = times ? *times : default_times(n);
    if (seq.times.size() != n)
        throw std::invalid_argument("times length does not match the first axis");
    seq.exponent = exponent;
    const std::size_t nvox = seq.dims.voxel_count();
    seq.data.resize(nvox * n);
    const double* src = arr.data();
    for (std::uint32_t j = 0; j < n; ++j)
        for (std::size_t v = 0; v < nvox; ++v)
            seq.data[v * n + j] = src[std::size_t(j) * nvox + v];
    return seq;
}

py::array_t<double> sequence_to_array(const StabilizedSequence& seq) {
    const std::uint32_t n = seq.time_count();
    const std::size_t nvox = seq.dims.voxel_count();
    std::vector<py::ssize_t> shape;
    if (seq.dims.ndims == 2)
        shape = {py::ssize_t(n), py::ssize_t(seq.dims.extent[1]), py::ssize_t(seq.dims.extent[0])};
    else
        shape = {py::ssize_t(n), py::ssize_t(seq.dims.extent[2]), py::ssize_t(seq.dims.extent[1]),
                 py::ssize_t(seq.dims.extent[0])};
    py::array_t<double> out(shape);
    double* dst = out.mutable_data();
    for (std::uint32_t j = 0; j < n; ++j)
        for (std::size_t v = 0; v < nvox; ++v)
            dst[std::size_t(j) * nvox + v] = seq.data[v * n + j];
    return out;
}

py::array_t<std::int32_t> labels_to_array(const GridDims& dims,
                                          const std::vector<std::int32_t>& labels) {
    std::vector<py::ssize_t> shape;
    if (dims.ndims == 2)
        shape = {py::ssize_t(dims.extent[1]), py::ssize_t(dims.extent[0])};
    else
        shape = {py::ssize_t(dims.extent[2]), py::ssize_t(dims.extent[1]),
                 py::ssize_t(dims.extent[0])};
    py::array_t<std::int32_t> out(shape);
    std::copy(labels.begin(), labels.end(), out.mutable_data());
    return out;
}

LabelMap labelmap_from_array(const py::array_t<std::int32_t, py::array::c_style | py::array::forcecast>& arr) {
    LabelMap map;
    if (arr.ndim() == 2)
        map.dims = GridDims::d2(std::uint32_t(arr.shape(1)), std::uint32_t(arr.shape(0)));
    else if (arr.ndim() == 3)
        map.dims = GridDims::d3(std::uint32_t(arr.shape(2)), std::uint32_t(arr.shape(1)),
                                std::uint32_t(arr.shape(0)));
    else
        throw std::invalid_argument("label array must be 2D or 3D");
    map.labels.assign(arr.data(), arr.data() + arr.size());
    return map;
}

py::dict trace_to_dict(const std::vector<MergeRecord>& trace) {
    const py::ssize_t m = py::ssize_t(trace.size());
    py::array_t<std::uint32_t> iteration(m), ell(m);
    py::array_t<std::int32_t> id_a(m), id_b(m), new_id(m);
    py::array_t<double> p_raw(m), p_corrected(m), control(m);
    py::list phase;
    for (py::ssize_t i = 0; i < m; ++i) {
        const auto& r = trace[std::size_t(i)];
        iteration.mutable_data()[i] = r.iteration;
        ell.mutable_data()[i] = r.ell;
        id_a.mutable_data()[i] = r.id_a;
        id_b.mutable_data()[i] = r.id_b;
        new_id.mutable_data()[i] = r.new_id;
        p_raw.mutable_data()[i] = r.p_raw;
        p_corrected.mutable_data()[i] = r.p_corrected;
        control.mutable_data()[i] = r.control;
        phase.append(r.phase == Phase::Local ? "local" : "global");
    }
    py::dict d;
    d["iteration"] = iteration;
    d["phase"] = phase;
    d["id_a"] = id_a;
    d["id_b"] = id_b;
    d["new_id"] = new_id;
    d["p_raw"] = p_raw;
    d["p_corrected"] = p_corrected;
    d["control"] = control;
    d["ell"] = ell;
    return d;
}

SegmentParams make_params(double alpha, double delta, int connectivity, bool skip_global,
                          double exponent, std::uint32_t n0) {
    SegmentParams p;
    p.alpha = alpha;
    p.delta = delta;
    p.connectivity = connectivity;
    p.skip_global = skip_global;
    p.exponent = exponent;
    p.baseline_count = n0;
    return p;
}

}  // namespace

PYBIND11_MODULE(dceseg, m) {
    m.doc() = "Segmentation of dynamic image sequences by hierarchical merging under a "
              "multi-resolution equivalence test";

    // ---- statistical kernels -------------------------------------------------
    m.def("noncentral_chisq_cdf", &noncentral_chisq_cdf, py::arg("x"), py::arg("dof"),
          py::arg("noncentrality"));
    m.def("chisq_cdf", &chisq_cdf, py::arg("x"), py::arg("dof"));
    m.def("control_threshold", &control_threshold, py::arg("ell"), py::arg("alpha"),
          py::arg("max_level"));
    m.def(
        "min_margin",
        [](std::uint32_t n, double kappa) {
            const auto b = min_margin(n, kappa);
            return py::make_tuple(b.energy, b.delta_min);
        },
        py::arg("n"), py::arg("kappa"), "returns (required n*delta^2, minimal delta)");
    m.def("wrong_binding_bound", &wrong_binding_bound, py::arg("grid_size"), py::arg("n"),
          py::arg("kappa"));

    py::class_<DyadicScheme>(m, "DyadicScheme")
        .def_readonly("n", &DyadicScheme::n)
        .def_readonly("max_level", &DyadicScheme::max_level)
        .def("blocks", [](const DyadicScheme& s, int level) {
            if (level < 0 || level > s.max_level)
                throw std::invalid_argument("level out of range");
            py::list out;
            for (std::uint32_t k = 0; k < s.block_count(level); ++k)
                out.append(py::make_tuple(s.block_begin(level, k), s.block_end(level, k)));
            return out;
        });
    m.def("build_scheme", &build_scheme, py::arg("n"));

    m.def(
        "scale_stats",
        [](const std::vector<double>& values, std::optional<std::uint32_t> n) {
            const auto scheme = build_scheme(n ? *n : std::uint32_t(values.size()));
            const auto st = scale_stats(values, scheme);
            return py::make_tuple(st.stat, st.dof);
        },
        py::arg("values"), py::arg("n") = py::none(),
        "per-level residual energies and their dof");

    m.def(
        "pair_pvalue",
        [](const std::vector<double>& sum_x, std::size_t size_x, const std::vector<double>& sum_y,
           std::size_t size_y, double delta) {
            const auto scheme = build_scheme(std::uint32_t(sum_x.size()));
            const MarginSpec margin{delta, std::uint32_t(sum_x.size())};
            const auto p = pair_pvalue(sum_x, size_x, sum_y, size_y, scheme, margin);
            py::dict d;
            d["p"] = p.p;
            d["per_scale"] = p.per_scale;
            d["stats"] = p.stats.stat;
            d["dof"] = p.stats.dof;
            return d;
        },
        py::arg("sum_x"), py::arg("size_x"), py::arg("sum_y"), py::arg("size_y"),
        py::arg("delta"));

    // ---- model ---------------------------------------------------------------
    m.def(
        "stabilize",
        [](py::array_t<double, py::array::c_style | py::array::forcecast> data, double exponent,
           std::optional<std::vector<double>> times) {
            RawSequence raw;
            raw.dims = dims_from_shape(data);
            const auto n = std::uint32_t(data.shape(0));
            raw.times = times ? *times : default_times(n);
            const std::size_t nvox = raw.dims.voxel_count();
            raw.data.resize(nvox * n);
            const double* src = data.data();
            for (std::uint32_t j = 0; j < n; ++j)
                for (std::size_t v = 0; v < nvox; ++v)
                    raw.data[v * n + j] = src[std::size_t(j) * nvox + v];
            return sequence_to_array(stabilize(raw, exponent));
        },
        py::arg("data"), py::arg("exponent") = 0.45, py::arg("times") = py::none());

    m.def(
        "remove_baseline",
        [](py::array_t<double, py::array::c_style | py::array::forcecast> data, std::uint32_t n0,
           std::optional<std::vector<double>> times) {
            const auto seq = sequence_from_array(data, times, 0.45);
            return sequence_to_array(remove_baseline(seq, n0));
        },
        py::arg("data"), py::arg("n0"), py::arg("times") = py::none());

    m.def(
        "normalized_residuals",
        [](py::array_t<double, py::array::c_style | py::array::forcecast> data,
           py::array_t<std::int32_t, py::array::c_style | py::array::forcecast> labels) {
            const auto seq = sequence_from_array(data, std::nullopt, 0.45);
            const auto map = labelmap_from_array(labels);
            if (!(map.dims == seq.dims))
                throw std::invalid_argument("label shape does not match the sequence");
            const auto field = normalized_residuals(seq, map.labels);
            StabilizedSequence view;
            view.dims = seq.dims;
            view.times = seq.times;
            view.data = field.values;
            view.exponent = seq.exponent;
            py::dict d;
            d["values"] = sequence_to_array(view);
            d["valid"] = labels_to_array(seq.dims,
                                         std::vector<std::int32_t>(field.valid.begin(),
                                                                   field.valid.end()));
            d["skipped_clusters"] = field.skipped_clusters;
            return d;
        },
        py::arg("data"), py::arg("labels"));

    // ---- clustering ------------------------------------------------------------
    py::class_<Segmentation>(m, "Segmentation")
        .def_property_readonly(
            "labels", [](const Segmentation& s) { return labels_to_array(s.dims, s.labels); })
        .def_readonly("local_count", &Segmentation::local_count)
        .def_readonly("final_count", &Segmentation::final_count)
        .def_readonly("cluster_sizes", &Segmentation::cluster_sizes)
        .def_property_readonly("cluster_means",
                               [](const Segmentation& s) {
                                   py::array_t<double> out(
                                       {py::ssize_t(s.cluster_means.size()),
                                        py::ssize_t(s.time_count)});
                                   for (std::size_t k = 0; k < s.cluster_means.size(); ++k)
                                       std::copy(s.cluster_means[k].begin(),
                                                 s.cluster_means[k].end(),
                                                 out.mutable_data() + k * s.time_count);
                                   return out;
                               })
        .def_property_readonly("trace",
                               [](const Segmentation& s) { return trace_to_dict(s.trace); })
        .def_readonly("runtime_seconds", &Segmentation::runtime_seconds);

    m.def(
        "segment",
        [](py::array_t<double, py::array::c_style | py::array::forcecast> data, double delta,
           double alpha, std::optional<std::vector<double>> times, bool stabilized,
           double exponent, std::uint32_t n0, int connectivity, bool skip_global) {
            const auto params = make_params(alpha, delta, connectivity, skip_global, exponent, n0);
            if (stabilized) {
                auto seq = sequence_from_array(data, times, exponent);
                if (n0 > 0)
                    seq = remove_baseline(seq, n0);
                return segment_stabilized(seq, params);
            }
            RawSequence raw;
            raw.dims = dims_from_shape(data);
            const auto n = std::uint32_t(data.shape(0));
            raw.times = times ? *times : default_times(n);
            const std::size_t nvox = raw.dims.voxel_count();
            raw.data.resize(nvox * n);
            const double* src = data.data();
            for (std::uint32_t j = 0; j < n; ++j)
                for (std::size_t v = 0; v < nvox; ++v)
                    raw.data[v * n + j] = src[std::size_t(j) * nvox + v];
            return segment(raw, params);
        },
        py::arg("data"), py::arg("delta"), py::arg("alpha") = 0.001,
        py::arg("times") = py::none(), py::arg("stabilized") = true, py::arg("exponent") = 0.45,
        py::arg("n0") = 0, py::arg("connectivity") = 0, py::arg("skip_global") = false);

    m.def(
        "auto_delta",
        [](py::array_t<double, py::array::c_style | py::array::forcecast> data,
           const std::vector<double>& grid, double slope_threshold, double alpha,
           std::optional<std::vector<double>> times, int connectivity, bool skip_global) {
            const auto seq = sequence_from_array(data, times, 0.45);
            const auto params = make_params(alpha, 0.0, connectivity, skip_global, 0.45, 0);
            const auto scan = auto_delta(seq, params, grid, slope_threshold);
            py::dict d;
            d["deltas"] = scan.deltas;
            d["cluster_counts"] = scan.cluster_counts;
            d["delta_knee"] = scan.delta_knee;
            d["selected"] = scan.selected;
            d["saturated"] = scan.saturated;
            return d;
        },
        py::arg("data"), py::arg("grid"), py::arg("slope_threshold") = 0.1,
        py::arg("alpha") = 0.001, py::arg("times") = py::none(), py::arg("connectivity") = 0,
        py::arg("skip_global") = false);

    // ---- evaluation ------------------------------------------------------------
    m.def(
        "fm_index",
        [](py::array_t<std::int32_t, py::array::c_style | py::array::forcecast> a,
           py::array_t<std::int32_t, py::array::c_style | py::array::forcecast> b) {
            return fm_index(labelmap_from_array(a), labelmap_from_array(b)).value;
        },
        py::arg("a"), py::arg("b"));
    m.def(
        "weighted_fm",
        [](py::array_t<std::int32_t, py::array::c_style | py::array::forcecast> a,
           py::array_t<std::int32_t, py::array::c_style | py::array::forcecast> b) {
            return weighted_fm(labelmap_from_array(a), labelmap_from_array(b)).value;
        },
        py::arg("a"), py::arg("b"), "weights come from the first partition");
    m.def(
        "error_map",
        [](py::array_t<std::int32_t, py::array::c_style | py::array::forcecast> a,
           py::array_t<std::int32_t, py::array::c_style | py::array::forcecast> b) {
            const auto pa = labelmap_from_array(a);
            const auto mask = error_map(pa, labelmap_from_array(b));
            return labels_to_array(pa.dims,
                                   std::vector<std::int32_t>(mask.begin(), mask.end()));
        },
        py::arg("a"), py::arg("b"));

    // ---- synthetic phantoms ------------------------------------------------------
    py::class_<PhantomSpec>(m, "PhantomSpec")
        .def_property_readonly("labels",
                               [](const PhantomSpec& s) { return labels_to_array(s.dims, s.labels); })
        .def_readonly("times", &PhantomSpec::times)
        .def_readonly("snr", &PhantomSpec::snr)
        .def_readonly("seed", &PhantomSpec::seed)
        .def(
            "generate",
            [](const PhantomSpec& s, bool noise) {
                const auto ph = generate(s, noise);
                return py::make_tuple(sequence_to_array(ph.sequence),
                                      labels_to_array(ph.truth.dims, ph.truth.labels),
                                      ph.sequence.times);
            },
            py::arg("noise") = true, "returns (data, truth, times)")
        .def(
            "separations",
            [](const PhantomSpec& s, bool singleton) {
                const auto scheme = build_scheme(std::uint32_t(s.times.size()));
                py::list out;
                for (const auto& sep : separation_report(s, scheme, singleton)) {
                    py::dict d;
                    d["label_a"] = sep.label_a;
                    d["label_b"] = sep.label_b;
                    d["per_scale"] = sep.per_scale;
                    d["max_energy"] = sep.max_energy;
                    d["delta_equivalent"] = sep.delta_equivalent;
                    out.append(d);
                }
                return out;
            },
            py::arg("singleton_sizes") = false);

    m.def("chessboard_spec",
          [](std::uint32_t side, std::uint32_t n, double snr, std::uint64_t seed) {
              return chessboard_spec(side, n, {}, snr, seed);
          },
          py::arg("side") = 55, py::arg("n") = 100, py::arg("snr") = 1.0, py::arg("seed") = 0);
    m.def("phantom11_spec", &phantom11_spec, py::arg("side") = 112, py::arg("n") = 120,
          py::arg("snr") = 1.0, py::arg("seed") = 0);

    // ---- files -------------------------------------------------------------------
    m.def(
        "write_dces",
        [](const std::string& path,
           py::array_t<double, py::array::c_style | py::array::forcecast> data,
           std::optional<std::vector<double>> times) {
            const auto seq = sequence_from_array(data, times, 0.45);
            write_dces(path, seq.dims, seq.times, seq.data);
        },
        py::arg("path"), py::arg("data"), py::arg("times") = py::none());
    m.def(
        "read_dces",
        [](const std::string& path) {
            const auto d = read_dces(path);
            StabilizedSequence seq;
            seq.dims = d.dims;
            seq.times = d.times;
            seq.data = d.data;
            return py::make_tuple(sequence_to_array(seq), d.times);
        },
        py::arg("path"), "returns (data, times)");
}
