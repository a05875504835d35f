#include "dceseg/io.hpp"

#include <bit>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace dceseg {

static_assert(std::endian::native == std::endian::little,
              "DCES I/O assumes a little-endian host");

namespace {

void append_bytes(std::string& out, const void* p, std::size_t n) {
    out.append(reinterpret_cast<const char*>(p), n);
}

template <class T>
void append_value(std::string& out, T v) {
    append_bytes(out, &v, sizeof(T));
}

class Reader {
public:
    explicit Reader(const std::string& path) : path_(path) {
        std::ifstream in(path, std::ios::binary);
        if (!in)
            throw std::runtime_error("cannot open " + path);
        std::ostringstream ss;
        ss << in.rdbuf();
        buf_ = std::move(ss).str();
    }

    template <class T>
    T take(const char* what) {
        if (pos_ + sizeof(T) > buf_.size())
            throw FormatError(std::string("truncated DCES file: expected ") + what, pos_);
        T v;
        std::memcpy(&v, buf_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }

    std::uint64_t pos() const { return pos_; }
    std::size_t size() const { return buf_.size(); }

private:
    std::string path_;
    std::string buf_;
    std::uint64_t pos_ = 0;
};

}  // namespace

void atomic_write(const std::string& path, const std::string& contents) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw std::runtime_error("cannot write " + tmp.string());
        out.write(contents.data(), std::streamsize(contents.size()));
        if (!out)
            throw std::runtime_error("short write to " + tmp.string());
    }
    fs::rename(tmp, target);
}

void write_dces(const std::string& path, const GridDims& dims,
                std::span<const double> times, std::span<const double> voxel_major_data) {
    dims.validate();
    const std::size_t nvox = dims.voxel_count();
    const std::uint32_t n = std::uint32_t(times.size());
    if (voxel_major_data.size() != nvox * n)
        throw std::invalid_argument("data size does not match dims and times");

    std::string out;
    out.reserve(16 + 8 * times.size() + 4 * voxel_major_data.size());
    out += "DCES";
    append_value<std::uint8_t>(out, 1);
    append_value<std::uint8_t>(out, std::uint8_t(dims.ndims));
    for (int i = 0; i < dims.ndims; ++i)
        append_value<std::uint32_t>(out, dims.extent[std::size_t(i)]);
    append_value<std::uint32_t>(out, n);
    for (double t : times)
        append_value<double>(out, t);
    // time-major frames on disk
    for (std::uint32_t j = 0; j < n; ++j)
        for (std::size_t v = 0; v < nvox; ++v)
            append_value<float>(out, float(voxel_major_data[v * n + j]));
    atomic_write(path, out);
}

DcesData read_dces(const std::string& path) {
    Reader r(path);
    char magic[4];
    for (char& c : magic)
        c = r.take<char>("magic");
    if (std::memcmp(magic, "DCES", 4) != 0)
        throw FormatError("bad magic, not a DCES file", 0);
    const auto version = r.take<std::uint8_t>("version");
    if (version != 1)
        throw FormatError("unsupported DCES version " + std::to_string(version), r.pos() - 1);
    const auto ndims = r.take<std::uint8_t>("ndims");
    if (ndims != 2 && ndims != 3)
        throw FormatError("ndims must be 2 or 3", r.pos() - 1);

    DcesData d;
    d.dims.ndims = ndims;
    d.dims.extent = {1, 1, 1};
    for (int i = 0; i < ndims; ++i) {
        const auto e = r.take<std::uint32_t>("extent");
        if (e == 0)
            throw FormatError("zero grid extent", r.pos() - 4);
        d.dims.extent[std::size_t(i)] = e;
    }
    const auto n = r.take<std::uint32_t>("time count");
    if (n == 0)
        throw FormatError("zero time count", r.pos() - 4);
    d.times.resize(n);
    for (std::uint32_t j = 0; j < n; ++j) {
        d.times[j] = r.take<double>("time");
        if (j > 0 && !(d.times[j] > d.times[j - 1]))
            throw FormatError("times not strictly increasing", r.pos() - 8);
    }
    const std::size_t nvox = d.dims.voxel_count();
    d.data.resize(nvox * n);
    for (std::uint32_t j = 0; j < n; ++j)
        for (std::size_t v = 0; v < nvox; ++v)
            d.data[v * n + j] = double(r.take<float>("intensity"));
    if (r.pos() != r.size())
        throw FormatError("trailing bytes after DCES payload", r.pos());
    return d;
}

void write_label_map(const std::string& path, const LabelMap& map) {
    map.validate();
    std::ostringstream out;
    if (map.dims.ndims == 2) {
        const std::int32_t maxval = std::max(map.label_count() - 1, 1);
        out << "P2\n" << map.dims.extent[0] << " " << map.dims.extent[1] << "\n" << maxval << "\n";
        for (std::uint32_t y = 0; y < map.dims.extent[1]; ++y) {
            for (std::uint32_t x = 0; x < map.dims.extent[0]; ++x) {
                if (x)
                    out << ' ';
                out << map.labels[map.dims.index(x, y)];
            }
            out << '\n';
        }
    } else {
        out << "# labels3d " << map.dims.extent[0] << " " << map.dims.extent[1] << " "
            << map.dims.extent[2] << "\n";
        for (std::uint32_t z = 0; z < map.dims.extent[2]; ++z)
            for (std::uint32_t y = 0; y < map.dims.extent[1]; ++y)
                for (std::uint32_t x = 0; x < map.dims.extent[0]; ++x)
                    out << x << ' ' << y << ' ' << z << ' ' << map.labels[map.dims.index(x, y, z)]
                        << '\n';
    }
    atomic_write(path, std::move(out).str());
}

LabelMap read_label_map(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open " + path);
    std::string head;
    in >> head;
    LabelMap map;
    if (head == "P2") {
        std::uint32_t w = 0, h = 0;
        std::int64_t maxval = 0;
        in >> w >> h >> maxval;
        if (!in || w == 0 || h == 0)
            throw FormatError("bad PGM header in " + path, 0);
        map.dims = GridDims::d2(w, h);
        map.labels.resize(map.dims.voxel_count());
        for (std::uint32_t y = 0; y < h; ++y)
            for (std::uint32_t x = 0; x < w; ++x) {
                std::int64_t v;
                if (!(in >> v) || v < 0)
                    throw FormatError("bad PGM pixel in " + path, 0);
                map.labels[map.dims.index(x, y)] = std::int32_t(v);
            }
    } else if (head == "#") {
        std::string tag;
        std::uint32_t nx = 0, ny = 0, nz = 0;
        in >> tag >> nx >> ny >> nz;
        if (!in || tag != "labels3d")
            throw FormatError("bad 3D label header in " + path, 0);
        map.dims = GridDims::d3(nx, ny, nz);
        map.labels.assign(map.dims.voxel_count(), -1);
        std::uint32_t x, y, z;
        std::int32_t l;
        while (in >> x >> y >> z >> l) {
            if (x >= nx || y >= ny || z >= nz)
                throw FormatError("3D label coordinate out of range in " + path, 0);
            map.labels[map.dims.index(x, y, z)] = l;
        }
        for (auto v : map.labels)
            if (v < 0)
                throw FormatError("3D label map does not cover the grid: " + path, 0);
    } else {
        throw FormatError("unrecognized label map format in " + path, 0);
    }
    map.validate();
    return map;
}

void write_mask_pgm(const std::string& path, const GridDims& dims,
                    std::span<const std::uint8_t> mask) {
    if (mask.size() != dims.voxel_count())
        throw std::invalid_argument("mask size does not match grid");
    std::ostringstream out;
    out << "P2\n" << dims.extent[0] << " " << dims.extent[1] * dims.extent[2] << "\n1\n";
    const std::uint32_t rows = dims.extent[1] * dims.extent[2];
    for (std::uint32_t y = 0; y < rows; ++y) {
        for (std::uint32_t x = 0; x < dims.extent[0]; ++x) {
            if (x)
                out << ' ';
            out << int(mask[x + std::size_t(dims.extent[0]) * y]);
        }
        out << '\n';
    }
    atomic_write(path, std::move(out).str());
}

namespace {

// Shortest representation that round-trips.
std::string format_double(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace

void write_trace_csv(const std::string& path, std::span<const MergeRecord> trace) {
    std::ostringstream out;
    out << "iteration,phase,id_a,id_b,new_id,p_raw,p_corrected,control,ell\n";
    for (const auto& r : trace) {
        out << r.iteration << ',' << (r.phase == Phase::Local ? "local" : "global") << ','
            << r.id_a << ',' << r.id_b << ',' << r.new_id << ',' << format_double(r.p_raw) << ','
            << format_double(r.p_corrected) << ',' << format_double(r.control) << ',' << r.ell
            << '\n';
    }
    atomic_write(path, std::move(out).str());
}

void write_means_csv(const std::string& path, const Segmentation& seg,
                     std::span<const double> times) {
    std::ostringstream out;
    out << "label,size";
    for (double t : times)
        out << ",t" << format_double(t);
    out << '\n';
    for (std::size_t k = 0; k < seg.cluster_means.size(); ++k) {
        out << k << ',' << seg.cluster_sizes[k];
        for (double m : seg.cluster_means[k])
            out << ',' << format_double(m);
        out << '\n';
    }
    atomic_write(path, std::move(out).str());
}

}  // namespace dceseg
