#include "ibflow/dataset.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>

static_assert(std::endian::native == std::endian::little,
              "IBDS format assumes a little-endian host");

namespace ibflow {

double quantize32(double v) { return static_cast<double>(static_cast<float>(v)); }

void quantize32(Array2D& a) {
    for (double& v : a.raw()) v = quantize32(v);
}

StaggeredField SnapshotDataset::to_field(size_t index, const Grid& g) const {
    require(index < snaps.size(), "snapshot index out of range");
    StaggeredField f(g);
    f.u = snaps[index].u;
    f.v = snaps[index].v;
    return f;
}

namespace {

constexpr char kMagic[4] = {'I', 'B', 'D', 'S'};

template <typename T>
void put(std::ofstream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw ConfigError("dataset file truncated");
    return v;
}

void write_header(std::ofstream& os, const DatasetHeader& h) {
    os.write(kMagic, 4);
    put(os, h.version);
    put(os, h.nx);
    put(os, h.ny);
    put(os, h.dt_learn);
    put(os, h.dt);
    put(os, h.rho);
    put(os, h.nu);
    put(os, h.u_inf);
    put(os, h.diameter);
    put(os, h.case_kind);
    put(os, h.omega_a);
    put(os, h.f_r);
    put(os, h.re);
    put(os, h.win_x0);
    put(os, h.win_y0);
    put(os, h.win_w);
    put(os, h.win_h);
    put(os, h.cyl_x);
    put(os, h.cyl_y);
    put(os, h.n_markers);
    put(os, h.snapshot_count);
}

DatasetHeader read_header(std::ifstream& is) {
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0) throw ConfigError("not an IBDS dataset");
    DatasetHeader h;
    h.version = get<uint32_t>(is);
    if (h.version != 1) throw ConfigError("unsupported dataset version");
    h.nx = get<int32_t>(is);
    h.ny = get<int32_t>(is);
    h.dt_learn = get<double>(is);
    h.dt = get<double>(is);
    h.rho = get<double>(is);
    h.nu = get<double>(is);
    h.u_inf = get<double>(is);
    h.diameter = get<double>(is);
    h.case_kind = get<uint32_t>(is);
    h.omega_a = get<double>(is);
    h.f_r = get<double>(is);
    h.re = get<double>(is);
    h.win_x0 = get<double>(is);
    h.win_y0 = get<double>(is);
    h.win_w = get<double>(is);
    h.win_h = get<double>(is);
    h.cyl_x = get<double>(is);
    h.cyl_y = get<double>(is);
    h.n_markers = get<int32_t>(is);
    h.snapshot_count = get<uint64_t>(is);
    return h;
}

void write_floats(std::ofstream& os, const Array2D& a) {
    std::vector<float> buf(a.size());
    for (size_t i = 0; i < a.size(); ++i) buf[i] = static_cast<float>(a.raw()[i]);
    os.write(reinterpret_cast<const char*>(buf.data()),
             static_cast<std::streamsize>(buf.size() * sizeof(float)));
}

Array2D read_floats(std::ifstream& is, int rows, int cols) {
    std::vector<float> buf(static_cast<size_t>(rows) * cols);
    is.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!is) throw ConfigError("dataset file truncated");
    Array2D a(rows, cols);
    for (size_t i = 0; i < buf.size(); ++i) a.raw()[i] = static_cast<double>(buf[i]);
    return a;
}

void write_snapshot(std::ofstream& os, const Snapshot& s) {
    put(os, static_cast<int64_t>(s.k));
    put(os, s.omega_k);
    write_floats(os, s.u);
    write_floats(os, s.v);
    const float f[2] = {static_cast<float>(s.force.x), static_cast<float>(s.force.y)};
    os.write(reinterpret_cast<const char*>(f), sizeof(f));
}

} // namespace

void write_dataset(const std::string& path, const SnapshotDataset& ds) {
    DatasetWriter w(path, ds.header);
    for (const Snapshot& s : ds.snaps) w.append(s);
    w.close();
}

SnapshotDataset read_dataset(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError("cannot open dataset: " + path);
    SnapshotDataset ds;
    ds.header = read_header(is);
    ds.snaps.resize(ds.header.snapshot_count);
    long prev_k = -1;
    bool first = true;
    for (Snapshot& s : ds.snaps) {
        s.k = static_cast<long>(get<int64_t>(is));
        s.omega_k = get<double>(is);
        s.u = read_floats(is, ds.header.ny, ds.header.nx + 1);
        s.v = read_floats(is, ds.header.ny + 1, ds.header.nx);
        float f[2];
        is.read(reinterpret_cast<char*>(f), sizeof(f));
        if (!is) throw ConfigError("dataset file truncated");
        s.force = {static_cast<double>(f[0]), static_cast<double>(f[1])};
        if (!first && s.k != prev_k + 1)
            throw ConfigError("dataset snapshot indices are not consecutive");
        prev_k = s.k;
        first = false;
    }
    return ds;
}

DatasetWriter::DatasetWriter(std::string path, DatasetHeader hdr)
    : path_(std::move(path)), tmp_path_(path_ + ".tmp"), hdr_(hdr) {
    auto* os = new std::ofstream(tmp_path_, std::ios::binary);
    if (!*os) {
        delete os;
        throw ConfigError("cannot open dataset for writing: " + tmp_path_);
    }
    os_ = os;
    hdr_.snapshot_count = 0;
    write_header(*os, hdr_);
}

DatasetWriter::~DatasetWriter() {
    if (os_) {
        delete static_cast<std::ofstream*>(os_);
        std::remove(tmp_path_.c_str());
    }
}

void DatasetWriter::append(const Snapshot& s) {
    require(os_ != nullptr, "dataset writer already closed");
    auto& os = *static_cast<std::ofstream*>(os_);
    require(s.u.rows() == hdr_.ny && s.u.cols() == hdr_.nx + 1 && s.v.rows() == hdr_.ny + 1 &&
                s.v.cols() == hdr_.nx,
            "snapshot shape does not match the dataset header");
    write_snapshot(os, s);
    ++written_;
}

void DatasetWriter::close() {
    require(os_ != nullptr, "dataset writer already closed");
    auto* os = static_cast<std::ofstream*>(os_);
    hdr_.snapshot_count = written_;
    os->seekp(0);
    write_header(*os, hdr_);
    os->flush();
    const bool ok = os->good();
    delete os;
    os_ = nullptr;
    if (!ok) {
        std::remove(tmp_path_.c_str());
        throw ConfigError("dataset write failed: " + tmp_path_);
    }
    std::remove(path_.c_str());
    if (std::rename(tmp_path_.c_str(), path_.c_str()) != 0)
        throw ConfigError("cannot move dataset into place: " + path_);
}

} // namespace ibflow
