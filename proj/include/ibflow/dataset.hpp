#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ibflow/field.hpp"
#include "ibflow/ib.hpp"
#include "ibflow/ref_solver.hpp"

namespace ibflow {

/// One stored learning step: coarse velocity components and the body force.
/// Field values pass through 32-bit floats on disk; quantize32 applies the
/// same truncation in memory.
struct Snapshot {
    long k = 0;
    double omega_k = 0.0;
    Array2D u, v;
    Vec2 force;
};

struct DatasetHeader {
    uint32_t version = 1;
    int32_t nx = 0, ny = 0;
    double dt_learn = 0.5;
    double dt = 0.005;
    double rho = 1.0, nu = 0.01, u_inf = 1.0, diameter = 1.0;
    uint32_t case_kind = 0;  // CaseKind value
    double omega_a = 0.0, f_r = 0.0, re = 100.0;
    double win_x0 = 0.0, win_y0 = 0.0, win_w = 0.0, win_h = 0.0;
    double cyl_x = 0.0, cyl_y = 0.0;
    int32_t n_markers = 0;
    uint64_t snapshot_count = 0;
};

struct SnapshotDataset {
    DatasetHeader header;
    std::vector<Snapshot> snaps;

    Grid make_grid() const {
        return Grid::uniform(header.nx, header.ny, header.win_x0, header.win_y0,
                             header.win_w / header.nx, header.win_h / header.ny,
                             DomainTag::Truncated);
    }
    FluidParams fluid() const {
        return {header.rho, header.nu, header.u_inf, header.diameter};
    }
    CaseDescriptor case_descriptor() const {
        return {static_cast<CaseKind>(header.case_kind), header.omega_a, header.f_r, header.re};
    }
    StaggeredField to_field(size_t index, const Grid& g) const;
};

double quantize32(double v);
void quantize32(Array2D& a);

/// Binary IBDS container: magic "IBDS", little-endian header, then per
/// snapshot k (int64), omega_k (float64), u and v as row-major float32, force
/// as two float32. Write -> read round-trips bit-exactly.
void write_dataset(const std::string& path, const SnapshotDataset& ds);
SnapshotDataset read_dataset(const std::string& path);

/// Streaming writer used by data generation; the snapshot count is patched on
/// close and the file is renamed into place atomically.
class DatasetWriter {
public:
    DatasetWriter(std::string path, DatasetHeader hdr);
    ~DatasetWriter();
    void append(const Snapshot& s);
    void close();

private:
    std::string path_;
    std::string tmp_path_;
    DatasetHeader hdr_;
    uint64_t written_ = 0;
    void* os_ = nullptr;  // std::ofstream, kept out of the header
};

} // namespace ibflow
