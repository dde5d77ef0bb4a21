#include "ibflow/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "ibflow/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace ibflow {

namespace {

constexpr char kMagic[4] = {'I', 'B', 'C', 'K'};

template <typename T>
void put(std::ofstream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw ConfigError("checkpoint file truncated");
    return v;
}

} // namespace

void write_checkpoint(const std::string& path, const CheckpointHeader& hdr,
                      const std::vector<const ConvResNet*>& blocks) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ConfigError("cannot open checkpoint for writing: " + path);
    os.write(kMagic, 4);
    put(os, hdr.version);
    put(os, hdr.model_kind);
    put(os, hdr.n_substeps);
    put(os, hdr.ib_iters);
    put(os, hdr.upsample_factor);
    put(os, hdr.dt_learn);
    put(os, static_cast<uint32_t>(blocks.size()));
    for (const ConvResNet* b : blocks) {
        put(os, static_cast<uint32_t>(b->name.size()));
        os.write(b->name.data(), static_cast<std::streamsize>(b->name.size()));
        put(os, static_cast<uint32_t>(b->layers.size()));
        for (const ConvLayer& l : b->layers) {
            put(os, static_cast<uint32_t>(l.kernel.n));
            put(os, static_cast<uint32_t>(l.kernel.c));
            put(os, static_cast<uint32_t>(l.kernel.h));
            put(os, static_cast<uint32_t>(l.kernel.w));
            put(os, static_cast<uint8_t>(l.activated ? 1 : 0));
        }
    }
    for (const ConvResNet* b : blocks) {
        for (const ConvLayer& l : b->layers) {
            os.write(reinterpret_cast<const char*>(l.kernel.data.data()),
                     static_cast<std::streamsize>(l.kernel.size() * sizeof(double)));
            os.write(reinterpret_cast<const char*>(l.bias.data.data()),
                     static_cast<std::streamsize>(l.bias.size() * sizeof(double)));
        }
    }
    if (!os) throw ConfigError("checkpoint write failed: " + path);
}

LoadedCheckpoint read_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError("cannot open checkpoint: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw ConfigError("not a checkpoint file: " + path);

    LoadedCheckpoint out;
    out.header.version = get<uint32_t>(is);
    if (out.header.version != 1) throw ConfigError("unsupported checkpoint version");
    out.header.model_kind = get<uint32_t>(is);
    out.header.n_substeps = get<int32_t>(is);
    out.header.ib_iters = get<int32_t>(is);
    out.header.upsample_factor = get<int32_t>(is);
    out.header.dt_learn = get<double>(is);

    const uint32_t n_blocks = get<uint32_t>(is);
    out.blocks.resize(n_blocks);
    for (ConvResNet& b : out.blocks) {
        const uint32_t len = get<uint32_t>(is);
        b.name.resize(len);
        is.read(b.name.data(), len);
        const uint32_t n_layers = get<uint32_t>(is);
        b.layers.resize(n_layers);
        for (ConvLayer& l : b.layers) {
            const uint32_t oc = get<uint32_t>(is);
            const uint32_t ic = get<uint32_t>(is);
            const uint32_t kh = get<uint32_t>(is);
            const uint32_t kw = get<uint32_t>(is);
            l.kernel = Tensor(oc, ic, kh, kw);
            l.bias = Tensor(1, oc, 1, 1);
            l.activated = get<uint8_t>(is) != 0;
        }
    }
    for (ConvResNet& b : out.blocks) {
        for (ConvLayer& l : b.layers) {
            is.read(reinterpret_cast<char*>(l.kernel.data.data()),
                    static_cast<std::streamsize>(l.kernel.size() * sizeof(double)));
            is.read(reinterpret_cast<char*>(l.bias.data.data()),
                    static_cast<std::streamsize>(l.bias.size() * sizeof(double)));
        }
    }
    if (!is) throw ConfigError("checkpoint file truncated: " + path);
    return out;
}

} // namespace ibflow
