#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ibflow/resnet.hpp"

namespace ibflow {

/// Checkpoint header: format version plus the model topology needed to
/// reconstruct the step operator the blocks belong to.
struct CheckpointHeader {
    uint32_t version = 1;
    uint32_t model_kind = 0;  // ModelKind enumeration value
    int32_t n_substeps = 20;
    int32_t ib_iters = 5;
    int32_t upsample_factor = 8;
    double dt_learn = 0.5;
};

/// Binary layout (little-endian): magic "IBCK", header fields, block count,
/// then per block its name, layer shapes and activation flags, then all
/// parameters as 64-bit floats (kernel then bias per layer, blocks in order).
void write_checkpoint(const std::string& path, const CheckpointHeader& hdr,
                      const std::vector<const ConvResNet*>& blocks);

struct LoadedCheckpoint {
    CheckpointHeader header;
    std::vector<ConvResNet> blocks;
};

LoadedCheckpoint read_checkpoint(const std::string& path);

} // namespace ibflow
