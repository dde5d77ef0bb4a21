#pragma once

#include <random>
#include <string>
#include <vector>

#include "ibflow/tape.hpp"

namespace ibflow {

struct ConvLayer {
    Tensor kernel;  // (oc, ic, 3, 3)
    Tensor bias;    // (1, oc, 1, 1)
    bool activated = true;
};

/// Stack of 3x3 convolutions with ReLU after every layer except the final
/// linear output projection. Hidden layers use fan-in-scaled normal init; the
/// output projection starts at zero, so a fresh block is the zero map.
struct ConvResNet {
    std::string name;
    std::vector<ConvLayer> layers;

    static ConvResNet make(std::string name, int in_ch, int out_ch,
                           const std::vector<int>& hidden, std::mt19937_64& rng);

    size_t param_count() const;
    int in_channels() const { return layers.front().kernel.c; }
    int out_channels() const { return layers.back().kernel.n; }

    struct TapeParams {
        std::vector<Var> kernels, biases;
    };
    /// Registers all parameters as leaf references on the tape.
    TapeParams register_params(Tape& t, bool requires_grad = true) const;

    Var forward(Tape& t, Var x, const TapeParams& pv) const;

    std::vector<Tensor*> params();
    std::vector<const Tensor*> params() const;
};

} // namespace ibflow
