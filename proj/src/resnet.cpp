#include "ibflow/resnet.hpp"

#include <cmath>

#include "ibflow/errors.hpp"

namespace ibflow {

ConvResNet ConvResNet::make(std::string name, int in_ch, int out_ch,
                            const std::vector<int>& hidden, std::mt19937_64& rng) {
    require(!hidden.empty(), "ConvResNet needs at least one hidden layer");
    ConvResNet net;
    net.name = std::move(name);
    int prev = in_ch;
    for (int width : hidden) {
        ConvLayer layer;
        layer.kernel = Tensor(width, prev, 3, 3);
        layer.bias = Tensor(1, width, 1, 1);
        layer.activated = true;
        const double sigma = std::sqrt(2.0 / (prev * 9.0));
        std::normal_distribution<double> dist(0.0, sigma);
        for (double& w : layer.kernel.data) w = dist(rng);
        net.layers.push_back(std::move(layer));
        prev = width;
    }
    ConvLayer out;
    out.kernel = Tensor(out_ch, prev, 3, 3);  // zero: untrained block is a no-op
    out.bias = Tensor(1, out_ch, 1, 1);
    out.activated = false;
    net.layers.push_back(std::move(out));
    return net;
}

size_t ConvResNet::param_count() const {
    size_t n = 0;
    for (const ConvLayer& l : layers) n += l.kernel.size() + l.bias.size();
    return n;
}

ConvResNet::TapeParams ConvResNet::register_params(Tape& t, bool requires_grad) const {
    TapeParams pv;
    for (const ConvLayer& l : layers) {
        pv.kernels.push_back(t.leaf_ref(&l.kernel, requires_grad));
        pv.biases.push_back(t.leaf_ref(&l.bias, requires_grad));
    }
    return pv;
}

Var ConvResNet::forward(Tape& t, Var x, const TapeParams& pv) const {
    require(pv.kernels.size() == layers.size(), "tape params do not match this block");
    Var h = x;
    for (size_t l = 0; l < layers.size(); ++l) {
        h = conv2d(t, h, pv.kernels[l], pv.biases[l]);
        if (layers[l].activated) h = relu(t, h);
    }
    return h;
}

std::vector<Tensor*> ConvResNet::params() {
    std::vector<Tensor*> out;
    for (ConvLayer& l : layers) {
        out.push_back(&l.kernel);
        out.push_back(&l.bias);
    }
    return out;
}

std::vector<const Tensor*> ConvResNet::params() const {
    std::vector<const Tensor*> out;
    for (const ConvLayer& l : layers) {
        out.push_back(&l.kernel);
        out.push_back(&l.bias);
    }
    return out;
}

} // namespace ibflow
