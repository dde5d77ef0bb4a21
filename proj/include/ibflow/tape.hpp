#pragma once

#include <functional>
#include <vector>

#include "ibflow/tensor.hpp"

namespace ibflow {

/// Handle to one output of one recorded operation.
struct Var {
    int node = -1;
    int slot = 0;
    bool valid() const { return node >= 0; }
};

/// Reverse-mode tape: a linear record of operations whose construction order
/// is a topological order. backward() sweeps the record once in reverse;
/// gradients accumulate additively at fan-out. One tape serves one forward
/// pass and is not shared across threads.
class Tape {
public:
    using Backward = std::function<void(Tape&)>;

    /// Leaf owning a copy of v.
    Var leaf(Tensor v, bool requires_grad = false);
    /// Leaf referencing external storage (model parameters). The pointee must
    /// outlive the tape.
    Var leaf_ref(const Tensor* v, bool requires_grad = true);

    /// Records an op. The vjp closure reads output gradients via maybe_grad()
    /// and accumulates into input gradients via add_grad().
    int emit(std::vector<Var> inputs, std::vector<Tensor> outputs, Backward vjp);
    Var out(int node, int slot = 0) const { return {node, slot}; }

    const Tensor& val(Var v) const;
    bool requires_grad(Var v) const { return nodes_[v.node].requires_grad; }

    /// Gradient tensor, allocated (zero) on first touch.
    Tensor& grad(Var v);
    /// Gradient if some downstream op produced one, else nullptr.
    const Tensor* maybe_grad(Var v) const;
    void add_grad(Var v, const Tensor& g);

    /// Seeds d(loss)/d(loss) = 1 and runs the reverse sweep. loss must be a
    /// scalar. Each node is visited exactly once, in reverse record order.
    void backward(Var loss);

    /// Total bytes of recorded values and gradients (live-activation footprint).
    size_t bytes() const { return bytes_; }
    size_t num_nodes() const { return nodes_.size(); }

private:
    struct Node {
        std::vector<Var> inputs;
        std::vector<Tensor> values;
        const Tensor* ref = nullptr;  // leaf_ref storage
        std::vector<Tensor> grads;    // parallel to outputs; empty until touched
        Backward vjp;
        bool requires_grad = false;
    };
    std::vector<Node> nodes_;
    size_t bytes_ = 0;
};

// Generic tensor ops. All record onto the tape.
Var add(Tape& t, Var a, Var b);
Var sub(Tape& t, Var a, Var b);
Var scale(Tape& t, Var a, double s);
Var hadamard(Tape& t, Var a, Var b);
Var sum_all(Tape& t, Var a);                 // -> scalar
Var spatial_sum(Tape& t, Var a);             // -> (n, c, 1, 1)
Var sqrt_all(Tape& t, Var a);                // elementwise; d/dx = 0 at x = 0
Var relu(Tape& t, Var a);
Var concat_channels(Tape& t, const std::vector<Var>& parts);
Var slice_channels(Tape& t, Var a, int c0, int count);

/// Cross-correlation with 'same' zero padding; kernel (oc, ic, kh, kw) with
/// odd kh, kw; bias (1, oc, 1, 1).
Var conv2d(Tape& t, Var x, Var kernel, Var bias);

} // namespace ibflow
