#include "ibflow/tape.hpp"

#include <algorithm>
#include <cmath>

#include "ibflow/errors.hpp"

namespace ibflow {

Var Tape::leaf(Tensor v, bool requires_grad) {
    Node n;
    bytes_ += v.size() * sizeof(double);
    n.values.push_back(std::move(v));
    n.requires_grad = requires_grad;
    nodes_.push_back(std::move(n));
    return {static_cast<int>(nodes_.size()) - 1, 0};
}

Var Tape::leaf_ref(const Tensor* v, bool requires_grad) {
    Node n;
    n.ref = v;
    n.requires_grad = requires_grad;
    nodes_.push_back(std::move(n));
    return {static_cast<int>(nodes_.size()) - 1, 0};
}

int Tape::emit(std::vector<Var> inputs, std::vector<Tensor> outputs, Backward vjp) {
    Node n;
    n.requires_grad = false;
    for (const Var& in : inputs) {
        require(in.node >= 0 && in.node < static_cast<int>(nodes_.size()),
                "tape op input refers to a foreign node");
        n.requires_grad = n.requires_grad || nodes_[in.node].requires_grad;
    }
    for (const Tensor& o : outputs) bytes_ += o.size() * sizeof(double);
    n.inputs = std::move(inputs);
    n.values = std::move(outputs);
    n.vjp = std::move(vjp);
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
}

const Tensor& Tape::val(Var v) const {
    const Node& n = nodes_[v.node];
    if (n.ref) return *n.ref;
    return n.values[v.slot];
}

Tensor& Tape::grad(Var v) {
    Node& n = nodes_[v.node];
    const Tensor& shape = n.ref ? *n.ref : n.values[v.slot];
    const size_t want = n.ref ? 1 : n.values.size();
    if (n.grads.size() < want) n.grads.resize(want);
    Tensor& g = n.grads[v.slot];
    if (g.size() == 0) {
        g = Tensor(shape.n, shape.c, shape.h, shape.w);
        bytes_ += g.size() * sizeof(double);
    }
    return g;
}

const Tensor* Tape::maybe_grad(Var v) const {
    const Node& n = nodes_[v.node];
    if (v.slot >= static_cast<int>(n.grads.size()) || n.grads[v.slot].size() == 0)
        return nullptr;
    return &n.grads[v.slot];
}

void Tape::add_grad(Var v, const Tensor& g) {
    if (!nodes_[v.node].requires_grad) return;
    Tensor& acc = grad(v);
    require(acc.same_shape(g), "gradient shape mismatch");
    for (size_t k = 0; k < g.size(); ++k) acc.data[k] += g.data[k];
}

void Tape::backward(Var loss) {
    require(val(loss).size() == 1, "backward needs a scalar loss");
    grad(loss).data[0] = 1.0;
    for (int id = loss.node; id >= 0; --id) {
        Node& n = nodes_[id];
        if (!n.requires_grad || !n.vjp) continue;
        bool touched = false;
        for (const Tensor& g : n.grads) touched = touched || g.size() > 0;
        if (touched) n.vjp(*this);
    }
}

// ---------------------------------------------------------------------------
// Generic ops. Each computes its own node id (num_nodes at emit time) so the
// vjp closure can read the node's output gradient.
// ---------------------------------------------------------------------------

Var add(Tape& t, Var a, Var b) {
    const Tensor& va = t.val(a);
    const Tensor& vb = t.val(b);
    require(va.same_shape(vb), "add: shape mismatch");
    Tensor out = va;
    for (size_t k = 0; k < out.size(); ++k) out.data[k] += vb.data[k];
    const Var self{static_cast<int>(t.num_nodes()), 0};
    t.emit({a, b}, {std::move(out)}, [self, a, b](Tape& tp) {
        const Tensor* g = tp.maybe_grad(self);
        if (!g) return;
        tp.add_grad(a, *g);
        tp.add_grad(b, *g);
    });
    return self;
}

Var sub(Tape& t, Var a, Var b) {
    const Tensor& va = t.val(a);
    const Tensor& vb = t.val(b);
    require(va.same_shape(vb), "sub: shape mismatch");
    Tensor out = va;
    for (size_t k = 0; k < out.size(); ++k) out.data[k] -= vb.data[k];
    const Var self{static_cast<int>(t.num_nodes()), 0};
    t.emit({a, b}, {std::move(out)}, [self, a, b](Tape& tp) {
        const Tensor* g = tp.maybe_grad(self);
        if (!g) return;
        tp.add_grad(a, *g);
        Tensor neg = *g;
        for (double& x : neg.data) x = -x;
        tp.add_grad(b, neg);
    });
    return self;
}

Var scale(Tape& t, Var a, double s) {
    Tensor out = t.val(a);
    for (double& x : out.data) x *= s;
    const Var self{static_cast<int>(t.num_nodes()), 0};
    t.emit({a}, {std::move(out)}, [self, a, s](Tape& tp) {
        const Tensor* g = tp.maybe_grad(self);
        if (!g) return;
        Tensor gs = *g;
        for (double& x : gs.data) x *= s;
        tp.add_grad(a, gs);
    });
    return self;
}

Var hadamard(Tape& t, Var a, Var b) {
    const Tensor& va = t.val(a);
    const Tensor& vb = t.val(b);
    require(va.same_shape(vb), "hadamard: shape mismatch");
    Tensor out = va;
    for (size_t k = 0; k < out.size(); ++k) out.data[k] *= vb.data[k];
    const Var self{static_cast<int>(t.num_nodes()), 0};
    t.emit({a, b}, {std::move(out)}, [self, a, b](Tape& tp) {
        const Tensor* g = tp.maybe_grad(self);
        if (!g) return;
        const Tensor& va = tp.val(a);
        const Tensor& vb = tp.val(b);
        Tensor ga = *g, gb = *g;
        for (size_t k = 0; k < ga.size(); ++k) {
            ga.data[k] *= vb.data[k];
            gb.data[k] *= va.data[k];
        }
        tp.add_grad(a, ga);
        tp.add_grad(b, gb);
    });
    return self;
}

Var sum_all(Tape& t, Var a) {
    const Tensor& va = t.val(a);
    double s = 0.0;
    for (double v : va.data) s += v;
    const Var self{static_cast<int>(t.num_nodes()), 0};
    t.emit({a}, {Tensor::scalar(s)}, [self, a](Tape& tp) {
        const Tensor* g = tp.maybe_grad(self);
        if (!g) return;
        const Tensor& va = tp.val(a);
        Tensor ga(va.n, va.c, va.h, va.w, g->data[0]);
        tp.add_grad(a, ga);
    });
    return self;
}

Var spatial_sum(Tape& t, Var a) {
    const Tensor& va = t.val(a);
    Tensor out(va.n, va.c, 1, 1);
    for (int n = 0; n < va.n; ++n)
        for (int c = 0; c < va.c; ++c) {
            const double* p = va.plane(n, c);
            double s = 0.0;
            for (int k = 0; k < va.h * va.w; ++k) s += p[k];
            out.at(n, c, 0, 0) = s;
        }
    const Var self{static_cast<int>(t.num_nodes()), 0};
    t.emit({a}, {std::move(out)}, [self, a](Tape& tp) {
        const Tensor* g = tp.maybe_grad(self);
        if (!g) return;
        const Tensor& va = tp.val(a);
        Tensor ga(va.n, va.c, va.h, va.w);
        for (int n = 0; n < va.n; ++n)
            for (int c = 0; c < va.c; ++c) {
                const double gv = g->at(n, c, 0, 0);
                double* p = ga.plane(n, c);
                for (int k = 0; k < va.h * va.w; ++k) p[k] = gv;
            }
        tp.add_grad(a, ga);
    });
    return self;
}

Var sqrt_all(Tape& t, Var a) {
    Tensor out = t.val(a);
    for (double& x : out.data) x = std::sqrt(x);
    const Var self{static_cast<int>(t.num_nodes()), 0};
    t.emit({a}, {std::move(out)}, [self, a](Tape& tp) {
        const Tensor* g = tp.maybe_grad(self);
        if (!g) return;
        const Tensor& y = tp.val(self);
        Tensor ga = *g;
        for (size_t k = 0; k < ga.size(); ++k)
            ga.data[k] = (y.data[k] > 0.0) ? ga.data[k] * 0.5 / y.data[k] : 0.0;
        tp.add_grad(a, ga);
    });
    return self;
}

Var relu(Tape& t, Var a) {
    Tensor out = t.val(a);
    for (double& x : out.data) x = (x > 0.0) ? x : 0.0;
    const Var self{static_cast<int>(t.num_nodes()), 0};
    t.emit({a}, {std::move(out)}, [self, a](Tape& tp) {
        const Tensor* g = tp.maybe_grad(self);
        if (!g) return;
        const Tensor& va = tp.val(a);
        Tensor ga = *g;
        for (size_t k = 0; k < ga.size(); ++k)
            if (va.data[k] <= 0.0) ga.data[k] = 0.0;
        tp.add_grad(a, ga);
    });
    return self;
}

Var concat_channels(Tape& t, const std::vector<Var>& parts) {
    require(!parts.empty(), "concat: needs at least one part");
    const Tensor& first = t.val(parts[0]);
    int ctot = 0;
    for (const Var& p : parts) {
        const Tensor& v = t.val(p);
        require(v.n == first.n && v.h == first.h && v.w == first.w, "concat: shape mismatch");
        ctot += v.c;
    }
    Tensor out(first.n, ctot, first.h, first.w);
    int coff = 0;
    for (const Var& p : parts) {
        const Tensor& v = t.val(p);
        for (int n = 0; n < v.n; ++n)
            for (int c = 0; c < v.c; ++c)
                std::copy(v.plane(n, c), v.plane(n, c) + v.h * v.w, out.plane(n, coff + c));
        coff += v.c;
    }
    const Var self{static_cast<int>(t.num_nodes()), 0};
    std::vector<Var> ins = parts;
    t.emit(ins, {std::move(out)}, [self, ins](Tape& tp) {
        const Tensor* g = tp.maybe_grad(self);
        if (!g) return;
        int coff = 0;
        for (const Var& p : ins) {
            const Tensor& v = tp.val(p);
            Tensor gp(v.n, v.c, v.h, v.w);
            for (int n = 0; n < v.n; ++n)
                for (int c = 0; c < v.c; ++c)
                    std::copy(g->plane(n, coff + c), g->plane(n, coff + c) + v.h * v.w,
                              gp.plane(n, c));
            coff += v.c;
            tp.add_grad(p, gp);
        }
    });
    return self;
}

Var slice_channels(Tape& t, Var a, int c0, int count) {
    const Tensor& va = t.val(a);
    require(c0 >= 0 && c0 + count <= va.c, "slice: channel range out of bounds");
    Tensor out(va.n, count, va.h, va.w);
    for (int n = 0; n < va.n; ++n)
        for (int c = 0; c < count; ++c)
            std::copy(va.plane(n, c0 + c), va.plane(n, c0 + c) + va.h * va.w, out.plane(n, c));
    const Var self{static_cast<int>(t.num_nodes()), 0};
    t.emit({a}, {std::move(out)}, [self, a, c0, count](Tape& tp) {
        const Tensor* g = tp.maybe_grad(self);
        if (!g) return;
        const Tensor& va = tp.val(a);
        Tensor ga(va.n, va.c, va.h, va.w);
        for (int n = 0; n < va.n; ++n)
            for (int c = 0; c < count; ++c)
                std::copy(g->plane(n, c), g->plane(n, c) + va.h * va.w, ga.plane(n, c0 + c));
        tp.add_grad(a, ga);
    });
    return self;
}

namespace {

// Fused 3x3 row kernel: acc[x] += w0 in[x-1] + w1 in[x] + w2 in[x+1].
inline void row_tap3(double* __restrict__ acc, const double* __restrict__ irow, double w0,
                     double w1, double w2, int W) {
    acc[0] += w1 * irow[0] + w2 * irow[1];
    for (int x = 1; x < W - 1; ++x)
        acc[x] += w0 * irow[x - 1] + w1 * irow[x] + w2 * irow[x + 1];
    acc[W - 1] += w0 * irow[W - 2] + w1 * irow[W - 1];
}

// out(n,oc,y,x) = bias + sum_{ic,ky,kx} w(oc,ic,ky,kx) * in(n,ic,y+ky-ph,x+kx-pw),
// specialised for 3x3 kernels with a per-row accumulator.
void conv_forward(const Tensor& x, const Tensor& w, const Tensor& b, Tensor& out) {
    const int H = x.h, W = x.w;
    const int kh = w.h, kw = w.w;
    const int ph = kh / 2, pw = kw / 2;
    const bool k3 = (kh == 3 && kw == 3 && W >= 2);
    std::vector<double> accbuf(W);
    for (int n = 0; n < x.n; ++n) {
        for (int oc = 0; oc < w.n; ++oc) {
            double* op = out.plane(n, oc);
            const double bias = b.data[oc];
            if (k3) {
                for (int y = 0; y < H; ++y) {
                    double* __restrict__ acc = accbuf.data();
                    for (int xx = 0; xx < W; ++xx) acc[xx] = bias;
                    for (int ic = 0; ic < x.c; ++ic) {
                        const double* ip = x.plane(n, ic);
                        const double* wp = w.plane(oc, ic);
                        for (int ky = 0; ky < 3; ++ky) {
                            const int yy = y + ky - 1;
                            if (yy < 0 || yy >= H) continue;
                            row_tap3(acc, ip + yy * W, wp[ky * 3], wp[ky * 3 + 1],
                                     wp[ky * 3 + 2], W);
                        }
                    }
                    std::copy(accbuf.begin(), accbuf.end(), op + y * W);
                }
            } else {
                for (int k = 0; k < H * W; ++k) op[k] = bias;
                for (int ic = 0; ic < x.c; ++ic) {
                    const double* ip = x.plane(n, ic);
                    const double* wp = w.plane(oc, ic);
                    for (int ky = 0; ky < kh; ++ky) {
                        for (int y = 0; y < H; ++y) {
                            const int yy = y + ky - ph;
                            if (yy < 0 || yy >= H) continue;
                            const double* irow = ip + yy * W;
                            double* orow = op + y * W;
                            for (int kx = 0; kx < kw; ++kx) {
                                const double wv = wp[ky * kw + kx];
                                const int off = kx - pw;
                                const int x0 = std::max(0, -off);
                                const int x1 = std::min(W, W - off);
                                for (int xx = x0; xx < x1; ++xx) orow[xx] += wv * irow[xx + off];
                            }
                        }
                    }
                }
            }
        }
    }
}

} // namespace

Var conv2d(Tape& t, Var x, Var kernel, Var bias) {
    const Tensor& vx = t.val(x);
    const Tensor& vw = t.val(kernel);
    const Tensor& vb = t.val(bias);
    require(vw.c == vx.c, "conv2d: kernel input channels mismatch");
    require(vw.h % 2 == 1 && vw.w % 2 == 1, "conv2d: kernel size must be odd");
    require(vb.c == vw.n && vb.size() == static_cast<size_t>(vw.n), "conv2d: bias shape mismatch");

    Tensor out(vx.n, vw.n, vx.h, vx.w);
    conv_forward(vx, vw, vb, out);

    const Var self{static_cast<int>(t.num_nodes()), 0};
    t.emit({x, kernel, bias}, {std::move(out)}, [self, x, kernel, bias](Tape& tp) {
        const Tensor* g = tp.maybe_grad(self);
        if (!g) return;
        const Tensor& vx = tp.val(x);
        const Tensor& vw = tp.val(kernel);
        const int H = vx.h, W = vx.w;
        const int kh = vw.h, kw = vw.w;
        const int ph = kh / 2, pw = kw / 2;

        const bool need_x = tp.requires_grad(x);
        Tensor gx(vx.n, vx.c, H, W);
        Tensor gw(vw.n, vw.c, kh, kw);
        Tensor gb(1, vw.n, 1, 1);
        const bool k3 = (kh == 3 && kw == 3 && W >= 2);
        std::vector<double> accbuf(W);

        for (int n = 0; n < vx.n; ++n) {
            for (int oc = 0; oc < vw.n; ++oc) {
                const double* gp = g->plane(n, oc);
                double acc = 0.0;
                for (int k = 0; k < H * W; ++k) acc += gp[k];
                gb.data[oc] += acc;
            }

            // Kernel gradient: per-offset dot products of the upstream rows
            // with the shifted input rows.
            for (int ic = 0; ic < vx.c; ++ic) {
                const double* ip = vx.plane(n, ic);
                for (int oc = 0; oc < vw.n; ++oc) {
                    const double* gp = g->plane(n, oc);
                    double* gwp = gw.plane(oc, ic);
                    for (int ky = 0; ky < kh; ++ky) {
                        for (int y = 0; y < H; ++y) {
                            const int yy = y + ky - ph;
                            if (yy < 0 || yy >= H) continue;
                            const double* __restrict__ irow = ip + yy * W;
                            const double* __restrict__ grow = gp + y * W;
                            for (int kx = 0; kx < kw; ++kx) {
                                const int off = kx - pw;
                                const int x0 = std::max(0, -off);
                                const int x1 = std::min(W, W - off);
                                // Fixed 8-lane partial sums: lets the dot
                                // product vectorize while staying deterministic.
                                double lane[8] = {0, 0, 0, 0, 0, 0, 0, 0};
                                int xx = x0;
                                for (; xx + 8 <= x1; xx += 8)
                                    for (int l = 0; l < 8; ++l)
                                        lane[l] += irow[xx + l + off] * grow[xx + l];
                                double tail = 0.0;
                                for (; xx < x1; ++xx) tail += irow[xx + off] * grow[xx];
                                const double dw = ((lane[0] + lane[1]) + (lane[2] + lane[3])) +
                                                  ((lane[4] + lane[5]) + (lane[6] + lane[7])) +
                                                  tail;
                                gwp[ky * kw + kx] += dw;
                            }
                        }
                    }
                }
            }

            // Input gradient: correlation of the upstream gradient with the
            // flipped kernel, same row-accumulator structure as the forward.
            if (need_x) {
                for (int ic = 0; ic < vx.c; ++ic) {
                    double* gxp = gx.plane(n, ic);
                    if (k3) {
                        for (int y = 0; y < H; ++y) {
                            double* __restrict__ acc = accbuf.data();
                            for (int xx = 0; xx < W; ++xx) acc[xx] = 0.0;
                            for (int oc = 0; oc < vw.n; ++oc) {
                                const double* gp = g->plane(n, oc);
                                const double* wp = vw.plane(oc, ic);
                                for (int ky = 0; ky < 3; ++ky) {
                                    const int yy = y - (ky - 1);
                                    if (yy < 0 || yy >= H) continue;
                                    // gx(y,x) += w(ky,kx) gy(y-ky+1, x-kx+1)
                                    row_tap3(acc, gp + yy * W, wp[ky * 3 + 2], wp[ky * 3 + 1],
                                             wp[ky * 3], W);
                                }
                            }
                            double* gxrow = gxp + y * W;
                            for (int xx = 0; xx < W; ++xx) gxrow[xx] += acc[xx];
                        }
                    } else {
                        for (int oc = 0; oc < vw.n; ++oc) {
                            const double* gp = g->plane(n, oc);
                            const double* wp = vw.plane(oc, ic);
                            for (int ky = 0; ky < kh; ++ky) {
                                for (int y = 0; y < H; ++y) {
                                    const int yy = y + ky - ph;
                                    if (yy < 0 || yy >= H) continue;
                                    double* gxrow = gxp + yy * W;
                                    const double* grow = gp + y * W;
                                    for (int kx = 0; kx < kw; ++kx) {
                                        const double wv = wp[ky * kw + kx];
                                        const int off = kx - pw;
                                        const int x0 = std::max(0, -off);
                                        const int x1 = std::min(W, W - off);
                                        for (int xx = x0; xx < x1; ++xx)
                                            gxrow[xx + off] += wv * grow[xx];
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        if (need_x) tp.add_grad(x, gx);
        tp.add_grad(kernel, gw);
        tp.add_grad(bias, gb);
    });
    return self;
}

} // namespace ibflow
