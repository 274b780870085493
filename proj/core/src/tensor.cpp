#include "gradforge/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace gradforge {

std::int64_t numel(const Shape& shape) {
    std::int64_t n = 1;
    for (int d : shape) n *= d;
    return n;
}

std::string shape_str(const Shape& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

Tensor::Tensor(Shape s, std::vector<double> values) {
    for (int d : s) {
        if (d <= 0) throw ShapeError("tensor dims must be positive, got " + shape_str(s));
    }
    if (numel(s) != static_cast<std::int64_t>(values.size())) {
        throw ShapeError("data length " + std::to_string(values.size()) +
                         " does not match shape " + shape_str(s));
    }
    shape = std::move(s);
    data = std::make_shared<std::vector<double>>(std::move(values));
}

Tensor Tensor::zeros(Shape s) {
    std::vector<double> v(static_cast<std::size_t>(numel(s)), 0.0);
    return Tensor(std::move(s), std::move(v));
}

Tensor Tensor::full(Shape s, double value) {
    std::vector<double> v(static_cast<std::size_t>(numel(s)), value);
    return Tensor(std::move(s), std::move(v));
}

Tensor Tensor::scalar(double v) { return Tensor(Shape{}, std::vector<double>{v}); }

double Tensor::value() const {
    if (size() != 1) throw ShapeError("value() requires a scalar, got shape " + shape_str(shape));
    return (*data)[0];
}

Tensor Tensor::detached() const {
    Tensor t;
    t.shape = shape;
    t.data = data;
    return t;
}

Tensor Tensor::clone() const {
    Tensor t;
    t.shape = shape;
    t.data = std::make_shared<std::vector<double>>(*data);
    return t;
}

// ---------------------------------------------------------------------------
// Tape
// ---------------------------------------------------------------------------

Tensor Tape::watch(const Tensor& t) {
    if (!t.data) throw ValueError("cannot watch an empty tensor");
    if (t.tape != nullptr && t.tape != this) throw ValueError("tensor belongs to another tape");
    auto it = leaf_of_.find(t.data.get());
    if (it != leaf_of_.end()) {
        Tensor out = t;
        out.tape = this;
        out.node = it->second;
        return out;
    }
    if (t.tape == this && t.node >= 0) return t;  // already an interior node here
    Node n;
    n.op = "leaf";
    n.size = t.size();
    n.value = t.data;
    n.fn = nullptr;
    int id = static_cast<int>(nodes_.size());
    nodes_.push_back(std::move(n));
    leaf_of_.emplace(t.data.get(), id);
    Tensor out = t;
    out.tape = this;
    out.node = id;
    return out;
}

int Tape::add_node(const char* op, const Tensor& result, std::vector<int> inputs, BackwardFn fn) {
    Node n;
    n.op = op;
    n.size = result.size();
    n.value = result.data;
    n.inputs = std::move(inputs);
    n.fn = std::move(fn);
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
}

std::vector<double>& Tape::grad_buffer(int node) {
    Node& n = nodes_[static_cast<std::size_t>(node)];
    if (n.grad.empty()) n.grad.assign(static_cast<std::size_t>(n.size), 0.0);
    return n.grad;
}

int Tape::node_for(const Tensor& t) const {
    if (t.tape == this && t.node >= 0) return t.node;
    if (t.data) {
        auto it = leaf_of_.find(t.data.get());
        if (it != leaf_of_.end()) return it->second;
    }
    return -1;
}

void Tape::backward(const Tensor& loss) {
    if (ran_backward_) throw ValueError("backward already ran on this tape");
    if (loss.tape != this || loss.node < 0) throw ValueError("loss was not recorded on this tape");
    if (loss.size() != 1) {
        throw ShapeError("backward requires a scalar loss, got shape " + shape_str(loss.shape));
    }
    ran_backward_ = true;
    grad_buffer(loss.node)[0] = 1.0;
    for (int i = loss.node; i >= 0; --i) {
        Node& n = nodes_[static_cast<std::size_t>(i)];
        if (!n.fn) continue;
        if (n.grad.empty()) n.grad.assign(static_cast<std::size_t>(n.size), 0.0);
        n.fn(*this, n.grad);
    }
}

bool Tape::has_grad(const Tensor& t) const {
    int id = node_for(t);
    return id >= 0 && !nodes_[static_cast<std::size_t>(id)].grad.empty();
}

Tensor Tape::grad_of(const Tensor& t) const {
    int id = node_for(t);
    if (id < 0) throw ValueError("tensor is not attached to this tape");
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    Tensor g = Tensor::zeros(t.shape);
    if (!n.grad.empty()) *g.data = n.grad;
    return g;
}

// ---------------------------------------------------------------------------
// Op helpers
// ---------------------------------------------------------------------------

namespace {

Tape* tape_of(std::initializer_list<const Tensor*> ts) {
    Tape* tape = nullptr;
    for (const Tensor* t : ts) {
        if (!t->attached()) continue;
        if (tape == nullptr) {
            tape = t->tape;
        } else if (tape != t->tape) {
            throw ValueError("op inputs come from different tapes");
        }
    }
    return tape;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape != b.shape) {
        throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape) + " vs " +
                         shape_str(b.shape));
    }
}

Tensor make_result(Shape shape, std::vector<double> values) {
    return Tensor(std::move(shape), std::move(values));
}

}  // namespace

// ---------------------------------------------------------------------------
// Elementwise ops
// ---------------------------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    const auto n = static_cast<std::size_t>(a.size());
    std::vector<double> out(n);
    const double* pa = a.data->data();
    const double* pb = b.data->data();
    for (std::size_t i = 0; i < n; ++i) out[i] = pa[i] + pb[i];
    Tensor r = make_result(a.shape, std::move(out));
    if (Tape* tape = tape_of({&a, &b})) {
        int an = a.attached() ? a.node : -1;
        int bn = b.attached() ? b.node : -1;
        r.tape = tape;
        r.node = tape->add_node("add", r, {an, bn}, [an, bn](Tape& t, const std::vector<double>& g) {
            if (an >= 0) {
                auto& ga = t.grad_buffer(an);
                for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
            }
            if (bn >= 0) {
                auto& gb = t.grad_buffer(bn);
                for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
            }
        });
    }
    return r;
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "sub");
    const auto n = static_cast<std::size_t>(a.size());
    std::vector<double> out(n);
    const double* pa = a.data->data();
    const double* pb = b.data->data();
    for (std::size_t i = 0; i < n; ++i) out[i] = pa[i] - pb[i];
    Tensor r = make_result(a.shape, std::move(out));
    if (Tape* tape = tape_of({&a, &b})) {
        int an = a.attached() ? a.node : -1;
        int bn = b.attached() ? b.node : -1;
        r.tape = tape;
        r.node = tape->add_node("sub", r, {an, bn}, [an, bn](Tape& t, const std::vector<double>& g) {
            if (an >= 0) {
                auto& ga = t.grad_buffer(an);
                for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
            }
            if (bn >= 0) {
                auto& gb = t.grad_buffer(bn);
                for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
            }
        });
    }
    return r;
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "mul");
    const auto n = static_cast<std::size_t>(a.size());
    std::vector<double> out(n);
    const double* pa = a.data->data();
    const double* pb = b.data->data();
    for (std::size_t i = 0; i < n; ++i) out[i] = pa[i] * pb[i];
    Tensor r = make_result(a.shape, std::move(out));
    if (Tape* tape = tape_of({&a, &b})) {
        int an = a.attached() ? a.node : -1;
        int bn = b.attached() ? b.node : -1;
        auto ad = a.data;
        auto bd = b.data;
        r.tape = tape;
        r.node = tape->add_node("mul", r, {an, bn},
                                [an, bn, ad, bd](Tape& t, const std::vector<double>& g) {
            if (an >= 0) {
                auto& ga = t.grad_buffer(an);
                const double* pb2 = bd->data();
                for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * pb2[i];
            }
            if (bn >= 0) {
                auto& gb = t.grad_buffer(bn);
                const double* pa2 = ad->data();
                for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * pa2[i];
            }
        });
    }
    return r;
}

Tensor scale(const Tensor& a, double c) {
    const auto n = static_cast<std::size_t>(a.size());
    std::vector<double> out(n);
    const double* pa = a.data->data();
    for (std::size_t i = 0; i < n; ++i) out[i] = pa[i] * c;
    Tensor r = make_result(a.shape, std::move(out));
    if (Tape* tape = tape_of({&a})) {
        int an = a.node;
        r.tape = tape;
        r.node = tape->add_node("scale", r, {an}, [an, c](Tape& t, const std::vector<double>& g) {
            auto& ga = t.grad_buffer(an);
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * c;
        });
    }
    return r;
}

Tensor relu(const Tensor& x) {
    const auto n = static_cast<std::size_t>(x.size());
    std::vector<double> out(n);
    const double* px = x.data->data();
    for (std::size_t i = 0; i < n; ++i) out[i] = px[i] > 0.0 ? px[i] : 0.0;
    Tensor r = make_result(x.shape, std::move(out));
    if (Tape* tape = tape_of({&x})) {
        int xn = x.node;
        auto xd = x.data;
        r.tape = tape;
        // subgradient at exactly 0 is 0
        r.node = tape->add_node("relu", r, {xn}, [xn, xd](Tape& t, const std::vector<double>& g) {
            auto& gx = t.grad_buffer(xn);
            const double* px2 = xd->data();
            for (std::size_t i = 0; i < g.size(); ++i) {
                if (px2[i] > 0.0) gx[i] += g[i];
            }
        });
    }
    return r;
}

Tensor tanh(const Tensor& x) {
    const auto n = static_cast<std::size_t>(x.size());
    std::vector<double> out(n);
    const double* px = x.data->data();
    for (std::size_t i = 0; i < n; ++i) out[i] = std::tanh(px[i]);
    Tensor r = make_result(x.shape, std::move(out));
    if (Tape* tape = tape_of({&x})) {
        int xn = x.node;
        auto yd = r.data;
        r.tape = tape;
        r.node = tape->add_node("tanh", r, {xn}, [xn, yd](Tape& t, const std::vector<double>& g) {
            auto& gx = t.grad_buffer(xn);
            const double* py = yd->data();
            for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * (1.0 - py[i] * py[i]);
        });
    }
    return r;
}

// ---------------------------------------------------------------------------
// conv2d
// ---------------------------------------------------------------------------

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride) {
    if (x.shape.size() != 4) {
        throw ShapeError("conv2d: input must be [N,H,W,Cin], got " + shape_str(x.shape));
    }
    if (w.shape.size() != 4) {
        throw ShapeError("conv2d: kernel must be [kh,kw,Cin,Cout], got " + shape_str(w.shape));
    }
    const int N = x.shape[0], H = x.shape[1], W = x.shape[2], Cin = x.shape[3];
    const int kh = w.shape[0], kw = w.shape[1];
    const int Cout = w.shape[3];
    if (kh != kw || (kh != 1 && kh != 3)) {
        throw ValueError("conv2d: kernel size must be 1x1 or 3x3, got " + shape_str(w.shape));
    }
    if (stride != 1 && stride != 2) {
        throw ValueError("conv2d: stride must be 1 or 2, got " + std::to_string(stride));
    }
    if (w.shape[2] != Cin) {
        throw ShapeError("conv2d: kernel expects " + std::to_string(w.shape[2]) +
                         " input channels, input has " + std::to_string(Cin));
    }
    if (b.shape != Shape{Cout}) {
        throw ShapeError("conv2d: bias shape " + shape_str(b.shape) + " does not match Cout=" +
                         std::to_string(Cout));
    }
    const int pad = (kh - 1) / 2;
    const int Ho = (H + stride - 1) / stride;
    const int Wo = (W + stride - 1) / stride;

    std::vector<double> out(static_cast<std::size_t>(N) * Ho * Wo * Cout);
    const double* px = x.data->data();
    const double* pw = w.data->data();
    const double* pb = b.data->data();
    double* po = out.data();

    // NHWC direct convolution: for each tap and input channel do a rank-1
    // update over the contiguous Cout axis of the kernel.
    for (int n = 0; n < N; ++n) {
        for (int oy = 0; oy < Ho; ++oy) {
            for (int ox = 0; ox < Wo; ++ox) {
                double* acc = po + (((static_cast<std::int64_t>(n) * Ho + oy) * Wo + ox) * Cout);
                for (int c = 0; c < Cout; ++c) acc[c] = pb[c];
                for (int ky = 0; ky < kh; ++ky) {
                    const int iy = oy * stride + ky - pad;
                    if (iy < 0 || iy >= H) continue;
                    for (int kx = 0; kx < kw; ++kx) {
                        const int ix = ox * stride + kx - pad;
                        if (ix < 0 || ix >= W) continue;
                        const double* xr =
                            px + (((static_cast<std::int64_t>(n) * H + iy) * W + ix) * Cin);
                        const double* wr =
                            pw + ((static_cast<std::int64_t>(ky) * kw + kx) * Cin) * Cout;
                        for (int ci = 0; ci < Cin; ++ci) {
                            const double xv = xr[ci];
                            const double* wc = wr + static_cast<std::int64_t>(ci) * Cout;
                            for (int co = 0; co < Cout; ++co) acc[co] += xv * wc[co];
                        }
                    }
                }
            }
        }
    }

    Tensor r = make_result({N, Ho, Wo, Cout}, std::move(out));
    if (Tape* tape = tape_of({&x, &w, &b})) {
        int xn = x.attached() ? x.node : -1;
        int wn = w.attached() ? w.node : -1;
        int bn = b.attached() ? b.node : -1;
        auto xd = x.data;
        auto wd = w.data;
        r.tape = tape;
        r.node = tape->add_node(
            "conv2d", r, {xn, wn, bn},
            [=](Tape& t, const std::vector<double>& g) {
                std::vector<double>* gx = xn >= 0 ? &t.grad_buffer(xn) : nullptr;
                std::vector<double>* gw = wn >= 0 ? &t.grad_buffer(wn) : nullptr;
                std::vector<double>* gb = bn >= 0 ? &t.grad_buffer(bn) : nullptr;
                const double* px2 = xd->data();
                const double* pw2 = wd->data();
                const double* pg = g.data();
                for (int n = 0; n < N; ++n) {
                    for (int oy = 0; oy < Ho; ++oy) {
                        for (int ox = 0; ox < Wo; ++ox) {
                            const double* gr =
                                pg + (((static_cast<std::int64_t>(n) * Ho + oy) * Wo + ox) * Cout);
                            if (gb) {
                                double* pgb = gb->data();
                                for (int co = 0; co < Cout; ++co) pgb[co] += gr[co];
                            }
                            for (int ky = 0; ky < kh; ++ky) {
                                const int iy = oy * stride + ky - pad;
                                if (iy < 0 || iy >= H) continue;
                                for (int kx = 0; kx < kw; ++kx) {
                                    const int ix = ox * stride + kx - pad;
                                    if (ix < 0 || ix >= W) continue;
                                    const std::int64_t xoff =
                                        ((static_cast<std::int64_t>(n) * H + iy) * W + ix) * Cin;
                                    const std::int64_t woff =
                                        (static_cast<std::int64_t>(ky) * kw + kx) * Cin * Cout;
                                    for (int ci = 0; ci < Cin; ++ci) {
                                        const double xv = px2[xoff + ci];
                                        const double* wc = pw2 + woff + ci * Cout;
                                        double gxa = 0.0;
                                        if (gw) {
                                            double* gwc = gw->data() + woff + ci * Cout;
                                            for (int co = 0; co < Cout; ++co) {
                                                gwc[co] += xv * gr[co];
                                                gxa += wc[co] * gr[co];
                                            }
                                        } else {
                                            for (int co = 0; co < Cout; ++co) gxa += wc[co] * gr[co];
                                        }
                                        if (gx) (*gx)[xoff + ci] += gxa;
                                    }
                                }
                            }
                        }
                    }
                }
            });
    }
    return r;
}

// ---------------------------------------------------------------------------
// Pooling / softmax / losses
// ---------------------------------------------------------------------------

Tensor global_avg_pool(const Tensor& x) {
    if (x.shape.size() != 4) {
        throw ShapeError("global_avg_pool: input must be [N,H,W,C], got " + shape_str(x.shape));
    }
    const int N = x.shape[0], H = x.shape[1], W = x.shape[2], C = x.shape[3];
    const double inv = 1.0 / (static_cast<double>(H) * W);
    std::vector<double> out(static_cast<std::size_t>(N) * C, 0.0);
    const double* px = x.data->data();
    for (int n = 0; n < N; ++n) {
        double* po = out.data() + static_cast<std::int64_t>(n) * C;
        const double* pn = px + static_cast<std::int64_t>(n) * H * W * C;
        for (int s = 0; s < H * W; ++s) {
            const double* ps = pn + static_cast<std::int64_t>(s) * C;
            for (int c = 0; c < C; ++c) po[c] += ps[c];
        }
        for (int c = 0; c < C; ++c) po[c] *= inv;
    }
    Tensor r = make_result({N, C}, std::move(out));
    if (Tape* tape = tape_of({&x})) {
        int xn = x.node;
        r.tape = tape;
        r.node = tape->add_node("gap", r, {xn},
                                [xn, N, H, W, C, inv](Tape& t, const std::vector<double>& g) {
            auto& gx = t.grad_buffer(xn);
            for (int n = 0; n < N; ++n) {
                const double* gn = g.data() + static_cast<std::int64_t>(n) * C;
                double* gxn = gx.data() + static_cast<std::int64_t>(n) * H * W * C;
                for (int s = 0; s < H * W; ++s) {
                    double* gs = gxn + static_cast<std::int64_t>(s) * C;
                    for (int c = 0; c < C; ++c) gs[c] += gn[c] * inv;
                }
            }
        });
    }
    return r;
}

Tensor softmax(const Tensor& logits) {
    if (logits.shape.size() != 2) {
        throw ShapeError("softmax: input must be [N,K], got " + shape_str(logits.shape));
    }
    const int N = logits.shape[0], K = logits.shape[1];
    if (K < 2) throw ValueError("softmax: needs K >= 2 classes, got " + std::to_string(K));
    std::vector<double> out(static_cast<std::size_t>(N) * K);
    const double* pl = logits.data->data();
    for (int n = 0; n < N; ++n) {
        const double* row = pl + static_cast<std::int64_t>(n) * K;
        double* orow = out.data() + static_cast<std::int64_t>(n) * K;
        double mx = row[0];
        for (int k = 1; k < K; ++k) mx = std::max(mx, row[k]);
        double sum = 0.0;
        for (int k = 0; k < K; ++k) {
            orow[k] = std::exp(row[k] - mx);
            sum += orow[k];
        }
        const double inv = 1.0 / sum;
        for (int k = 0; k < K; ++k) orow[k] *= inv;
    }
    Tensor r = make_result(logits.shape, std::move(out));
    if (Tape* tape = tape_of({&logits})) {
        int xn = logits.node;
        auto yd = r.data;
        r.tape = tape;
        r.node = tape->add_node("softmax", r, {xn},
                                [xn, yd, N, K](Tape& t, const std::vector<double>& g) {
            auto& gx = t.grad_buffer(xn);
            const double* py = yd->data();
            for (int n = 0; n < N; ++n) {
                const double* yrow = py + static_cast<std::int64_t>(n) * K;
                const double* grow = g.data() + static_cast<std::int64_t>(n) * K;
                double dot = 0.0;
                for (int k = 0; k < K; ++k) dot += grow[k] * yrow[k];
                double* gxr = gx.data() + static_cast<std::int64_t>(n) * K;
                for (int k = 0; k < K; ++k) gxr[k] += yrow[k] * (grow[k] - dot);
            }
        });
    }
    return r;
}

namespace {
void check_labels(const Tensor& probs, const std::vector<int>& labels, const char* op) {
    if (probs.shape.size() != 2) {
        throw ShapeError(std::string(op) + ": probs must be [N,K], got " + shape_str(probs.shape));
    }
    const int N = probs.shape[0], K = probs.shape[1];
    if (static_cast<int>(labels.size()) != N) {
        throw ShapeError(std::string(op) + ": got " + std::to_string(labels.size()) +
                         " labels for batch of " + std::to_string(N));
    }
    for (int n = 0; n < N; ++n) {
        if (labels[static_cast<std::size_t>(n)] < 0 || labels[static_cast<std::size_t>(n)] >= K) {
            throw ValueError(std::string(op) + ": label " +
                             std::to_string(labels[static_cast<std::size_t>(n)]) + " at index " +
                             std::to_string(n) + " outside [0," + std::to_string(K) + ")");
        }
    }
}
}  // namespace

Tensor cross_entropy(const Tensor& probs, const std::vector<int>& labels) {
    check_labels(probs, labels, "cross_entropy");
    const int N = probs.shape[0], K = probs.shape[1];
    const double* pp = probs.data->data();
    double loss = 0.0;
    for (int n = 0; n < N; ++n) {
        double p = pp[static_cast<std::int64_t>(n) * K + labels[static_cast<std::size_t>(n)]];
        loss -= std::log(std::max(p, kProbFloor));
    }
    loss /= N;
    Tensor r = Tensor::scalar(loss);
    if (Tape* tape = tape_of({&probs})) {
        int pn = probs.node;
        auto pd = probs.data;
        auto lab = labels;
        r.tape = tape;
        r.node = tape->add_node("cross_entropy", r, {pn},
                                [pn, pd, lab, N, K](Tape& t, const std::vector<double>& g) {
            auto& gp = t.grad_buffer(pn);
            const double* pp2 = pd->data();
            const double go = g[0] / N;
            for (int n = 0; n < N; ++n) {
                const std::int64_t idx =
                    static_cast<std::int64_t>(n) * K + lab[static_cast<std::size_t>(n)];
                const double p = pp2[idx];
                if (p > kProbFloor) gp[idx] -= go / p;
                // below the floor the loss is constant in p
            }
        });
    }
    return r;
}

Tensor select_labels(const Tensor& probs, const std::vector<int>& labels) {
    check_labels(probs, labels, "select_labels");
    const int N = probs.shape[0], K = probs.shape[1];
    const double* pp = probs.data->data();
    std::vector<double> out(static_cast<std::size_t>(N));
    for (int n = 0; n < N; ++n) {
        out[static_cast<std::size_t>(n)] =
            pp[static_cast<std::int64_t>(n) * K + labels[static_cast<std::size_t>(n)]];
    }
    Tensor r = make_result({N}, std::move(out));
    if (Tape* tape = tape_of({&probs})) {
        int pn = probs.node;
        auto lab = labels;
        r.tape = tape;
        r.node = tape->add_node("select_labels", r, {pn},
                                [pn, lab, N, K](Tape& t, const std::vector<double>& g) {
            auto& gp = t.grad_buffer(pn);
            for (int n = 0; n < N; ++n) {
                gp[static_cast<std::int64_t>(n) * K + lab[static_cast<std::size_t>(n)]] +=
                    g[static_cast<std::size_t>(n)];
            }
        });
    }
    return r;
}

Tensor l2_norm_sq(const Tensor& x) {
    const auto n = static_cast<std::size_t>(x.size());
    const double denom = x.shape.size() >= 2 ? static_cast<double>(x.shape[0]) : 1.0;
    const double* px = x.data->data();
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += px[i] * px[i];
    Tensor r = Tensor::scalar(s / denom);
    if (Tape* tape = tape_of({&x})) {
        int xn = x.node;
        auto xd = x.data;
        r.tape = tape;
        r.node = tape->add_node("l2_norm_sq", r, {xn},
                                [xn, xd, denom](Tape& t, const std::vector<double>& g) {
            auto& gx = t.grad_buffer(xn);
            const double* px2 = xd->data();
            const double c = 2.0 * g[0] / denom;
            for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += c * px2[i];
        });
    }
    return r;
}

Tensor sum_all(const Tensor& x) {
    const auto n = static_cast<std::size_t>(x.size());
    const double* px = x.data->data();
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += px[i];
    Tensor r = Tensor::scalar(s);
    if (Tape* tape = tape_of({&x})) {
        int xn = x.node;
        r.tape = tape;
        r.node = tape->add_node("sum_all", r, {xn}, [xn](Tape& t, const std::vector<double>& g) {
            auto& gx = t.grad_buffer(xn);
            for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[0];
        });
    }
    return r;
}

Tensor mean_all(const Tensor& x) {
    const auto n = static_cast<std::size_t>(x.size());
    const double inv = 1.0 / static_cast<double>(n);
    const double* px = x.data->data();
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += px[i];
    Tensor r = Tensor::scalar(s * inv);
    if (Tape* tape = tape_of({&x})) {
        int xn = x.node;
        r.tape = tape;
        r.node = tape->add_node("mean_all", r, {xn},
                                [xn, inv](Tape& t, const std::vector<double>& g) {
            auto& gx = t.grad_buffer(xn);
            const double c = g[0] * inv;
            for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += c;
        });
    }
    return r;
}

}  // namespace gradforge
