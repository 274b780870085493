#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "gradforge/gradcheck.hpp"
#include "gradforge/model.hpp"
#include "gradforge/rng.hpp"
#include "gradforge/tensor.hpp"

namespace testutil {

inline gradforge::Tensor random_tensor(gradforge::Shape shape, gradforge::Rng& rng,
                                       double lo = -1.0, double hi = 1.0) {
    gradforge::Tensor t = gradforge::Tensor::zeros(std::move(shape));
    for (std::int64_t i = 0; i < t.size(); ++i) t.at(i) = rng.uniform(lo, hi);
    return t;
}

// Central differences are invalid within h of a relu kink; push tiny values
// away so the oracle stays meaningful.
inline gradforge::Tensor away_from_zero(gradforge::Tensor t, double margin = 1e-3) {
    for (std::int64_t i = 0; i < t.size(); ++i) {
        const double v = t.at(i);
        if (std::abs(v) < margin) t.at(i) = v >= 0.0 ? v + 2.0 * margin : v - 2.0 * margin;
    }
    return t;
}

// Independent direct-convolution oracle: the literal quadruple-loop sum with
// symmetric zero padding p = (kh-1)/2 and H' = ceil(H/stride).
inline gradforge::Tensor conv2d_oracle(const gradforge::Tensor& x, const gradforge::Tensor& w,
                                       const gradforge::Tensor& b, int stride) {
    const int N = x.shape[0], H = x.shape[1], W = x.shape[2], Cin = x.shape[3];
    const int kh = w.shape[0], kw = w.shape[1], Cout = w.shape[3];
    const int pad = (kh - 1) / 2;
    const int Ho = (H + stride - 1) / stride;
    const int Wo = (W + stride - 1) / stride;
    gradforge::Tensor out = gradforge::Tensor::zeros({N, Ho, Wo, Cout});
    for (int n = 0; n < N; ++n)
        for (int oy = 0; oy < Ho; ++oy)
            for (int ox = 0; ox < Wo; ++ox)
                for (int co = 0; co < Cout; ++co) {
                    double acc = b.at(co);
                    for (int ky = 0; ky < kh; ++ky)
                        for (int kx = 0; kx < kw; ++kx)
                            for (int ci = 0; ci < Cin; ++ci) {
                                const int iy = oy * stride + ky - pad;
                                const int ix = ox * stride + kx - pad;
                                if (iy < 0 || iy >= H || ix < 0 || ix >= W) continue;
                                acc += x.at(((static_cast<std::int64_t>(n) * H + iy) * W + ix) *
                                                Cin +
                                            ci) *
                                       w.at(((static_cast<std::int64_t>(ky) * kw + kx) * Cin +
                                             ci) *
                                                Cout +
                                            co);
                            }
                    out.at(((static_cast<std::int64_t>(n) * Ho + oy) * Wo + ox) * Cout + co) = acc;
                }
    return out;
}

// Gradient check of a whole network's cross-entropy loss: every input
// coordinate plus a seeded coordinate sample per parameter tensor.
//
// Central differences are only a valid oracle where the loss is locally
// smooth. A relu kink inside the [x-h, x+h] window shows up as a second
// difference far above h^2 * f''; such coordinates are skipped. The guard
// reads only function values, never the analytic gradient, so it cannot hide
// a wrong derivative at smooth points.
inline double network_gradcheck(const gradforge::Network& net, const gradforge::Tensor& x,
                                const std::vector<int>& y, double h, gradforge::Rng& coord_rng,
                                int coords_per_param, int* skipped_out = nullptr) {
    namespace gf = gradforge;
    gf::Tape tape;
    gf::Tensor xt = tape.watch(x.detached());
    gf::ForwardOptions opt;
    opt.tape = &tape;
    opt.track_params = true;
    opt.mode = gf::Mode::eval;
    gf::Tensor loss = gf::cross_entropy(net.forward(xt, opt), y);
    tape.backward(loss);

    gf::ForwardOptions eval_opt;
    eval_opt.mode = gf::Mode::eval;
    auto eval_loss = [&]() {
        return gf::cross_entropy(net.forward(x, eval_opt), y).value();
    };
    const double f0 = eval_loss();

    double max_err = 0.0;
    int skipped = 0;
    auto fd_at = [&](std::vector<double>& buf, std::size_t i, double analytic) {
        const double orig = buf[i];
        buf[i] = orig + h;
        const double fp = eval_loss();
        buf[i] = orig - h;
        const double fm = eval_loss();
        buf[i] = orig;
        if (std::abs(fp - 2.0 * f0 + fm) > 8.0 * h * h) {
            ++skipped;  // kink in the window, oracle invalid here
            return;
        }
        const double fd = (fp - fm) / (2.0 * h);
        const double err = std::abs(analytic - fd) / std::max(1.0, std::abs(fd));
        if (err > max_err) max_err = err;
    };

    {
        gf::Tensor gx = tape.grad_of(xt);
        gf::Tensor probe = x;  // shares the buffer eval_loss reads
        for (std::int64_t i = 0; i < probe.size(); ++i) {
            fd_at(*probe.data, static_cast<std::size_t>(i), gx.at(i));
        }
    }
    for (const gf::ConvParam& p : net.params()) {
        for (const gf::Tensor* t : {&p.w, &p.b}) {
            gf::Tensor g = tape.grad_of(*t);
            for (int c = 0; c < coords_per_param; ++c) {
                const auto i = static_cast<std::size_t>(
                    coord_rng.next_u64() % static_cast<std::uint64_t>(t->size()));
                fd_at(*t->data, i, g.at(static_cast<std::int64_t>(i)));
            }
        }
    }
    if (skipped_out) *skipped_out = skipped;
    return max_err;
}

// Unique scratch directory under the build tree.
inline std::string scratch_dir(const std::string& tag) {
    auto dir = std::filesystem::temp_directory_path() / ("gradforge_test_" + tag);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir.string();
}

inline std::vector<unsigned char> read_bytes(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) return {};
    std::vector<unsigned char> out;
    unsigned char buf[4096];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof(buf), f)) > 0) out.insert(out.end(), buf, buf + n);
    std::fclose(f);
    return out;
}

}  // namespace testutil
