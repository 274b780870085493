#include "gradforge/perturb.hpp"

#include <algorithm>
#include <cmath>

namespace gradforge {

std::string to_string(PerturbMethod m) {
    switch (m) {
        case PerturbMethod::fgsm: return "fgsm";
        case PerturbMethod::fg_l2: return "fg_l2";
        case PerturbMethod::random: return "random";
        case PerturbMethod::gat: return "gat";
    }
    return "?";
}

PerturbationBatch PerturbationBatch::from_eta(Tensor eta, PerturbMethod method) {
    PerturbationBatch out;
    out.method = method;
    if (eta.shape.size() < 2) {
        throw ShapeError("perturbation must be batched, got " + shape_str(eta.shape));
    }
    const int N = eta.shape[0];
    const std::int64_t per_image = eta.size() / N;
    out.per_image_l2.resize(static_cast<std::size_t>(N));
    const double* p = eta.data->data();
    double sum = 0.0;
    for (int n = 0; n < N; ++n) {
        double s = 0.0;
        const double* row = p + static_cast<std::int64_t>(n) * per_image;
        for (std::int64_t i = 0; i < per_image; ++i) s += row[i] * row[i];
        const double l2 = std::sqrt(s);
        out.per_image_l2[static_cast<std::size_t>(n)] = l2;
        sum += l2;
    }
    out.mean_l2 = sum / N;
    out.eta = eta.detached();
    return out;
}

namespace {

// Shared scaffold: forward in eval mode with the input watched, reduce to a
// scalar, backward, return the input gradient detached.
Tensor input_gradient(const Network& F, const Tensor& x, const std::vector<int>& y,
                      bool of_loss) {
    Tape tape;
    Tensor xt = tape.watch(x.detached());
    ForwardOptions opt;
    opt.tape = &tape;
    opt.track_params = false;
    opt.mode = Mode::eval;
    Tensor probs = F.forward(xt, opt);
    Tensor target;
    if (of_loss) {
        // sum of per-image losses, so each image's gradient carries no 1/N
        target = scale(cross_entropy(probs, y), static_cast<double>(x.shape[0]));
    } else {
        target = sum_all(select_labels(probs, y));
    }
    tape.backward(target);
    return tape.grad_of(xt).detached();
}

}  // namespace

Tensor input_gradient_prob(const Network& F, const Tensor& x, const std::vector<int>& y) {
    return input_gradient(F, x, y, /*of_loss=*/false);
}

Tensor input_gradient_loss(const Network& F, const Tensor& x, const std::vector<int>& y) {
    return input_gradient(F, x, y, /*of_loss=*/true);
}

PerturbationBatch fgsm(const Network& F, const Tensor& x, const std::vector<int>& y, double eps) {
    if (eps < 0.0) throw ValueError("fgsm: eps must be >= 0");
    Tensor g = input_gradient_loss(F, x, y);
    Tensor eta = Tensor::zeros(x.shape);
    for (std::int64_t i = 0; i < g.size(); ++i) {
        const double v = g.at(i);
        eta.at(i) = v > 0.0 ? eps : (v < 0.0 ? -eps : 0.0);
    }
    return PerturbationBatch::from_eta(std::move(eta), PerturbMethod::fgsm);
}

PerturbationBatch fg_l2(const Network& F, const Tensor& x, const std::vector<int>& y, double eps) {
    if (eps < 0.0) throw ValueError("fg_l2: eps must be >= 0");
    Tensor g = input_gradient_loss(F, x, y);
    const int N = x.shape[0];
    const std::int64_t per_image = g.size() / N;
    Tensor eta = Tensor::zeros(x.shape);
    for (int n = 0; n < N; ++n) {
        const std::int64_t off = static_cast<std::int64_t>(n) * per_image;
        double s = 0.0;
        for (std::int64_t i = 0; i < per_image; ++i) s += g.at(off + i) * g.at(off + i);
        const double norm = std::sqrt(s);
        if (norm < 1e-12) continue;  // guarded degenerate case -> zero row
        const double c = eps / norm;
        for (std::int64_t i = 0; i < per_image; ++i) eta.at(off + i) = c * g.at(off + i);
    }
    return PerturbationBatch::from_eta(std::move(eta), PerturbMethod::fg_l2);
}

PerturbationBatch random_perturbation(const Tensor& x, double eps, Rng& rng) {
    if (eps < 0.0) throw ValueError("random_perturbation: eps must be >= 0");
    if (x.shape.size() < 2) {
        throw ShapeError("random_perturbation: input must be batched, got " + shape_str(x.shape));
    }
    const int N = x.shape[0];
    const std::int64_t per_image = x.size() / N;
    Tensor eta = Tensor::zeros(x.shape);
    for (int n = 0; n < N; ++n) {
        const std::int64_t off = static_cast<std::int64_t>(n) * per_image;
        double s = 0.0;
        for (std::int64_t i = 0; i < per_image; ++i) {
            const double v = rng.normal();
            eta.at(off + i) = v;
            s += v * v;
        }
        const double norm = std::sqrt(s);
        if (norm < 1e-12) continue;
        const double c = eps / norm;
        for (std::int64_t i = 0; i < per_image; ++i) eta.at(off + i) *= c;
    }
    return PerturbationBatch::from_eta(std::move(eta), PerturbMethod::random);
}

PerturbationBatch gat_perturb(const Network& G, const Network& F, const Tensor& x,
                              const std::vector<int>& y) {
    Tensor delta = input_gradient_prob(F, x, y);
    ForwardOptions opt;
    opt.mode = Mode::eval;
    Tensor eta = G.forward(delta, opt);
    if (eta.shape != x.shape) {
        throw ShapeError("gat_perturb: generator output " + shape_str(eta.shape) +
                         " does not match input " + shape_str(x.shape));
    }
    return PerturbationBatch::from_eta(std::move(eta), PerturbMethod::gat);
}

Tensor apply_perturbation(const Tensor& x, const Tensor& eta) {
    if (x.shape != eta.shape) {
        throw ShapeError("apply_perturbation: shapes " + shape_str(x.shape) + " vs " +
                         shape_str(eta.shape));
    }
    Tensor out = Tensor::zeros(x.shape);
    for (std::int64_t i = 0; i < x.size(); ++i) {
        out.at(i) = std::clamp(x.at(i) + eta.at(i), 0.0, 1.0);
    }
    return out;
}

}  // namespace gradforge
