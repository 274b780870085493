#pragma once

#include <string>
#include <vector>

#include "gradforge/model.hpp"
#include "gradforge/rng.hpp"
#include "gradforge/tensor.hpp"

namespace gradforge {

enum class PerturbMethod { fgsm, fg_l2, random, gat };

std::string to_string(PerturbMethod m);

struct PerturbationBatch {
    Tensor eta;  // [N,H,W,C], detached
    std::vector<double> per_image_l2;
    double mean_l2 = 0.0;
    PerturbMethod method = PerturbMethod::fgsm;

    static PerturbationBatch from_eta(Tensor eta, PerturbMethod method);
};

// Gradient of the label-class probability w.r.t. the input, per image, with the
// classifier evaluated in eval mode. Detached: nothing differentiates through it.
Tensor input_gradient_prob(const Network& F, const Tensor& x, const std::vector<int>& y);

// Gradient of the per-image cross-entropy loss w.r.t. the input (no 1/N
// factor), detached. Satisfies g = -delta / F(x)_y elementwise.
Tensor input_gradient_loss(const Network& F, const Tensor& x, const std::vector<int>& y);

// eta = eps * sign(grad J); sign(0) = 0, so entries are exactly -eps, 0 or +eps.
PerturbationBatch fgsm(const Network& F, const Tensor& x, const std::vector<int>& y, double eps);

// eta[n] = eps * g[n]/||g[n]||_2 per image; zero where ||g[n]|| < 1e-12.
PerturbationBatch fg_l2(const Network& F, const Tensor& x, const std::vector<int>& y, double eps);

// Per image: standard-normal direction normalized to unit L2, scaled by eps.
PerturbationBatch random_perturbation(const Tensor& x, double eps, Rng& rng);

// eta = G(input_gradient_prob(F, x, y)); bounded in (-1,1) by the tanh output.
PerturbationBatch gat_perturb(const Network& G, const Network& F, const Tensor& x,
                              const std::vector<int>& y);

// clamp(x + eta, 0, 1) — evaluation-time application to the pixel domain.
Tensor apply_perturbation(const Tensor& x, const Tensor& eta);

}  // namespace gradforge
