#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "gradforge/data.hpp"
#include "gradforge/model.hpp"
#include "gradforge/perturb.hpp"

namespace gradforge {

enum class Variant { baseline, fg_linf, fg_l2, random, gat };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);

struct TrainConfig {
    double alpha = 0.5;   // clean/adversarial mix of the classifier loss
    double c_g = 1.0;     // perturbation power penalty of the generator loss
    int k = 1;            // generator steps per classifier step
    double lr_f = 1e-3;
    double lr_g = 1e-6;
    int batch = 100;
    int epochs = 50;
    double epsilon = 0.0;  // fast-gradient / random variants
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 0;
    Variant variant = Variant::baseline;
    int patience = 10;  // validation evaluations without improvement before stopping

    // periodic checkpointing: every ckpt_every epochs into ckpt_dir (0 = off)
    int ckpt_every = 0;
    std::string ckpt_dir;

    void validate() const;
};

struct AdamState {
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
    std::int64_t t = 0;

    void init(const std::vector<ConvParam>& params);
};

struct EpochRecord {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double val_acc = 0.0;
    double mean_power = 0.0;  // mean per-image L2 of applied perturbations (gat)
    double seconds = 0.0;     // wall time; excluded from deterministic CSV output
};

struct TrainHistory {
    std::vector<EpochRecord> epochs;
};

struct TrainOutcome {
    Network classifier;
    Network generator;  // meaningful for gat / generator-only runs
    TrainHistory history;
    bool diverged = false;
    int best_epoch = -1;
    double best_val_loss = 0.0;
};

// Step observer for tests that verify the alternation contract. The network
// pointers refer to the live training copies and must not be mutated.
struct StepInfo {
    enum class Kind { generator, classifier } kind;
    int epoch;
    int step_in_epoch;
    const Network* classifier = nullptr;
    const Network* generator = nullptr;
};
using StepObserver = std::function<void(const StepInfo&)>;

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

// Batch-mean cross entropy of the label class.
Tensor loss_J(const Network& F, const Tensor& x, const std::vector<int>& y,
              const ForwardOptions& opt = {});

struct GenLoss {
    Tensor loss;
    double mean_power = 0.0;  // mean per-image L2 of G(delta), reporting only
};

// L_G = mean_n F(x + G(delta))_y + c_g * mean_n ||G(delta)_n||^2, with delta
// detached and the classifier frozen (gradients reach theta_g only).
GenLoss loss_G(const Network& F, const Network& G, const Tensor& x, const std::vector<int>& y,
               double c_g, Tape& tape);

struct GatLoss {
    Tensor loss;
    double mean_power = 0.0;
};

// L_F = alpha * J(x) + (1-alpha) * J(x + G(delta)) with the generator frozen
// (its output enters as a constant). alpha == 1 short-circuits to loss_J so the
// degenerate mix is bitwise identical to baseline training.
GatLoss loss_F_gat(const Network& F, const Network& G, const Tensor& x, const std::vector<int>& y,
                   double alpha, Tape& tape, Rng* dropout_rng = nullptr);

enum class FgNorm { linf, l2 };

// Fast-gradient adversarial objective; eps == 0 short-circuits to loss_J.
Tensor loss_F_fg(const Network& F, const Tensor& x, const std::vector<int>& y, double alpha,
                 double eps, FgNorm norm, Tape& tape, Rng* dropout_rng = nullptr);

// ---------------------------------------------------------------------------
// Optimizer
// ---------------------------------------------------------------------------

// One bias-corrected Adam step over the full parameter set; t advances by one.
// Throws ValueError naming the parameter on any non-finite gradient.
void adam_step(std::vector<ConvParam>& params, const std::vector<Tensor>& grads, AdamState& state,
               double lr, double beta1, double beta2, double eps);

// ---------------------------------------------------------------------------
// Training loops (all deterministic given cfg.seed and the data)
// ---------------------------------------------------------------------------

// Adam minimization of the variant loss (baseline / fg_linf / fg_l2 / random),
// one validation evaluation per epoch, early stopping on validation loss, best
// checkpoint returned.
TrainOutcome train_supervised(const Network& F0, const DataSplits& data, const TrainConfig& cfg,
                              const StepObserver& observer = nullptr);

// Alternating optimization: k generator steps on fresh minibatches minimizing
// L_G w.r.t. theta_g, then one classifier step minimizing L_F w.r.t. theta_f,
// delta recomputed from the current classifier at every minibatch. Epochs are
// delimited by classifier steps covering the training set once.
TrainOutcome train_gat(const Network& F0, const Network& G0, const DataSplits& data,
                       const TrainConfig& cfg, const StepObserver& observer = nullptr);

// Generator-only training against a frozen classifier (attack-strength runs);
// early stopping on validation L_G.
TrainOutcome train_generator_only(const Network& G0, const Network& F_frozen,
                                  const DataSplits& data, const TrainConfig& cfg,
                                  const StepObserver& observer = nullptr);

// Batched eval-mode metrics.
double eval_loss(const Network& F, const Dataset& ds, int batch = 256);

// history.csv schema: epoch,train_loss,val_loss,val_acc,mean_power,seconds.
// seconds is written as 0 unless include_timings, keeping output byte-stable.
void write_history_csv(const std::string& path, const TrainHistory& history,
                       bool include_timings);

}  // namespace gradforge
