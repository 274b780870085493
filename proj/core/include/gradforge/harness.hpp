#pragma once

#include <string>
#include <vector>

#include "gradforge/data.hpp"
#include "gradforge/model.hpp"
#include "gradforge/perturb.hpp"
#include "gradforge/train.hpp"

namespace gradforge {

// Fraction of argmax-correct predictions, eval mode. Errors on an empty set.
double eval_accuracy(const Network& F, const Dataset& ds, int batch = 256);

enum class CurveMode { direct, indirect };

std::string to_string(CurveMode m);

struct RobustnessCurve {
    PerturbMethod attack = PerturbMethod::fg_l2;
    CurveMode mode = CurveMode::direct;
    std::vector<double> epsilons;
    std::vector<double> accuracy;
    std::string source_model;
};

// Accuracy of F_eval under perturbations crafted from F_source's gradients at
// each epsilon (clamped to the pixel domain). Direct mode attacks a model with
// its own gradients; indirect mode uses an independently trained source. The
// grid must be non-negative ascending and anchored at 0.
RobustnessCurve robustness_curve(const Network& F_eval, const Network& F_source,
                                 PerturbMethod attack, const std::vector<double>& epsilons,
                                 const Dataset& ds, int batch = 256);

struct AttackComparePoint {
    std::string method;  // "gat", "fg_l2", "fgsm"
    double power = 0.0;  // measured mean per-image L2
    double accuracy = 0.0;
    double c_g = 0.0;  // gat rows only
};

// Attack-strength comparison against a frozen classifier: per c_g, train a
// generator, measure (mean power, adversarial accuracy) on the test set; then
// evaluate fgsm/fg_l2 at those matched measured powers plus any extra
// epsilon_grid points. Every method gets the power-0 clean-accuracy anchor.
std::vector<AttackComparePoint> attack_compare(const Network& F_frozen, const DataSplits& data,
                                               const Dataset& test,
                                               const std::vector<double>& c_g_grid,
                                               const std::vector<double>& epsilon_grid,
                                               const TrainConfig& gen_cfg);

enum class RegMethod { baseline, dropout, random_pert, fg_linf, fg_l2, gat, dropout_gat };

std::string to_string(RegMethod m);
RegMethod reg_method_from_string(const std::string& s);

struct RegRow {
    std::string method;
    double mean_acc = 0.0;
    double std_acc = 0.0;  // unbiased sample std; 0 when repeats < 2
    int repeats = 0;       // completed (non-diverged) runs
    int excluded = 0;      // diverged runs dropped with a warning
};

struct RegOptions {
    double eps_linf = 0.05;
    double eps_l2 = 1.0;
    double eps_random = 1.0;
    double dropout_rate = 0.2;
    int threads = 1;  // parallel repeats; aggregation order is seed-sorted
};

// Per method: `repeats` training runs with fresh seeds (seed + r), test
// accuracy mean +/- std. Rows come back in the canonical method order given.
std::vector<RegRow> regtable(const DataSplits& data, const Dataset& test,
                             const std::vector<RegMethod>& methods, int repeats,
                             const ModelConfig& model_cfg, const TrainConfig& base_cfg,
                             const RegOptions& opts);

// Sample mean and unbiased std.
std::pair<double, double> mean_std(const std::vector<double>& values);

}  // namespace gradforge
