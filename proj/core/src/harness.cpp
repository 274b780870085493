#include "gradforge/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

namespace gradforge {

double eval_accuracy(const Network& F, const Dataset& ds, int batch) {
    if (ds.n() == 0) throw ValueError("eval_accuracy: empty dataset");
    int correct = 0;
    for (int start = 0; start < ds.n(); start += batch) {
        std::vector<int> idx;
        for (int i = start; i < std::min(ds.n(), start + batch); ++i) idx.push_back(i);
        auto [x, y] = gather(ds, idx);
        std::vector<int> pred = predict_classes(F, x);
        for (std::size_t i = 0; i < pred.size(); ++i) {
            if (pred[i] == y[i]) ++correct;
        }
    }
    return static_cast<double>(correct) / ds.n();
}

std::string to_string(CurveMode m) { return m == CurveMode::direct ? "direct" : "indirect"; }

namespace {

double adversarial_accuracy(const Network& F_eval, const Network& F_source, PerturbMethod attack,
                            double eps, const Dataset& ds, int batch) {
    int correct = 0;
    for (int start = 0; start < ds.n(); start += batch) {
        std::vector<int> idx;
        for (int i = start; i < std::min(ds.n(), start + batch); ++i) idx.push_back(i);
        auto [x, y] = gather(ds, idx);
        PerturbationBatch pb = attack == PerturbMethod::fgsm ? fgsm(F_source, x, y, eps)
                                                             : fg_l2(F_source, x, y, eps);
        Tensor x_adv = apply_perturbation(x, pb.eta);
        std::vector<int> pred = predict_classes(F_eval, x_adv);
        for (std::size_t i = 0; i < pred.size(); ++i) {
            if (pred[i] == y[i]) ++correct;
        }
    }
    return static_cast<double>(correct) / ds.n();
}

}  // namespace

RobustnessCurve robustness_curve(const Network& F_eval, const Network& F_source,
                                 PerturbMethod attack, const std::vector<double>& epsilons,
                                 const Dataset& ds, int batch) {
    if (attack != PerturbMethod::fgsm && attack != PerturbMethod::fg_l2) {
        throw ValueError("robustness_curve: attack must be fgsm or fg_l2");
    }
    if (epsilons.empty() || epsilons.front() != 0.0) {
        throw ValueError("robustness_curve: epsilon grid must start at 0");
    }
    for (std::size_t i = 1; i < epsilons.size(); ++i) {
        if (epsilons[i] < epsilons[i - 1]) {
            throw ValueError("robustness_curve: epsilon grid must be ascending");
        }
    }
    RobustnessCurve curve;
    curve.attack = attack;
    curve.mode = F_eval.params().front().w.data == F_source.params().front().w.data
                     ? CurveMode::direct
                     : CurveMode::indirect;
    curve.epsilons = epsilons;
    for (double eps : epsilons) {
        if (eps == 0.0) {
            curve.accuracy.push_back(eval_accuracy(F_eval, ds, batch));
        } else {
            curve.accuracy.push_back(
                adversarial_accuracy(F_eval, F_source, attack, eps, ds, batch));
        }
    }
    return curve;
}

// ---------------------------------------------------------------------------
// attack_compare
// ---------------------------------------------------------------------------

namespace {

struct GatPoint {
    double power;
    double accuracy;
    double c_g;
};

double gat_accuracy(const Network& F, const Network& G, const Dataset& ds, double* mean_power,
                    int batch = 256) {
    int correct = 0;
    double power = 0.0;
    for (int start = 0; start < ds.n(); start += batch) {
        std::vector<int> idx;
        for (int i = start; i < std::min(ds.n(), start + batch); ++i) idx.push_back(i);
        auto [x, y] = gather(ds, idx);
        PerturbationBatch pb = gat_perturb(G, F, x, y);
        for (double l2 : pb.per_image_l2) power += l2;
        Tensor x_adv = apply_perturbation(x, pb.eta);
        std::vector<int> pred = predict_classes(F, x_adv);
        for (std::size_t i = 0; i < pred.size(); ++i) {
            if (pred[i] == y[i]) ++correct;
        }
    }
    if (mean_power) *mean_power = power / ds.n();
    return static_cast<double>(correct) / ds.n();
}

// fgsm mean power is linear in eps with slope mean_n sqrt(nnz(g_n)), so the
// matching eps is exact given the measured slope at eps=1.
double fgsm_eps_for_power(const Network& F, const Dataset& ds, double power, int batch = 256) {
    double slope = 0.0;
    for (int start = 0; start < ds.n(); start += batch) {
        std::vector<int> idx;
        for (int i = start; i < std::min(ds.n(), start + batch); ++i) idx.push_back(i);
        auto [x, y] = gather(ds, idx);
        PerturbationBatch pb = fgsm(F, x, y, 1.0);
        for (double l2 : pb.per_image_l2) slope += l2;
    }
    slope /= ds.n();
    return slope > 0.0 ? power / slope : 0.0;
}

}  // namespace

std::vector<AttackComparePoint> attack_compare(const Network& F_frozen, const DataSplits& data,
                                               const Dataset& test,
                                               const std::vector<double>& c_g_grid,
                                               const std::vector<double>& epsilon_grid,
                                               const TrainConfig& gen_cfg) {
    if (c_g_grid.empty()) throw ValueError("attack_compare: empty c_g grid");
    const double clean = eval_accuracy(F_frozen, test);

    std::vector<AttackComparePoint> table;
    table.push_back({"gat", 0.0, clean, 0.0});
    table.push_back({"fg_l2", 0.0, clean, 0.0});
    table.push_back({"fgsm", 0.0, clean, 0.0});

    std::vector<GatPoint> gat_points;
    for (double c_g : c_g_grid) {
        ModelConfig gen_model_cfg = F_frozen.config();
        gen_model_cfg.dropout_rate = 0.0;
        gen_model_cfg.seed = mix_seed(gen_cfg.seed, "attack-compare-gen",
                                      static_cast<std::uint64_t>(gat_points.size()));
        Network G0 = build_generator(gen_model_cfg);
        TrainConfig cfg = gen_cfg;
        cfg.c_g = c_g;
        TrainOutcome res = train_generator_only(G0, F_frozen, data, cfg);
        GatPoint pt;
        pt.c_g = c_g;
        pt.accuracy = gat_accuracy(F_frozen, res.generator, test, &pt.power);
        gat_points.push_back(pt);
        table.push_back({"gat", pt.power, pt.accuracy, c_g});
    }

    // fast-gradient baselines at the matched measured powers plus extra points
    std::vector<double> powers;
    for (const GatPoint& pt : gat_points) powers.push_back(pt.power);
    for (double e : epsilon_grid) {
        if (e > 0.0) powers.push_back(e);
    }
    std::sort(powers.begin(), powers.end());
    for (double p : powers) {
        if (p <= 0.0) continue;
        // fg_l2's per-image L2 equals eps, so eps = target power directly
        double acc = adversarial_accuracy(F_frozen, F_frozen, PerturbMethod::fg_l2, p, test, 256);
        table.push_back({"fg_l2", p, acc, 0.0});
        const double eps_inf = fgsm_eps_for_power(F_frozen, test, p);
        double measured = 0.0;
        {
            double power_sum = 0.0;
            int count = 0;
            for (int start = 0; start < test.n(); start += 256) {
                std::vector<int> idx;
                for (int i = start; i < std::min(test.n(), start + 256); ++i) idx.push_back(i);
                auto [x, y] = gather(test, idx);
                PerturbationBatch pb = fgsm(F_frozen, x, y, eps_inf);
                for (double l2 : pb.per_image_l2) power_sum += l2;
                count += static_cast<int>(idx.size());
            }
            measured = power_sum / count;
        }
        double acc_inf =
            adversarial_accuracy(F_frozen, F_frozen, PerturbMethod::fgsm, eps_inf, test, 256);
        table.push_back({"fgsm", measured, acc_inf, 0.0});
    }
    return table;
}

// ---------------------------------------------------------------------------
// regtable
// ---------------------------------------------------------------------------

std::string to_string(RegMethod m) {
    switch (m) {
        case RegMethod::baseline: return "baseline";
        case RegMethod::dropout: return "dropout";
        case RegMethod::random_pert: return "random_perturbation";
        case RegMethod::fg_linf: return "fg_linf";
        case RegMethod::fg_l2: return "fg_l2";
        case RegMethod::gat: return "gat";
        case RegMethod::dropout_gat: return "dropout_gat";
    }
    return "?";
}

RegMethod reg_method_from_string(const std::string& s) {
    if (s == "baseline") return RegMethod::baseline;
    if (s == "dropout") return RegMethod::dropout;
    if (s == "random" || s == "random_perturbation") return RegMethod::random_pert;
    if (s == "fg_linf") return RegMethod::fg_linf;
    if (s == "fg_l2") return RegMethod::fg_l2;
    if (s == "gat") return RegMethod::gat;
    if (s == "dropout_gat") return RegMethod::dropout_gat;
    throw ValueError("unknown regtable method '" + s + "'");
}

std::pair<double, double> mean_std(const std::vector<double>& values) {
    if (values.empty()) return {0.0, 0.0};
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    if (values.size() < 2) return {mean, 0.0};
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return {mean, std::sqrt(ss / static_cast<double>(values.size() - 1))};
}

namespace {

struct RunResult {
    double accuracy = 0.0;
    bool diverged = false;
};

RunResult run_reg_method(RegMethod method, std::uint64_t seed, const DataSplits& data,
                         const Dataset& test, const ModelConfig& model_cfg,
                         const TrainConfig& base_cfg, const RegOptions& opts) {
    ModelConfig mc = model_cfg;
    mc.seed = seed;
    mc.dropout_rate =
        (method == RegMethod::dropout || method == RegMethod::dropout_gat) ? opts.dropout_rate
                                                                           : 0.0;
    TrainConfig cfg = base_cfg;
    cfg.seed = seed;
    RunResult out;
    try {
        Network F0 = build_classifier(mc);
        TrainOutcome res;
        switch (method) {
            case RegMethod::baseline:
            case RegMethod::dropout:
                cfg.variant = Variant::baseline;
                res = train_supervised(F0, data, cfg);
                break;
            case RegMethod::random_pert:
                cfg.variant = Variant::random;
                cfg.epsilon = opts.eps_random;
                res = train_supervised(F0, data, cfg);
                break;
            case RegMethod::fg_linf:
                cfg.variant = Variant::fg_linf;
                cfg.epsilon = opts.eps_linf;
                res = train_supervised(F0, data, cfg);
                break;
            case RegMethod::fg_l2:
                cfg.variant = Variant::fg_l2;
                cfg.epsilon = opts.eps_l2;
                res = train_supervised(F0, data, cfg);
                break;
            case RegMethod::gat:
            case RegMethod::dropout_gat: {
                cfg.variant = Variant::gat;
                ModelConfig gc = mc;
                gc.dropout_rate = 0.0;
                Network G0 = build_generator(gc);
                res = train_gat(F0, G0, data, cfg);
                break;
            }
        }
        if (res.diverged) {
            out.diverged = true;
        } else {
            out.accuracy = eval_accuracy(res.classifier, test);
        }
    } catch (const ValueError&) {
        out.diverged = true;  // e.g. non-finite gradients with a finite loss
    }
    return out;
}

}  // namespace

std::vector<RegRow> regtable(const DataSplits& data, const Dataset& test,
                             const std::vector<RegMethod>& methods, int repeats,
                             const ModelConfig& model_cfg, const TrainConfig& base_cfg,
                             const RegOptions& opts) {
    if (repeats < 2) throw ValueError("regtable: repeats must be >= 2");
    if (methods.empty()) throw ValueError("regtable: no methods given");

    // (method, repeat) task grid, farmed out to a fixed worker count; results
    // land in preallocated slots so aggregation order never depends on timing
    struct Task {
        std::size_t method_idx;
        int repeat;
    };
    std::vector<Task> tasks;
    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
        for (int r = 0; r < repeats; ++r) tasks.push_back({mi, r});
    }
    std::vector<RunResult> results(tasks.size());
    const int workers = std::max(1, std::min<int>(opts.threads, static_cast<int>(tasks.size())));
    std::atomic<std::size_t> next{0};
    auto work = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= tasks.size()) break;
            const Task& t = tasks[i];
            results[i] = run_reg_method(methods[t.method_idx],
                                        base_cfg.seed + static_cast<std::uint64_t>(t.repeat),
                                        data, test, model_cfg, base_cfg, opts);
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < workers; ++i) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }

    std::vector<RegRow> rows;
    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
        std::vector<double> accs;
        int excluded = 0;
        for (std::size_t i = 0; i < tasks.size(); ++i) {
            if (tasks[i].method_idx != mi) continue;
            if (results[i].diverged) {
                ++excluded;
            } else {
                accs.push_back(results[i].accuracy);
            }
        }
        auto [mean, sd] = mean_std(accs);
        RegRow row;
        row.method = to_string(methods[mi]);
        row.mean_acc = mean;
        row.std_acc = sd;
        row.repeats = static_cast<int>(accs.size());
        row.excluded = excluded;
        rows.push_back(row);
    }
    return rows;
}

}  // namespace gradforge
