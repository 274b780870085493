#include "gradforge/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "gradforge/checkpoint.hpp"
#include "gradforge/harness.hpp"

namespace gradforge {

std::string to_string(Variant v) {
    switch (v) {
        case Variant::baseline: return "baseline";
        case Variant::fg_linf: return "fg_linf";
        case Variant::fg_l2: return "fg_l2";
        case Variant::random: return "random";
        case Variant::gat: return "gat";
    }
    return "?";
}

Variant variant_from_string(const std::string& s) {
    if (s == "baseline") return Variant::baseline;
    if (s == "fg_linf") return Variant::fg_linf;
    if (s == "fg_l2") return Variant::fg_l2;
    if (s == "random") return Variant::random;
    if (s == "gat") return Variant::gat;
    throw ValueError("unknown training variant '" + s + "'");
}

void TrainConfig::validate() const {
    if (ckpt_every < 0) throw ValueError("train config: ckpt_every must be >= 0");
    if (ckpt_every > 0 && ckpt_dir.empty()) {
        throw ValueError("train config: ckpt_every needs a ckpt_dir");
    }
    if (alpha < 0.0 || alpha > 1.0) throw ValueError("train config: alpha must be in [0,1]");
    if (c_g <= 0.0) throw ValueError("train config: c_g must be > 0");
    if (k < 1) throw ValueError("train config: k must be >= 1");
    if (batch < 1) throw ValueError("train config: batch must be >= 1");
    if (epochs < 1) throw ValueError("train config: epochs must be >= 1");
    if (epsilon < 0.0) throw ValueError("train config: epsilon must be >= 0");
    if (patience < 1) throw ValueError("train config: patience must be >= 1");
}

void AdamState::init(const std::vector<ConvParam>& params) {
    m.clear();
    v.clear();
    t = 0;
    for (const ConvParam& p : params) {
        m.emplace_back(static_cast<std::size_t>(p.w.size() + p.b.size()), 0.0);
        v.emplace_back(static_cast<std::size_t>(p.w.size() + p.b.size()), 0.0);
    }
}

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

Tensor loss_J(const Network& F, const Tensor& x, const std::vector<int>& y,
              const ForwardOptions& opt) {
    Tensor probs = F.forward(x, opt);
    return cross_entropy(probs, y);
}

GenLoss loss_G(const Network& F, const Network& G, const Tensor& x, const std::vector<int>& y,
               double c_g, Tape& tape) {
    Tensor delta = input_gradient_prob(F, x, y);  // own tape, detached

    ForwardOptions gen_opt;
    gen_opt.tape = &tape;
    gen_opt.track_params = true;
    Tensor eta = G.forward(delta, gen_opt);

    ForwardOptions clf_opt;
    clf_opt.tape = &tape;
    clf_opt.track_params = false;  // frozen classifier, gradient flows to eta only
    clf_opt.mode = Mode::eval;
    Tensor x_adv = add(x.detached(), eta);
    Tensor probs = F.forward(x_adv, clf_opt);

    Tensor fool_term = mean_all(select_labels(probs, y));
    Tensor power_term = l2_norm_sq(eta);  // batch-averaged squared L2
    GenLoss out;
    out.loss = add(fool_term, scale(power_term, c_g));
    out.mean_power = PerturbationBatch::from_eta(eta.detached(), PerturbMethod::gat).mean_l2;
    return out;
}

GatLoss loss_F_gat(const Network& F, const Network& G, const Tensor& x, const std::vector<int>& y,
                   double alpha, Tape& tape, Rng* dropout_rng) {
    if (alpha < 0.0 || alpha > 1.0) throw ValueError("loss_F_gat: alpha must be in [0,1]");
    ForwardOptions clf_opt;
    clf_opt.tape = &tape;
    clf_opt.track_params = true;
    clf_opt.rng = dropout_rng;

    GatLoss out;
    if (alpha == 1.0) {
        out.loss = loss_J(F, x.detached(), y, clf_opt);
        return out;
    }
    PerturbationBatch pb = gat_perturb(G, F, x, y);  // generator frozen, eta constant
    out.mean_power = pb.mean_l2;
    // unclamped inside the loss; clamping is an evaluation-time concern
    Tensor x_adv = add(x.detached(), pb.eta);
    Tensor adv = loss_J(F, x_adv, y, clf_opt);
    if (alpha == 0.0) {
        out.loss = adv;
        return out;
    }
    Tensor clean = loss_J(F, x.detached(), y, clf_opt);
    out.loss = add(scale(clean, alpha), scale(adv, 1.0 - alpha));
    return out;
}

Tensor loss_F_fg(const Network& F, const Tensor& x, const std::vector<int>& y, double alpha,
                 double eps, FgNorm norm, Tape& tape, Rng* dropout_rng) {
    if (alpha < 0.0 || alpha > 1.0) throw ValueError("loss_F_fg: alpha must be in [0,1]");
    if (eps < 0.0) throw ValueError("loss_F_fg: eps must be >= 0");
    ForwardOptions clf_opt;
    clf_opt.tape = &tape;
    clf_opt.track_params = true;
    clf_opt.rng = dropout_rng;

    if (eps == 0.0 || alpha == 1.0) return loss_J(F, x.detached(), y, clf_opt);

    PerturbationBatch pb = norm == FgNorm::linf ? fgsm(F, x, y, eps) : fg_l2(F, x, y, eps);
    Tensor x_adv = add(x.detached(), pb.eta);
    Tensor adv = loss_J(F, x_adv, y, clf_opt);
    if (alpha == 0.0) return adv;
    Tensor clean = loss_J(F, x.detached(), y, clf_opt);
    return add(scale(clean, alpha), scale(adv, 1.0 - alpha));
}

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

void adam_step(std::vector<ConvParam>& params, const std::vector<Tensor>& grads, AdamState& state,
               double lr, double beta1, double beta2, double eps) {
    if (grads.size() != 2 * params.size()) {
        throw ValueError("adam_step: expected weight+bias gradient per conv parameter");
    }
    if (state.m.size() != params.size()) state.init(params);
    state.t += 1;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));

    for (std::size_t p = 0; p < params.size(); ++p) {
        auto& m = state.m[p];
        auto& v = state.v[p];
        auto update = [&](Tensor& value, const Tensor& grad, std::size_t moment_off,
                          const std::string& name) {
            for (std::int64_t i = 0; i < value.size(); ++i) {
                const double g = grad.at(i);
                if (!std::isfinite(g)) {
                    throw ValueError("non-finite gradient for parameter " + name);
                }
                auto& mi = m[moment_off + static_cast<std::size_t>(i)];
                auto& vi = v[moment_off + static_cast<std::size_t>(i)];
                mi = beta1 * mi + (1.0 - beta1) * g;
                vi = beta2 * vi + (1.0 - beta2) * g * g;
                const double mhat = mi / bc1;
                const double vhat = vi / bc2;
                value.at(i) -= lr * mhat / (std::sqrt(vhat) + eps);
            }
        };
        update(params[p].w, grads[2 * p], 0, params[p].name + ".w");
        update(params[p].b, grads[2 * p + 1], static_cast<std::size_t>(params[p].w.size()),
               params[p].name + ".b");
    }
}

// ---------------------------------------------------------------------------
// Shared loop machinery
// ---------------------------------------------------------------------------

namespace {

std::vector<Tensor> collect_grads(Tape& tape, const std::vector<ConvParam>& params) {
    std::vector<Tensor> grads;
    grads.reserve(2 * params.size());
    for (const ConvParam& p : params) {
        grads.push_back(tape.grad_of(p.w));
        grads.push_back(tape.grad_of(p.b));
    }
    return grads;
}

void restore_params(Network& net, const Network& snapshot) {
    for (std::size_t i = 0; i < net.params().size(); ++i) {
        *net.params()[i].w.data = *snapshot.params()[i].w.data;
        *net.params()[i].b.data = *snapshot.params()[i].b.data;
    }
}

struct EarlyStopper {
    double best = std::numeric_limits<double>::infinity();
    int best_epoch = -1;
    int bad = 0;

    // true when training should stop
    bool update(double val_loss, int epoch, int patience) {
        if (val_loss < best) {
            best = val_loss;
            best_epoch = epoch;
            bad = 0;
            return false;
        }
        bad += 1;
        return bad >= patience;
    }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void maybe_checkpoint(const TrainConfig& cfg, const Network& net, const char* stem, int epoch) {
    if (cfg.ckpt_every <= 0 || (epoch + 1) % cfg.ckpt_every != 0) return;
    save_checkpoint(cfg.ckpt_dir + "/" + stem + "_epoch" + std::to_string(epoch + 1) + ".ckpt",
                    net);
}

// Endless deterministic minibatch stream: reshuffles per epoch with its own key.
class BatchStream {
public:
    BatchStream(const Dataset& ds, int m, std::uint64_t seed)
        : ds_(&ds), m_(m), seed_(seed) {}

    std::pair<Tensor, std::vector<int>> next() {
        if (pos_ >= batches_.size()) {
            batches_ = minibatches(*ds_, m_, seed_, epoch_++);
            pos_ = 0;
        }
        return gather(*ds_, batches_[pos_++]);
    }

private:
    const Dataset* ds_;
    int m_;
    std::uint64_t seed_;
    int epoch_ = 0;
    std::vector<std::vector<int>> batches_;
    std::size_t pos_ = 0;
};

}  // namespace

namespace {

struct EvalMetrics {
    double loss = 0.0;
    double acc = 0.0;
};

// one forward pass for both validation numbers
EvalMetrics eval_metrics(const Network& F, const Dataset& ds, int batch = 256) {
    if (ds.n() == 0) throw ValueError("eval_metrics: empty dataset");
    EvalMetrics out;
    int correct = 0;
    for (int start = 0; start < ds.n(); start += batch) {
        std::vector<int> idx;
        for (int i = start; i < std::min(ds.n(), start + batch); ++i) idx.push_back(i);
        auto [x, y] = gather(ds, idx);
        ForwardOptions opt;
        opt.mode = Mode::eval;
        Tensor probs = F.forward(x, opt);
        out.loss += cross_entropy(probs, y).value() * static_cast<double>(idx.size());
        const int K = probs.shape[1];
        for (int n = 0; n < probs.shape[0]; ++n) {
            const double* row = probs.data->data() + static_cast<std::int64_t>(n) * K;
            int best = 0;
            for (int k = 1; k < K; ++k) {
                if (row[k] > row[best]) best = k;
            }
            if (best == y[static_cast<std::size_t>(n)]) ++correct;
        }
    }
    out.loss /= ds.n();
    out.acc = static_cast<double>(correct) / ds.n();
    return out;
}

}  // namespace

double eval_loss(const Network& F, const Dataset& ds, int batch) {
    return eval_metrics(F, ds, batch).loss;
}

// ---------------------------------------------------------------------------
// train_supervised
// ---------------------------------------------------------------------------

TrainOutcome train_supervised(const Network& F0, const DataSplits& data, const TrainConfig& cfg,
                              const StepObserver& observer) {
    cfg.validate();
    if (cfg.variant == Variant::gat) {
        throw ValueError("train_supervised: use train_gat for the gat variant");
    }
    TrainOutcome out;
    out.classifier = F0.clone();
    Network& F = out.classifier;
    F.set_mode(Mode::train);

    AdamState adam;
    adam.init(F.params());
    Rng dropout_rng(mix_seed(cfg.seed, "dropout"));
    Rng pert_rng(mix_seed(cfg.seed, "random-pert"));
    const std::uint64_t clf_batches = mix_seed(cfg.seed, "clf-batches");

    EarlyStopper stopper;
    Network best = F.clone();

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        double epoch_loss = 0.0;
        int steps = 0;
        for (const auto& batch_idx : minibatches(data.train, cfg.batch, clf_batches, epoch)) {
            auto [x, y] = gather(data.train, batch_idx);
            Tape tape;
            Tensor loss;
            switch (cfg.variant) {
                case Variant::baseline: {
                    ForwardOptions opt;
                    opt.tape = &tape;
                    opt.track_params = true;
                    opt.rng = &dropout_rng;
                    loss = loss_J(F, x, y, opt);
                    break;
                }
                case Variant::fg_linf:
                    loss = loss_F_fg(F, x, y, cfg.alpha, cfg.epsilon, FgNorm::linf, tape,
                                     &dropout_rng);
                    break;
                case Variant::fg_l2:
                    loss = loss_F_fg(F, x, y, cfg.alpha, cfg.epsilon, FgNorm::l2, tape,
                                     &dropout_rng);
                    break;
                case Variant::random: {
                    ForwardOptions opt;
                    opt.tape = &tape;
                    opt.track_params = true;
                    opt.rng = &dropout_rng;
                    if (cfg.epsilon == 0.0 || cfg.alpha == 1.0) {
                        loss = loss_J(F, x, y, opt);
                    } else {
                        PerturbationBatch pb = random_perturbation(x, cfg.epsilon, pert_rng);
                        Tensor adv = loss_J(F, add(x, pb.eta), y, opt);
                        if (cfg.alpha == 0.0) {
                            loss = adv;
                        } else {
                            Tensor clean = loss_J(F, x, y, opt);
                            loss = add(scale(clean, cfg.alpha), scale(adv, 1.0 - cfg.alpha));
                        }
                    }
                    break;
                }
                case Variant::gat:
                    break;  // unreachable
            }
            if (!std::isfinite(loss.value())) {
                out.diverged = true;
                break;
            }
            tape.backward(loss);
            try {
                adam_step(F.params(), collect_grads(tape, F.params()), adam, cfg.lr_f, cfg.beta1,
                          cfg.beta2, cfg.adam_eps);
            } catch (const ValueError&) {
                out.diverged = true;  // finite loss but non-finite gradients
                break;
            }
            epoch_loss += loss.value();
            steps += 1;
            if (observer) observer({StepInfo::Kind::classifier, epoch, steps - 1, &F, nullptr});
        }
        if (out.diverged) break;

        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = steps > 0 ? epoch_loss / steps : 0.0;
        const EvalMetrics vm = eval_metrics(F, data.val);
        rec.val_loss = vm.loss;
        rec.val_acc = vm.acc;
        rec.seconds = seconds_since(t0);
        out.history.epochs.push_back(rec);
        maybe_checkpoint(cfg, F, "model", epoch);

        const bool was_best = rec.val_loss < stopper.best;
        const bool stop = stopper.update(rec.val_loss, epoch, cfg.patience);
        if (was_best) best = F.clone();
        if (stop) break;
    }
    restore_params(F, best);
    F.set_mode(Mode::eval);
    out.best_epoch = stopper.best_epoch;
    out.best_val_loss = stopper.best;
    return out;
}

// ---------------------------------------------------------------------------
// train_gat
// ---------------------------------------------------------------------------

TrainOutcome train_gat(const Network& F0, const Network& G0, const DataSplits& data,
                       const TrainConfig& cfg, const StepObserver& observer) {
    cfg.validate();
    if (cfg.variant != Variant::gat) throw ValueError("train_gat: cfg.variant must be gat");
    TrainOutcome out;
    out.classifier = F0.clone();
    out.generator = G0.clone();
    Network& F = out.classifier;
    Network& G = out.generator;
    F.set_mode(Mode::train);
    G.set_mode(Mode::train);

    AdamState adam_f, adam_g;
    adam_f.init(F.params());
    adam_g.init(G.params());
    Rng dropout_rng(mix_seed(cfg.seed, "dropout"));
    const std::uint64_t clf_batches = mix_seed(cfg.seed, "clf-batches");
    BatchStream gen_stream(data.train, cfg.batch, mix_seed(cfg.seed, "gen-batches"));

    EarlyStopper stopper;
    Network best_f = F.clone();
    Network best_g = G.clone();

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        double epoch_loss = 0.0;
        double epoch_power = 0.0;
        int steps = 0;
        for (const auto& batch_idx : minibatches(data.train, cfg.batch, clf_batches, epoch)) {
            // k generator steps, each on a freshly sampled minibatch
            for (int j = 0; j < cfg.k; ++j) {
                auto [gx, gy] = gen_stream.next();
                Tape gtape;
                GenLoss gl = loss_G(F, G, gx, gy, cfg.c_g, gtape);
                if (!std::isfinite(gl.loss.value())) {
                    out.diverged = true;
                    break;
                }
                gtape.backward(gl.loss);
                try {
                    adam_step(G.params(), collect_grads(gtape, G.params()), adam_g, cfg.lr_g,
                              cfg.beta1, cfg.beta2, cfg.adam_eps);
                } catch (const ValueError&) {
                    out.diverged = true;
                    break;
                }
                if (observer) observer({StepInfo::Kind::generator, epoch, steps, &F, &G});
            }
            if (out.diverged) break;

            // one classifier step
            auto [x, y] = gather(data.train, batch_idx);
            Tape tape;
            GatLoss fl = loss_F_gat(F, G, x, y, cfg.alpha, tape, &dropout_rng);
            if (!std::isfinite(fl.loss.value())) {
                out.diverged = true;
                break;
            }
            tape.backward(fl.loss);
            try {
                adam_step(F.params(), collect_grads(tape, F.params()), adam_f, cfg.lr_f,
                          cfg.beta1, cfg.beta2, cfg.adam_eps);
            } catch (const ValueError&) {
                out.diverged = true;
                break;
            }
            epoch_loss += fl.loss.value();
            epoch_power += fl.mean_power;
            steps += 1;
            if (observer) observer({StepInfo::Kind::classifier, epoch, steps - 1, &F, &G});
        }
        if (out.diverged) break;

        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = steps > 0 ? epoch_loss / steps : 0.0;
        const EvalMetrics vm = eval_metrics(F, data.val);
        rec.val_loss = vm.loss;
        rec.val_acc = vm.acc;
        rec.mean_power = steps > 0 ? epoch_power / steps : 0.0;
        rec.seconds = seconds_since(t0);
        out.history.epochs.push_back(rec);
        maybe_checkpoint(cfg, F, "model", epoch);
        maybe_checkpoint(cfg, G, "generator", epoch);

        const bool was_best = rec.val_loss < stopper.best;
        const bool stop = stopper.update(rec.val_loss, epoch, cfg.patience);
        if (was_best) {
            best_f = F.clone();
            best_g = G.clone();
        }
        if (stop) break;
    }
    restore_params(F, best_f);
    restore_params(G, best_g);
    F.set_mode(Mode::eval);
    G.set_mode(Mode::eval);
    out.best_epoch = stopper.best_epoch;
    out.best_val_loss = stopper.best;
    return out;
}

// ---------------------------------------------------------------------------
// train_generator_only
// ---------------------------------------------------------------------------

namespace {

struct GenValMetrics {
    double loss = 0.0;
    double power = 0.0;
    double adv_acc = 0.0;
};

GenValMetrics eval_generator(const Network& F, const Network& G, const Dataset& ds, double c_g,
                             int batch = 256) {
    GenValMetrics out;
    int correct = 0;
    for (int start = 0; start < ds.n(); start += batch) {
        std::vector<int> idx;
        for (int i = start; i < std::min(ds.n(), start + batch); ++i) idx.push_back(i);
        auto [x, y] = gather(ds, idx);
        Tape tape;
        GenLoss gl = loss_G(F, G, x, y, c_g, tape);
        out.loss += gl.loss.value() * static_cast<double>(idx.size());
        out.power += gl.mean_power * static_cast<double>(idx.size());
        PerturbationBatch pb = gat_perturb(G, F, x, y);
        Tensor x_adv = apply_perturbation(x, pb.eta);
        std::vector<int> pred = predict_classes(F, x_adv);
        for (std::size_t i = 0; i < pred.size(); ++i) {
            if (pred[i] == y[i]) ++correct;
        }
    }
    out.loss /= ds.n();
    out.power /= ds.n();
    out.adv_acc = static_cast<double>(correct) / ds.n();
    return out;
}

}  // namespace

TrainOutcome train_generator_only(const Network& G0, const Network& F_frozen,
                                  const DataSplits& data, const TrainConfig& cfg,
                                  const StepObserver& observer) {
    cfg.validate();
    TrainOutcome out;
    out.classifier = F_frozen.clone();
    out.generator = G0.clone();
    const Network& F = out.classifier;
    Network& G = out.generator;
    G.set_mode(Mode::train);

    AdamState adam_g;
    adam_g.init(G.params());
    const std::uint64_t gen_batches = mix_seed(cfg.seed, "gen-batches");

    EarlyStopper stopper;
    Network best_g = G.clone();

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        double epoch_loss = 0.0;
        double epoch_power = 0.0;
        int steps = 0;
        for (const auto& batch_idx : minibatches(data.train, cfg.batch, gen_batches, epoch)) {
            auto [x, y] = gather(data.train, batch_idx);
            Tape tape;
            GenLoss gl = loss_G(F, G, x, y, cfg.c_g, tape);
            if (!std::isfinite(gl.loss.value())) {
                out.diverged = true;
                break;
            }
            tape.backward(gl.loss);
            try {
                adam_step(G.params(), collect_grads(tape, G.params()), adam_g, cfg.lr_g,
                          cfg.beta1, cfg.beta2, cfg.adam_eps);
            } catch (const ValueError&) {
                out.diverged = true;
                break;
            }
            epoch_loss += gl.loss.value();
            epoch_power += gl.mean_power;
            steps += 1;
            if (observer) observer({StepInfo::Kind::generator, epoch, steps - 1, &F, &G});
        }
        if (out.diverged) break;

        GenValMetrics vm = eval_generator(F, G, data.val, cfg.c_g);
        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = steps > 0 ? epoch_loss / steps : 0.0;
        rec.val_loss = vm.loss;
        rec.val_acc = vm.adv_acc;
        rec.mean_power = vm.power;
        rec.seconds = seconds_since(t0);
        out.history.epochs.push_back(rec);
        maybe_checkpoint(cfg, G, "generator", epoch);

        const bool was_best = rec.val_loss < stopper.best;
        const bool stop = stopper.update(rec.val_loss, epoch, cfg.patience);
        if (was_best) best_g = G.clone();
        if (stop) break;
    }
    restore_params(G, best_g);
    G.set_mode(Mode::eval);
    out.best_epoch = stopper.best_epoch;
    out.best_val_loss = stopper.best;
    return out;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

void write_history_csv(const std::string& path, const TrainHistory& history,
                       bool include_timings) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw IoError("cannot open " + path + " for writing");
    os << "epoch,train_loss,val_loss,val_acc,mean_power,seconds\n";
    char buf[256];
    for (const EpochRecord& r : history.epochs) {
        std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g,%.9g,%.9g,%.9g\n", r.epoch, r.train_loss,
                      r.val_loss, r.val_acc, r.mean_power, include_timings ? r.seconds : 0.0);
        os << buf;
    }
    if (!os) throw IoError("write failed for " + path);
}

}  // namespace gradforge
