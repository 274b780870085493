#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "gradforge/checkpoint.hpp"
#include "gradforge/harness.hpp"
#include "gradforge/train.hpp"
#include "support/test_util.hpp"

using namespace gradforge;
using testutil::random_tensor;

namespace {

ModelConfig toy_model_cfg(int hw = 8, double ws = 0.25, int classes = 4, std::uint64_t seed = 1) {
    ModelConfig cfg;
    cfg.input_hw = hw;
    cfg.input_channels = 3;
    cfg.num_classes = classes;
    cfg.width_scale = ws;
    cfg.seed = seed;
    return cfg;
}

DataSplits toy_splits(int n_train, int n_val, int hw, int classes, double noise,
                      std::uint64_t seed) {
    SynthSpec spec;
    spec.n = n_train + n_val;
    spec.hw = hw;
    spec.channels = 3;
    spec.num_classes = classes;
    spec.noise = noise;
    spec.seed = seed;
    Dataset all = synth_dataset(spec);
    auto [train, val] = split(all, {n_train, n_val, seed});
    return {std::move(train), std::move(val)};
}

TrainConfig toy_train_cfg(Variant variant, std::uint64_t seed = 1) {
    TrainConfig cfg;
    cfg.variant = variant;
    cfg.seed = seed;
    cfg.batch = 20;
    cfg.epochs = 6;
    cfg.patience = 6;
    cfg.lr_g = 1e-3;  // desk-scale generator rate
    cfg.c_g = 0.5;
    return cfg;
}

bool params_equal(const Network& a, const Network& b) {
    if (a.params().size() != b.params().size()) return false;
    for (std::size_t i = 0; i < a.params().size(); ++i) {
        if (*a.params()[i].w.data != *b.params()[i].w.data) return false;
        if (*a.params()[i].b.data != *b.params()[i].b.data) return false;
    }
    return true;
}

bool histories_equal(const TrainHistory& a, const TrainHistory& b) {
    if (a.epochs.size() != b.epochs.size()) return false;
    for (std::size_t i = 0; i < a.epochs.size(); ++i) {
        const EpochRecord &ra = a.epochs[i], &rb = b.epochs[i];
        if (ra.epoch != rb.epoch || ra.train_loss != rb.train_loss ||
            ra.val_loss != rb.val_loss || ra.val_acc != rb.val_acc ||
            ra.mean_power != rb.mean_power) {
            return false;  // seconds excluded: wall time is not deterministic
        }
    }
    return true;
}

}  // namespace

TEST_CASE("loss_J values") {
    Network net = build_classifier(toy_model_cfg(8, 0.25, 10, 2));
    Rng rng(3);
    Tensor x = random_tensor({3, 8, 8, 3}, rng, 0.0, 1.0);

    // fresh xavier classifier is near-uniform: loss close to ln K
    const double lj = loss_J(net, x, {0, 1, 2}).value();
    CHECK(lj == doctest::Approx(std::log(10.0)).epsilon(0.05));

    // zeroed conv stack: exactly uniform probabilities, loss exactly ln K
    Network zeroed = net.clone();
    for (ConvParam& p : zeroed.params()) {
        for (std::int64_t i = 0; i < p.w.size(); ++i) p.w.at(i) = 0.0;
        for (std::int64_t i = 0; i < p.b.size(); ++i) p.b.at(i) = 0.0;
    }
    CHECK(loss_J(zeroed, x, {0, 1, 2}).value() == doctest::Approx(std::log(10.0)).epsilon(1e-12));

    // gradient of loss_J w.r.t. parameters against finite differences; a tanh
    // stack keeps the loss smooth so central differences are trustworthy at 1e-6
    ModelConfig sc = toy_model_cfg(8, 0.25, 4, 12);
    std::vector<LayerSpec> smooth_layers = {
        {LayerKind::conv3x3, 6, 1, 0.0}, {LayerKind::tanh},
        {LayerKind::conv3x3, 6, 2, 0.0}, {LayerKind::tanh},
        {LayerKind::conv1x1, 4, 1, 0.0}, {LayerKind::global_avg_pool},
        {LayerKind::softmax}};
    Rng init(13);
    Network smooth(smooth_layers, sc, init, "smooth");
    Rng coords(4);
    CHECK(testutil::network_gradcheck(smooth, x, {0, 1, 2}, 1e-5, coords, 4) < 1e-6);
    // the relu classifier still meets the coarser oracle bound
    Rng coords2(14);
    CHECK(testutil::network_gradcheck(net, x, {0, 1, 2}, 1e-5, coords2, 2) < 1e-4);
}

TEST_CASE("loss_G composition and freezing") {
    Network F = build_classifier(toy_model_cfg(8, 0.25, 4, 5));
    Network G = build_generator(toy_model_cfg(8, 0.25, 4, 6));
    Rng rng(7);
    Tensor x = random_tensor({4, 8, 8, 3}, rng, 0.0, 1.0);
    std::vector<int> y = {0, 1, 2, 3};
    const double c_g = 0.1;

    Tape tape;
    GenLoss gl = loss_G(F, G, x, y, c_g, tape);

    // independent recomposition: mean F(x+eta)_y + c_g * batch-mean ||eta||^2
    PerturbationBatch pb = gat_perturb(G, F, x, y);
    Tensor x_adv = Tensor::zeros(x.shape);
    for (std::int64_t i = 0; i < x.size(); ++i) x_adv.at(i) = x.at(i) + pb.eta.at(i);
    ForwardOptions eval_opt;
    eval_opt.mode = Mode::eval;
    Tensor probs = F.forward(x_adv, eval_opt);
    double fool = 0.0;
    for (int n = 0; n < 4; ++n) fool += probs.at(n * 4 + y[static_cast<std::size_t>(n)]);
    fool /= 4.0;
    double power = 0.0;
    for (std::int64_t i = 0; i < pb.eta.size(); ++i) power += pb.eta.at(i) * pb.eta.at(i);
    power /= 4.0;
    CHECK(gl.loss.value() == doctest::Approx(fool + c_g * power).epsilon(1e-12));
    CHECK(gl.mean_power == doctest::Approx(pb.mean_l2).epsilon(1e-12));

    // gradients reach theta_g only
    tape.backward(gl.loss);
    for (const ConvParam& p : G.params()) {
        CHECK(tape.has_grad(p.w));
        CHECK(tape.has_grad(p.b));
    }
    for (const ConvParam& p : F.params()) {
        CHECK_FALSE(tape.has_grad(p.w));
        CHECK_FALSE(tape.has_grad(p.b));
    }

    // loss_G gradient vs finite differences on one generator parameter tensor
    {
        const std::size_t pi = G.params().size() - 1;
        Tape t2;
        GenLoss gl2 = loss_G(F, G, x, y, c_g, t2);
        t2.backward(gl2.loss);
        Tensor analytic = t2.grad_of(G.params()[pi].w);
        Tensor& wbuf = G.params()[pi].w;
        double max_err = 0.0;
        const double h = 1e-5;
        for (std::int64_t i = 0; i < std::min<std::int64_t>(wbuf.size(), 20); ++i) {
            const double orig = wbuf.at(i);
            wbuf.at(i) = orig + h;
            Tape tp;
            const double fp = loss_G(F, G, x, y, c_g, tp).loss.value();
            wbuf.at(i) = orig - h;
            Tape tm;
            const double fm = loss_G(F, G, x, y, c_g, tm).loss.value();
            wbuf.at(i) = orig;
            const double fd = (fp - fm) / (2.0 * h);
            max_err = std::max(max_err,
                               std::abs(analytic.at(i) - fd) / std::max(1.0, std::abs(fd)));
        }
        CHECK(max_err < 1e-6);
    }
}

TEST_CASE("loss_F_gat mixing and degenerate cases") {
    Network F = build_classifier(toy_model_cfg(8, 0.25, 4, 8));
    Network G = build_generator(toy_model_cfg(8, 0.25, 4, 9));
    Rng rng(10);
    Tensor x = random_tensor({3, 8, 8, 3}, rng, 0.0, 1.0);
    std::vector<int> y = {0, 2, 3};

    {
        // alpha = 1 equals loss_J bitwise
        Tape t1, t2;
        ForwardOptions o1;
        o1.tape = &t1;
        o1.track_params = true;
        GatLoss mixed = loss_F_gat(F, G, x, y, 1.0, t1);
        Tensor plain = loss_J(F, x, y, [&] {
            ForwardOptions o;
            o.tape = &t2;
            o.track_params = true;
            return o;
        }());
        CHECK(mixed.loss.value() == plain.value());
        CHECK(mixed.mean_power == 0.0);
    }
    {
        // alpha mixing is the exact convex combination of the two terms
        Tape tape;
        GatLoss mixed = loss_F_gat(F, G, x, y, 0.5, tape);
        PerturbationBatch pb = gat_perturb(G, F, x, y);
        Tensor x_adv = Tensor::zeros(x.shape);
        for (std::int64_t i = 0; i < x.size(); ++i) x_adv.at(i) = x.at(i) + pb.eta.at(i);
        const double clean = loss_J(F, x, y).value();
        const double adv = loss_J(F, x_adv, y).value();
        CHECK(mixed.loss.value() == doctest::Approx(0.5 * clean + 0.5 * adv).epsilon(1e-12));

        // theta_g receives no gradient from the classifier loss
        tape.backward(mixed.loss);
        for (const ConvParam& p : G.params()) CHECK_FALSE(tape.has_grad(p.w));
        for (const ConvParam& p : F.params()) CHECK(tape.has_grad(p.w));
    }
    {
        // zero generator: every alpha degenerates to loss_J
        Network Gz = G.clone();
        ConvParam& last = Gz.params().back();
        for (std::int64_t i = 0; i < last.w.size(); ++i) last.w.at(i) = 0.0;
        const double plain = loss_J(F, x, y).value();
        for (double alpha : {0.0, 0.3, 0.7}) {
            Tape tape;
            CHECK(std::abs(loss_F_gat(F, Gz, x, y, alpha, tape).loss.value() - plain) < 1e-12);
        }
    }
    Tape tape;
    CHECK_THROWS_AS(loss_F_gat(F, G, x, y, 1.5, tape), ValueError);
}

TEST_CASE("loss_F_fg degenerate and bound") {
    Network F = build_classifier(toy_model_cfg(8, 0.25, 4, 11));
    Rng rng(12);
    Tensor x = random_tensor({3, 8, 8, 3}, rng, 0.0, 1.0);
    std::vector<int> y = {1, 2, 0};

    const double plain = loss_J(F, x, y).value();
    {
        Tape tape;
        CHECK(loss_F_fg(F, x, y, 0.5, 0.0, FgNorm::l2, tape).value() == plain);
    }
    {
        Tape tape;
        CHECK(loss_F_fg(F, x, y, 1.0, 2.5, FgNorm::linf, tape).value() == plain);
    }
    for (FgNorm norm : {FgNorm::linf, FgNorm::l2}) {
        Tape tape;
        const double alpha = 0.5;
        const double v = loss_F_fg(F, x, y, alpha, 0.5, norm, tape).value();
        CHECK(v >= alpha * plain - 1e-12);  // adversarial term is non-negative
        CHECK(v >= plain - 1e-12);          // and no smaller than the clean loss here
    }
}

TEST_CASE("adam_step: first step, zero grads, reference trajectory") {
    // single 3-parameter "layer"
    auto make_params = [](std::vector<double> w) {
        std::vector<ConvParam> params(1);
        params[0].name = "p";
        params[0].w = Tensor({3}, std::move(w));
        params[0].b = Tensor({1}, {0.0});
        return params;
    };
    {
        auto params = make_params({1.0, -2.0, 0.25});
        AdamState st;
        st.init(params);
        std::vector<Tensor> grads = {Tensor({3}, {0.5, 0.5, -0.5}), Tensor({1}, {0.0})};
        adam_step(params, grads, st, 1e-3, 0.9, 0.999, 1e-8);
        CHECK(params[0].w.at(0) < 1.0);
        CHECK(params[0].w.at(2) > 0.25);  // moves against the gradient
        for (std::int64_t i = 0; i < 3; ++i) {
            const double step = std::abs(params[0].w.at(i) - std::vector<double>{1.0, -2.0, 0.25}[i]);
            CHECK(step >= 0.99e-3);
            CHECK(step <= 1e-3);
        }
        CHECK(st.t == 1);
    }
    {
        // zero gradients forever: parameters never move
        auto params = make_params({0.5, 0.5, 0.5});
        AdamState st;
        st.init(params);
        std::vector<Tensor> grads = {Tensor::zeros({3}), Tensor::zeros({1})};
        for (int i = 0; i < 5; ++i) adam_step(params, grads, st, 1e-2, 0.9, 0.999, 1e-8);
        for (std::int64_t i = 0; i < 3; ++i) CHECK(params[0].w.at(i) == 0.5);
    }
    {
        // hand-rolled scalar reference, 10 steps, deterministic gradient schedule
        const double lr = 3e-3, b1 = 0.9, b2 = 0.999, eps = 1e-8;
        std::vector<double> ref = {1.0, -2.0, 0.25};
        std::vector<double> m(3, 0.0), v(3, 0.0);
        auto params = make_params({1.0, -2.0, 0.25});
        AdamState st;
        st.init(params);
        for (int t = 1; t <= 10; ++t) {
            std::vector<double> g(3);
            for (int i = 0; i < 3; ++i) g[static_cast<std::size_t>(i)] = std::sin(0.7 * t + i) + 0.1;
            // reference update
            for (int i = 0; i < 3; ++i) {
                auto ui = static_cast<std::size_t>(i);
                m[ui] = b1 * m[ui] + (1 - b1) * g[ui];
                v[ui] = b2 * v[ui] + (1 - b2) * g[ui] * g[ui];
                const double mhat = m[ui] / (1 - std::pow(b1, t));
                const double vhat = v[ui] / (1 - std::pow(b2, t));
                ref[ui] -= lr * mhat / (std::sqrt(vhat) + eps);
            }
            std::vector<Tensor> grads = {Tensor({3}, g), Tensor({1}, {0.0})};
            adam_step(params, grads, st, lr, b1, b2, eps);
        }
        for (int i = 0; i < 3; ++i) {
            CHECK(std::abs(params[0].w.at(i) - ref[static_cast<std::size_t>(i)]) < 1e-12);
        }
    }
    {
        auto params = make_params({1.0, 1.0, 1.0});
        AdamState st;
        st.init(params);
        std::vector<Tensor> grads = {Tensor({3}, {0.0, std::nan(""), 0.0}), Tensor({1}, {0.0})};
        CHECK_THROWS_WITH_AS(adam_step(params, grads, st, 1e-3, 0.9, 0.999, 1e-8),
                             doctest::Contains("p.w"), ValueError);
    }
}

TEST_CASE("train_supervised: separable toy reaches 100% train accuracy") {
    DataSplits data = toy_splits(60, 20, 8, 2, 0.05, 21);
    Network F0 = build_classifier(toy_model_cfg(8, 0.25, 2, 22));
    TrainConfig cfg = toy_train_cfg(Variant::baseline, 23);
    cfg.epochs = 50;
    cfg.patience = 50;
    cfg.batch = 10;
    TrainOutcome res = train_supervised(F0, data, cfg);
    CHECK_FALSE(res.diverged);
    CHECK(eval_accuracy(res.classifier, data.train) == 1.0);
}

TEST_CASE("train_supervised: fg_l2 with eps=0 equals baseline bitwise") {
    DataSplits data = toy_splits(40, 16, 8, 4, 0.3, 24);
    Network F0 = build_classifier(toy_model_cfg(8, 0.25, 4, 25));
    TrainConfig base = toy_train_cfg(Variant::baseline, 26);
    TrainConfig fg = base;
    fg.variant = Variant::fg_l2;
    fg.epsilon = 0.0;
    TrainOutcome a = train_supervised(F0, data, base);
    TrainOutcome b = train_supervised(F0, data, fg);
    CHECK(params_equal(a.classifier, b.classifier));
    CHECK(histories_equal(a.history, b.history));
}

TEST_CASE("train_supervised: determinism and early-stopping contract") {
    DataSplits data = toy_splits(40, 16, 8, 4, 0.4, 27);
    Network F0 = build_classifier(toy_model_cfg(8, 0.25, 4, 28));
    TrainConfig cfg = toy_train_cfg(Variant::baseline, 29);
    cfg.epochs = 12;
    cfg.patience = 3;
    TrainOutcome a = train_supervised(F0, data, cfg);
    TrainOutcome b = train_supervised(F0, data, cfg);
    CHECK(params_equal(a.classifier, b.classifier));
    CHECK(histories_equal(a.history, b.history));

    // returned model's validation loss is the minimum over all recorded epochs
    const double returned = eval_loss(a.classifier, data.val);
    for (const EpochRecord& r : a.history.epochs) CHECK(returned <= r.val_loss + 1e-12);
    CHECK(returned == doctest::Approx(a.best_val_loss).epsilon(1e-12));
}

TEST_CASE("train_supervised: divergence aborts with history") {
    DataSplits data = toy_splits(20, 10, 8, 2, 0.2, 30);
    for (std::int64_t i = 0; i < data.train.images.size(); ++i) {
        data.train.images.at(i) = std::nan("");
    }
    Network F0 = build_classifier(toy_model_cfg(8, 0.25, 2, 31));
    TrainConfig cfg = toy_train_cfg(Variant::baseline, 32);
    TrainOutcome res = train_supervised(F0, data, cfg);
    CHECK(res.diverged);
}

TEST_CASE("train_gat: alternation freezing verified bitwise per step") {
    DataSplits data = toy_splits(30, 10, 8, 3, 0.3, 33);
    Network F0 = build_classifier(toy_model_cfg(8, 0.25, 3, 34));
    Network G0 = build_generator(toy_model_cfg(8, 0.25, 3, 35));
    TrainConfig cfg = toy_train_cfg(Variant::gat, 36);
    cfg.epochs = 2;
    cfg.k = 2;

    auto snapshot = [](const Network& n) {
        std::vector<std::vector<double>> out;
        for (const ConvParam& p : n.params()) {
            out.push_back(*p.w.data);
            out.push_back(*p.b.data);
        }
        return out;
    };
    auto snap_f = snapshot(F0);
    auto snap_g = snapshot(G0);
    int checked = 0;
    StepObserver obs = [&](const StepInfo& info) {
        if (info.kind == StepInfo::Kind::generator) {
            CHECK(snapshot(*info.classifier) == snap_f);  // theta_f untouched
            snap_g = snapshot(*info.generator);
        } else {
            CHECK(snapshot(*info.generator) == snap_g);  // theta_g untouched
            snap_f = snapshot(*info.classifier);
        }
        ++checked;
    };
    TrainOutcome res = train_gat(F0, G0, data, cfg, obs);
    CHECK_FALSE(res.diverged);
    CHECK(checked >= 2 * 3 * 2);  // (k gen + 1 clf) per batch, 2 batches, 2 epochs
}

TEST_CASE("train_gat: alpha=1 reproduces baseline updates bitwise") {
    DataSplits data = toy_splits(40, 16, 8, 3, 0.3, 37);
    Network F0 = build_classifier(toy_model_cfg(8, 0.25, 3, 38));
    Network G0 = build_generator(toy_model_cfg(8, 0.25, 3, 39));
    TrainConfig base = toy_train_cfg(Variant::baseline, 40);
    base.epochs = 4;
    TrainConfig gat = base;
    gat.variant = Variant::gat;
    gat.alpha = 1.0;

    TrainOutcome b = train_supervised(F0, data, base);
    TrainOutcome g = train_gat(F0, G0, data, gat);
    CHECK(params_equal(b.classifier, g.classifier));
    CHECK(histories_equal(b.history, g.history));
}

TEST_CASE("train_gat: determinism and first-epoch progress") {
    DataSplits data = toy_splits(40, 16, 8, 3, 0.3, 41);
    Network F0 = build_classifier(toy_model_cfg(8, 0.25, 3, 42));
    Network G0 = build_generator(toy_model_cfg(8, 0.25, 3, 43));
    TrainConfig cfg = toy_train_cfg(Variant::gat, 44);
    cfg.epochs = 3;

    TrainOutcome a = train_gat(F0, G0, data, cfg);
    TrainOutcome b = train_gat(F0, G0, data, cfg);
    CHECK(params_equal(a.classifier, b.classifier));
    CHECK(params_equal(a.generator, b.generator));
    CHECK(histories_equal(a.history, b.history));

    // mixed clean/adversarial loss at the untouched initialization
    double initial = 0.0;
    {
        auto [x, y] = gather(data.train, [&] {
            std::vector<int> idx(static_cast<std::size_t>(data.train.n()));
            for (int i = 0; i < data.train.n(); ++i) idx[static_cast<std::size_t>(i)] = i;
            return idx;
        }());
        Tape tape;
        initial = loss_F_gat(F0, G0, x, y, cfg.alpha, tape).loss.value();
    }
    REQUIRE_FALSE(a.history.epochs.empty());
    CHECK(a.history.epochs[0].train_loss < initial);
}

TEST_CASE("train_generator_only: useful perturbations, frozen classifier") {
    DataSplits data = toy_splits(60, 30, 8, 3, 0.25, 45);
    // a lightly trained classifier to attack
    Network F0 = build_classifier(toy_model_cfg(8, 0.25, 3, 46));
    TrainConfig pre = toy_train_cfg(Variant::baseline, 47);
    pre.epochs = 8;
    pre.patience = 8;
    Network F = train_supervised(F0, data, pre).classifier;
    auto f_before = *F.params()[0].w.data;

    Network G0 = build_generator(toy_model_cfg(8, 0.25, 3, 48));
    TrainConfig cfg = toy_train_cfg(Variant::gat, 49);
    cfg.epochs = 10;
    cfg.patience = 10;
    cfg.c_g = 0.05;
    cfg.lr_g = 1e-3;
    TrainOutcome res = train_generator_only(G0, F, data, cfg);
    CHECK_FALSE(res.diverged);

    // theta_f bitwise unchanged
    CHECK(*F.params()[0].w.data == f_before);
    CHECK(params_equal(res.classifier, F));

    // the trained generator lowers the label probability on validation
    auto mean_label_prob = [&](const Network& gen, bool perturbed) {
        std::vector<int> idx(static_cast<std::size_t>(data.val.n()));
        for (int i = 0; i < data.val.n(); ++i) idx[static_cast<std::size_t>(i)] = i;
        auto [x, y] = gather(data.val, idx);
        Tensor input = x;
        if (perturbed) {
            PerturbationBatch pb = gat_perturb(gen, F, x, y);
            input = Tensor::zeros(x.shape);
            for (std::int64_t i = 0; i < x.size(); ++i) input.at(i) = x.at(i) + pb.eta.at(i);
        }
        ForwardOptions opt;
        opt.mode = Mode::eval;
        Tensor probs = F.forward(input, opt);
        double s = 0.0;
        for (int n = 0; n < data.val.n(); ++n) {
            s += probs.at(n * 3 + y[static_cast<std::size_t>(n)]);
        }
        return s / data.val.n();
    };
    const double clean_prob = mean_label_prob(res.generator, false);
    const double adv_prob = mean_label_prob(res.generator, true);
    CHECK(adv_prob < clean_prob);

    // validation loss_G at the returned checkpoint does not exceed the initial one
    auto val_loss_g = [&](const Network& gen) {
        std::vector<int> idx(static_cast<std::size_t>(data.val.n()));
        for (int i = 0; i < data.val.n(); ++i) idx[static_cast<std::size_t>(i)] = i;
        auto [x, y] = gather(data.val, idx);
        Tape tape;
        return loss_G(F, gen, x, y, cfg.c_g, tape).loss.value();
    };
    CHECK(val_loss_g(res.generator) <= val_loss_g(G0) + 1e-12);
}

TEST_CASE("generator power shrinks as c_g grows") {
    DataSplits data = toy_splits(80, 30, 8, 3, 0.25, 50);
    Network F0 = build_classifier(toy_model_cfg(8, 0.25, 3, 51));
    TrainConfig pre = toy_train_cfg(Variant::baseline, 52);
    pre.epochs = 6;
    Network F = train_supervised(F0, data, pre).classifier;

    auto power_for = [&](double c_g) {
        Network G0 = build_generator(toy_model_cfg(8, 0.25, 3, 53));
        TrainConfig cfg = toy_train_cfg(Variant::gat, 54);
        cfg.epochs = 25;
        cfg.patience = 25;
        cfg.c_g = c_g;
        cfg.lr_g = 1e-3;
        TrainOutcome res = train_generator_only(G0, F, data, cfg);
        std::vector<int> idx(static_cast<std::size_t>(data.val.n()));
        for (int i = 0; i < data.val.n(); ++i) idx[static_cast<std::size_t>(i)] = i;
        auto [x, y] = gather(data.val, idx);
        return gat_perturb(res.generator, F, x, y).mean_l2;
    };
    // widely spaced 3-point grid; ordering is non-strict
    const double p1 = power_for(0.01);
    const double p2 = power_for(1.0);
    const double p3 = power_for(100.0);
    CHECK(p2 <= p1 + 1e-9);
    CHECK(p3 <= p2 + 1e-9);
}

TEST_CASE("periodic checkpoints at the configured cadence") {
    const std::string dir = testutil::scratch_dir("cadence");
    DataSplits data = toy_splits(30, 10, 8, 2, 0.2, 55);
    Network F0 = build_classifier(toy_model_cfg(8, 0.25, 2, 56));
    TrainConfig cfg = toy_train_cfg(Variant::baseline, 57);
    cfg.epochs = 4;
    cfg.patience = 4;
    cfg.ckpt_every = 2;
    cfg.ckpt_dir = dir;
    train_supervised(F0, data, cfg);
    CHECK(std::filesystem::exists(dir + "/model_epoch2.ckpt"));
    CHECK(std::filesystem::exists(dir + "/model_epoch4.ckpt"));
    Network snap = load_checkpoint(dir + "/model_epoch2.ckpt");
    CHECK(snap.params().size() == F0.params().size());

    TrainConfig bad = cfg;
    bad.ckpt_dir.clear();
    CHECK_THROWS_AS(train_supervised(F0, data, bad), ValueError);
}

TEST_CASE("history csv schema and deterministic timings column") {
    const std::string dir = testutil::scratch_dir("history");
    TrainHistory h;
    h.epochs.push_back({0, 1.5, 1.25, 0.5, 0.1, 3.25});
    h.epochs.push_back({1, 1.0, 0.75, 0.625, 0.2, 2.5});
    write_history_csv(dir + "/history.csv", h, false);
    std::ifstream in(dir + "/history.csv");
    std::string line;
    std::getline(in, line);
    CHECK(line == "epoch,train_loss,val_loss,val_acc,mean_power,seconds");
    std::getline(in, line);
    CHECK(line == "0,1.5,1.25,0.5,0.1,0");
    std::getline(in, line);
    CHECK(line == "1,1,0.75,0.625,0.2,0");

    write_history_csv(dir + "/timed.csv", h, true);
    std::ifstream in2(dir + "/timed.csv");
    std::getline(in2, line);
    std::getline(in2, line);
    CHECK(line == "0,1.5,1.25,0.5,0.1,3.25");
}
