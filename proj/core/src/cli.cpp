#include "gradforge/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>

#include "gradforge/checkpoint.hpp"
#include "gradforge/harness.hpp"
#include "gradforge/svg.hpp"

namespace gradforge {

namespace {

const char* kUsage = R"(usage: gradforge <command> [flags]

commands:
  train           train one model variant, emit history.csv and checkpoints
  curve           accuracy-vs-epsilon robustness curve (direct or indirect)
  attack-compare  accuracy-vs-power comparison of gat / fg_l2 / fgsm attacks
  regtable        mean +/- std test accuracy per regularization method
  help            print this message

common flags:
  --dataset {synth|cifar10|cifar100}   --data-dir <dir>   --config <file>
  --seed <n>  --out <dir>  --variant {baseline|fg_linf|fg_l2|random|gat}
  --alpha <f> --cg <f> --k <n> --eps <list> --repeats <n>
  --width-scale <f> --hw <n> --full --timings --dry-run

config file: UTF-8 lines of `key = value`, `#` comments; flags override it.
)";

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

using KeyValues = std::vector<std::pair<std::string, std::string>>;

KeyValues load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file " + path);
    KeyValues out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw UsageError(path + ":" + std::to_string(lineno) + ": expected `key = value`");
        }
        out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return out;
}

const std::vector<std::string> kBoolKeys = {"full", "timings", "dry_run"};

bool is_bool_key(const std::string& key) {
    return std::find(kBoolKeys.begin(), kBoolKeys.end(), key) != kBoolKeys.end();
}

std::string flag_to_key(const std::string& flag) {
    std::string key = flag.substr(2);
    std::replace(key.begin(), key.end(), '-', '_');
    if (key == "data") key = "dataset";  // accepted alias
    return key;
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw UsageError("flag --" + key + ": expected a number, got '" + v + "'");
    }
}

int parse_int(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const long n = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return static_cast<int>(n);
    } catch (const std::exception&) {
        throw UsageError("flag --" + key + ": expected an integer, got '" + v + "'");
    }
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const unsigned long long n = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return n;
    } catch (const std::exception&) {
        throw UsageError("flag --" + key + ": expected an unsigned integer, got '" + v + "'");
    }
}

std::vector<double> parse_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        out.push_back(parse_double(key, item));
    }
    if (out.empty()) throw UsageError("flag --" + key + ": empty list");
    return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw UsageError("flag --" + key + ": expected true/false, got '" + v + "'");
}

void apply_kv(ExperimentConfig& cfg, const std::string& key, const std::string& v) {
    if (key == "dataset") cfg.dataset = v;
    else if (key == "data_dir") cfg.data_dir = v;
    else if (key == "out") cfg.out_dir = v;
    else if (key == "seed") cfg.seed = parse_u64(key, v);
    else if (key == "hw") cfg.hw = parse_int(key, v);
    else if (key == "channels") cfg.channels = parse_int(key, v);
    else if (key == "classes") cfg.classes = parse_int(key, v);
    else if (key == "width_scale") cfg.width_scale = parse_double(key, v);
    else if (key == "dropout") cfg.dropout = parse_double(key, v);
    else if (key == "variant") cfg.variant = v;
    else if (key == "alpha") cfg.alpha = parse_double(key, v);
    else if (key == "cg") cfg.cg = parse_double(key, v);
    else if (key == "k") cfg.k = parse_int(key, v);
    else if (key == "lr_f") cfg.lr_f = parse_double(key, v);
    else if (key == "lr_g") cfg.lr_g = parse_double(key, v);
    else if (key == "batch") cfg.batch = parse_int(key, v);
    else if (key == "epochs") cfg.epochs = parse_int(key, v);
    else if (key == "patience") cfg.patience = parse_int(key, v);
    else if (key == "epsilon") cfg.epsilon = parse_double(key, v);
    else if (key == "eps") cfg.eps = parse_list(key, v);
    else if (key == "cg_grid") cfg.cg_grid = parse_list(key, v);
    else if (key == "repeats") cfg.repeats = parse_int(key, v);
    else if (key == "methods") cfg.methods = v;
    else if (key == "eps_linf") cfg.eps_linf = parse_double(key, v);
    else if (key == "eps_l2") cfg.eps_l2 = parse_double(key, v);
    else if (key == "eps_random") cfg.eps_random = parse_double(key, v);
    else if (key == "n_train") cfg.n_train = parse_int(key, v);
    else if (key == "n_val") cfg.n_val = parse_int(key, v);
    else if (key == "n_test") cfg.n_test = parse_int(key, v);
    else if (key == "noise") cfg.noise = parse_double(key, v);
    else if (key == "synth_kind") cfg.synth_kind = v;
    else if (key == "mode") cfg.mode = v;
    else if (key == "attack") cfg.attack = v;
    else if (key == "ckpt") cfg.ckpt = v;
    else if (key == "ckpt_every") cfg.ckpt_every = parse_int(key, v);
    else if (key == "full") cfg.full = parse_bool(key, v);
    else if (key == "timings") cfg.timings = parse_bool(key, v);
    else if (key == "dry_run") cfg.dry_run = parse_bool(key, v);
    else if (key == "threads") cfg.threads = parse_int(key, v);
    else throw UsageError("unknown flag --" + key);
}

void apply_full_preset(ExperimentConfig& cfg) {
    cfg.dataset = "cifar10";
    cfg.hw = 32;
    cfg.width_scale = 1.0;
    cfg.n_train = 45000;
    cfg.n_val = 5000;
    cfg.n_test = 10000;
    cfg.repeats = 50;
    cfg.lr_g = 1e-6;
    cfg.batch = 100;
    cfg.epochs = 200;
    cfg.patience = 10;
}

std::string fmt_g(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

std::string join(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ",";
        out += fmt_g(v[i]);
    }
    return out;
}

void validate_config(const ExperimentConfig& cfg) {
    if (cfg.dataset != "synth" && cfg.dataset != "cifar10" && cfg.dataset != "cifar100") {
        throw UsageError("flag --dataset: expected synth|cifar10|cifar100, got '" + cfg.dataset +
                         "'");
    }
    if (cfg.dataset != "synth" && cfg.data_dir.empty()) {
        throw UsageError("flag --data-dir is required for dataset " + cfg.dataset);
    }
    if (cfg.mode != "direct" && cfg.mode != "indirect") {
        throw UsageError("flag --mode: expected direct|indirect, got '" + cfg.mode + "'");
    }
    if (cfg.attack != "fg_l2" && cfg.attack != "fgsm") {
        throw UsageError("flag --attack: expected fg_l2|fgsm, got '" + cfg.attack + "'");
    }
    if (cfg.synth_kind != "gaussian_blobs" && cfg.synth_kind != "ring") {
        throw UsageError("flag --synth-kind: expected gaussian_blobs|ring, got '" +
                         cfg.synth_kind + "'");
    }
    variant_from_string(cfg.variant);  // throws on junk
    if (!cfg.eps.empty()) {
        if (cfg.eps.front() != 0.0) throw UsageError("flag --eps: grid must start at 0");
        for (std::size_t i = 0; i < cfg.eps.size(); ++i) {
            if (cfg.eps[i] < 0.0) throw UsageError("flag --eps: values must be >= 0");
            if (i > 0 && cfg.eps[i] < cfg.eps[i - 1]) {
                throw UsageError("flag --eps: grid must be ascending");
            }
        }
    }
}

}  // namespace

ExperimentConfig resolve_cli_config(const std::vector<std::string>& args) {
    if (args.empty()) throw UsageError("missing command (try `gradforge help`)");
    ExperimentConfig cfg;
    cfg.command = args[0];
    const std::vector<std::string> commands = {"train", "curve", "attack-compare", "regtable",
                                               "help"};
    if (std::find(commands.begin(), commands.end(), cfg.command) == commands.end()) {
        throw UsageError("unknown command '" + cfg.command + "' (try `gradforge help`)");
    }

    // collect flag pairs
    KeyValues flag_kv;
    std::string config_path;
    for (std::size_t i = 1; i < args.size(); ++i) {
        const std::string& a = args[i];
        if (a.rfind("--", 0) != 0) throw UsageError("unexpected argument '" + a + "'");
        std::string key = flag_to_key(a);
        std::string value;
        const auto eq = key.find('=');
        if (eq != std::string::npos) {
            value = key.substr(eq + 1);
            key = key.substr(0, eq);
        } else if (is_bool_key(key)) {
            value = "true";
        } else {
            if (i + 1 >= args.size()) throw UsageError("flag " + a + " expects a value");
            value = args[++i];
        }
        if (key == "config") {
            config_path = value;
        } else {
            flag_kv.emplace_back(key, value);
        }
    }

    // resolution order: defaults -> --full preset -> config file -> flags
    for (const auto& [k, v] : flag_kv) {
        if (k == "full" && parse_bool(k, v)) apply_full_preset(cfg);
    }
    if (!config_path.empty()) {
        for (const auto& [k, v] : load_config_file(config_path)) apply_kv(cfg, k, v);
    }
    for (const auto& [k, v] : flag_kv) apply_kv(cfg, k, v);

    if (cfg.command != "help") validate_config(cfg);
    return cfg;
}

namespace {

// ---------------------------------------------------------------------------
// Data preparation
// ---------------------------------------------------------------------------

struct PreparedData {
    DataSplits splits;
    Dataset test;
};

Dataset shrink_to(Dataset ds, int hw, const std::string& which) {
    while (ds.h() > hw) {
        if (ds.h() % 2 != 0) {
            throw UsageError("flag --hw: cannot downsample " + which + " from " +
                             std::to_string(ds.h()) + " to " + std::to_string(hw));
        }
        ds = downsample2x(ds);
    }
    if (ds.h() != hw) {
        throw UsageError("flag --hw: " + which + " has " + std::to_string(ds.h()) +
                         " pixels, cannot reach " + std::to_string(hw));
    }
    return ds;
}

PreparedData prepare_data(const ExperimentConfig& cfg) {
    PreparedData out;
    if (cfg.dataset == "synth") {
        SynthSpec spec;
        spec.kind = cfg.synth_kind == "ring" ? SynthKind::ring : SynthKind::gaussian_blobs;
        spec.n = cfg.n_train + cfg.n_val + cfg.n_test;
        spec.hw = cfg.hw;
        spec.channels = cfg.channels;
        spec.num_classes = cfg.classes;
        spec.noise = cfg.noise;
        spec.seed = cfg.seed;
        Dataset all = synth_dataset(spec);
        auto [trainval, test] =
            split(all, {cfg.n_train + cfg.n_val, cfg.n_test, mix_seed(cfg.seed, "test-split")});
        out.test = std::move(test);
        auto [train, val] =
            split(trainval, {cfg.n_train, cfg.n_val, mix_seed(cfg.seed, "val-split")});
        out.splits.train = std::move(train);
        out.splits.val = std::move(val);
    } else {
        const CifarVariant variant =
            cfg.dataset == "cifar10" ? CifarVariant::cifar10 : CifarVariant::cifar100;
        Dataset train_full = shrink_to(load_cifar_train(cfg.data_dir, variant), cfg.hw, "cifar");
        Dataset test_full = shrink_to(load_cifar_test(cfg.data_dir, variant), cfg.hw, "cifar");
        if (cfg.n_train + cfg.n_val > train_full.n()) {
            throw UsageError("flag --n-train: requested " +
                             std::to_string(cfg.n_train + cfg.n_val) + " of " +
                             std::to_string(train_full.n()) + " available train images");
        }
        Dataset pool = cfg.n_train + cfg.n_val < train_full.n()
                           ? subsample(train_full, cfg.n_train + cfg.n_val,
                                       mix_seed(cfg.seed, "train-pool"))
                           : std::move(train_full);
        auto [train, val] = split(pool, {cfg.n_train, cfg.n_val, mix_seed(cfg.seed, "val-split")});
        out.splits.train = std::move(train);
        out.splits.val = std::move(val);
        out.test = cfg.n_test < test_full.n()
                       ? subsample(test_full, cfg.n_test, mix_seed(cfg.seed, "test-pool"))
                       : std::move(test_full);
    }
    return out;
}

ModelConfig model_config(const ExperimentConfig& cfg, double dropout_rate = 0.0) {
    ModelConfig mc;
    mc.input_hw = cfg.hw;
    mc.input_channels = cfg.channels;
    mc.num_classes = cfg.dataset == "cifar100" ? 100 : cfg.classes;
    mc.width_scale = cfg.width_scale;
    mc.seed = cfg.seed;
    mc.dropout_rate = dropout_rate;
    return mc;
}

TrainConfig train_config(const ExperimentConfig& cfg) {
    TrainConfig tc;
    tc.alpha = cfg.alpha;
    tc.c_g = cfg.cg;
    tc.k = cfg.k;
    tc.lr_f = cfg.lr_f;
    tc.lr_g = cfg.lr_g;
    tc.batch = cfg.batch;
    tc.epochs = cfg.epochs;
    tc.epsilon = cfg.epsilon;
    tc.seed = cfg.seed;
    tc.variant = variant_from_string(cfg.variant);
    tc.patience = cfg.patience;
    return tc;
}

int pick_threads(const ExperimentConfig& cfg) {
    if (cfg.threads > 0) return cfg.threads;
    const unsigned hc = std::thread::hardware_concurrency();
    return static_cast<int>(std::clamp(hc, 1u, 8u));
}

// ---------------------------------------------------------------------------
// Output helpers
// ---------------------------------------------------------------------------

void ensure_out_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output dir " + dir + ": " + ec.message());
}

void write_csv(const std::string& path, const std::string& header,
               const std::vector<std::string>& rows) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw IoError("cannot open " + path + " for writing");
    os << header << "\n";
    for (const std::string& r : rows) os << r << "\n";
    if (!os) throw IoError("write failed for " + path);
}

void dump_config(const ExperimentConfig& cfg) {
    std::map<std::string, std::string> kv;
    kv["command"] = cfg.command;
    kv["dataset"] = cfg.dataset;
    kv["data_dir"] = cfg.data_dir;
    kv["out"] = cfg.out_dir;
    kv["seed"] = std::to_string(cfg.seed);
    kv["hw"] = std::to_string(cfg.hw);
    kv["channels"] = std::to_string(cfg.channels);
    kv["classes"] = std::to_string(cfg.classes);
    kv["width_scale"] = fmt_g(cfg.width_scale);
    kv["dropout"] = fmt_g(cfg.dropout);
    kv["variant"] = cfg.variant;
    kv["alpha"] = fmt_g(cfg.alpha);
    kv["cg"] = fmt_g(cfg.cg);
    kv["k"] = std::to_string(cfg.k);
    kv["lr_f"] = fmt_g(cfg.lr_f);
    kv["lr_g"] = fmt_g(cfg.lr_g);
    kv["batch"] = std::to_string(cfg.batch);
    kv["epochs"] = std::to_string(cfg.epochs);
    kv["patience"] = std::to_string(cfg.patience);
    kv["epsilon"] = fmt_g(cfg.epsilon);
    kv["eps"] = join(cfg.eps);
    kv["cg_grid"] = join(cfg.cg_grid);
    kv["repeats"] = std::to_string(cfg.repeats);
    kv["methods"] = cfg.methods;
    kv["eps_linf"] = fmt_g(cfg.eps_linf);
    kv["eps_l2"] = fmt_g(cfg.eps_l2);
    kv["eps_random"] = fmt_g(cfg.eps_random);
    kv["n_train"] = std::to_string(cfg.n_train);
    kv["n_val"] = std::to_string(cfg.n_val);
    kv["n_test"] = std::to_string(cfg.n_test);
    kv["noise"] = fmt_g(cfg.noise);
    kv["synth_kind"] = cfg.synth_kind;
    kv["mode"] = cfg.mode;
    kv["attack"] = cfg.attack;
    kv["ckpt"] = cfg.ckpt;
    kv["ckpt_every"] = std::to_string(cfg.ckpt_every);
    kv["full"] = cfg.full ? "true" : "false";
    kv["timings"] = cfg.timings ? "true" : "false";
    for (const auto& [k, v] : kv) std::cout << k << " = " << v << "\n";
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

TrainOutcome train_model(const ExperimentConfig& cfg, const PreparedData& data,
                         bool with_cadence = false) {
    TrainConfig tc = train_config(cfg);
    if (with_cadence && cfg.ckpt_every > 0) {
        ensure_out_dir(cfg.out_dir);
        tc.ckpt_every = cfg.ckpt_every;
        tc.ckpt_dir = cfg.out_dir;
    }
    if (tc.variant == Variant::gat) {
        Network F0 = build_classifier(model_config(cfg));
        ModelConfig gc = model_config(cfg);
        gc.dropout_rate = 0.0;
        Network G0 = build_generator(gc);
        return train_gat(F0, G0, data.splits, tc);
    }
    Network F0 = build_classifier(model_config(cfg));
    return train_supervised(F0, data.splits, tc);
}

int cmd_train(const ExperimentConfig& cfg) {
    PreparedData data = prepare_data(cfg);
    TrainOutcome res = train_model(cfg, data, /*with_cadence=*/true);
    ensure_out_dir(cfg.out_dir);
    write_history_csv(cfg.out_dir + "/history.csv", res.history, cfg.timings);

    Chart chart;
    chart.title = "training (" + cfg.variant + ")";
    chart.x_label = "epoch";
    chart.y_label = "value";
    ChartSeries train_s{"train_loss", {}, {}, {}};
    ChartSeries val_s{"val_loss", {}, {}, {}};
    ChartSeries acc_s{"val_acc", {}, {}, {}};
    for (const EpochRecord& r : res.history.epochs) {
        train_s.x.push_back(r.epoch);
        train_s.y.push_back(r.train_loss);
        val_s.x.push_back(r.epoch);
        val_s.y.push_back(r.val_loss);
        acc_s.x.push_back(r.epoch);
        acc_s.y.push_back(r.val_acc);
    }
    chart.series = {train_s, val_s, acc_s};
    write_line_chart(cfg.out_dir + "/history.svg", chart);

    save_checkpoint(cfg.out_dir + "/model.ckpt", res.classifier);
    if (train_config(cfg).variant == Variant::gat) {
        save_checkpoint(cfg.out_dir + "/generator.ckpt", res.generator);
    }
    const double test_acc = eval_accuracy(res.classifier, data.test);
    std::cout << "train " << cfg.variant << ": epochs=" << res.history.epochs.size()
              << " best_epoch=" << res.best_epoch << " val_loss=" << fmt_g(res.best_val_loss)
              << " test_acc=" << fmt_g(test_acc) << (res.diverged ? " DIVERGED" : "") << "\n";
    return res.diverged ? 1 : 0;
}

int cmd_curve(const ExperimentConfig& cfg) {
    PreparedData data = prepare_data(cfg);
    Network eval_model = cfg.ckpt.empty() ? train_model(cfg, data).classifier
                                          : load_checkpoint(cfg.ckpt);
    ensure_out_dir(cfg.out_dir);

    Network source = eval_model;
    if (cfg.mode == "indirect") {
        // independently seeded baseline trained by the same recipe
        ExperimentConfig src_cfg = cfg;
        src_cfg.variant = "baseline";
        src_cfg.seed = mix_seed(cfg.seed, "indirect-source");
        Network F0 = build_classifier(model_config(src_cfg));
        TrainConfig tc = train_config(src_cfg);
        source = train_supervised(F0, data.splits, tc).classifier;
        save_checkpoint(cfg.out_dir + "/source.ckpt", source);
    }

    const PerturbMethod attack =
        cfg.attack == "fgsm" ? PerturbMethod::fgsm : PerturbMethod::fg_l2;
    RobustnessCurve curve = robustness_curve(eval_model, source, attack, cfg.eps, data.test);

    const std::string stem = "curve_" + cfg.mode + "_" + cfg.attack;
    std::vector<std::string> rows;
    for (std::size_t i = 0; i < curve.epsilons.size(); ++i) {
        rows.push_back(fmt_g(curve.epsilons[i]) + "," + fmt_g(curve.accuracy[i]));
    }
    write_csv(cfg.out_dir + "/" + stem + ".csv", "epsilon,accuracy", rows);

    Chart chart;
    chart.title = cfg.mode + " " + cfg.attack + " attack (" + cfg.variant + ")";
    chart.x_label = "epsilon";
    chart.y_label = "accuracy";
    chart.series = {{cfg.variant, curve.epsilons, curve.accuracy, {}}};
    write_line_chart(cfg.out_dir + "/" + stem + ".svg", chart);

    save_checkpoint(cfg.out_dir + "/model.ckpt", eval_model);
    std::cout << "curve " << cfg.mode << " " << cfg.attack << ": clean=" << fmt_g(curve.accuracy[0])
              << " points=" << curve.epsilons.size() << "\n";
    return 0;
}

int cmd_attack_compare(const ExperimentConfig& cfg) {
    PreparedData data = prepare_data(cfg);
    Network baseline;
    if (cfg.ckpt.empty()) {
        ExperimentConfig base_cfg = cfg;
        base_cfg.variant = "baseline";
        baseline = train_model(base_cfg, data).classifier;
    } else {
        baseline = load_checkpoint(cfg.ckpt);
    }
    ensure_out_dir(cfg.out_dir);
    save_checkpoint(cfg.out_dir + "/model.ckpt", baseline);

    TrainConfig gen_cfg = train_config(cfg);
    std::vector<AttackComparePoint> table =
        attack_compare(baseline, data.splits, data.test, cfg.cg_grid, cfg.eps, gen_cfg);

    std::vector<std::string> rows;
    for (const AttackComparePoint& p : table) {
        rows.push_back(p.method + "," + fmt_g(p.power) + "," + fmt_g(p.accuracy) + "," +
                       fmt_g(p.c_g));
    }
    write_csv(cfg.out_dir + "/attack_compare.csv", "method,power,accuracy,c_g", rows);

    Chart chart;
    chart.title = "attack strength at matched power";
    chart.x_label = "mean perturbation power (L2)";
    chart.y_label = "accuracy";
    for (const char* method : {"gat", "fg_l2", "fgsm"}) {
        ChartSeries s{method, {}, {}, {}};
        std::vector<std::pair<double, double>> pts;
        for (const AttackComparePoint& p : table) {
            if (p.method == method) pts.emplace_back(p.power, p.accuracy);
        }
        std::sort(pts.begin(), pts.end());
        for (const auto& [x, y] : pts) {
            s.x.push_back(x);
            s.y.push_back(y);
        }
        chart.series.push_back(s);
    }
    write_line_chart(cfg.out_dir + "/attack_compare.svg", chart);
    std::cout << "attack-compare: " << table.size() << " points over " << cfg.cg_grid.size()
              << " c_g values\n";
    return 0;
}

int cmd_regtable(const ExperimentConfig& cfg) {
    PreparedData data = prepare_data(cfg);
    std::vector<RegMethod> methods;
    {
        std::stringstream ss(cfg.methods);
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (!item.empty()) methods.push_back(reg_method_from_string(item));
        }
    }
    if (methods.empty()) throw UsageError("flag --methods: no methods given");

    RegOptions opts;
    opts.eps_linf = cfg.eps_linf;
    opts.eps_l2 = cfg.eps_l2;
    opts.eps_random = cfg.eps_random;
    opts.dropout_rate = cfg.dropout;
    opts.threads = pick_threads(cfg);

    std::vector<RegRow> rows =
        regtable(data.splits, data.test, methods, cfg.repeats, model_config(cfg),
                 train_config(cfg), opts);
    ensure_out_dir(cfg.out_dir);
    std::vector<std::string> csv_rows;
    for (const RegRow& r : rows) {
        csv_rows.push_back(r.method + "," + fmt_g(r.mean_acc) + "," + fmt_g(r.std_acc) + "," +
                           std::to_string(r.repeats) + "," + std::to_string(r.excluded));
    }
    write_csv(cfg.out_dir + "/regtable.csv", "method,mean_accuracy,std,repeats,excluded",
              csv_rows);

    Chart chart;
    chart.title = "test accuracy by method (" + std::to_string(cfg.repeats) + " repeats)";
    chart.x_label = "method index";
    chart.y_label = "test accuracy";
    ChartSeries s{"mean_accuracy", {}, {}, {}};
    for (std::size_t i = 0; i < rows.size(); ++i) {
        s.x.push_back(static_cast<double>(i));
        s.y.push_back(rows[i].mean_acc);
        s.yerr.push_back(rows[i].std_acc);
    }
    chart.series = {s};
    write_line_chart(cfg.out_dir + "/regtable.svg", chart);

    for (const RegRow& r : rows) {
        std::cout << "regtable " << r.method << ": " << fmt_g(r.mean_acc) << " +/- "
                  << fmt_g(r.std_acc) << " (n=" << r.repeats;
        if (r.excluded > 0) std::cout << ", excluded=" << r.excluded;
        std::cout << ")\n";
    }
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    try {
        ExperimentConfig cfg = resolve_cli_config(args);
        if (cfg.command == "help") {
            std::cout << kUsage;
            return 0;
        }
        if (cfg.dry_run) {
            dump_config(cfg);
            return 0;
        }
        if (cfg.command == "train") return cmd_train(cfg);
        if (cfg.command == "curve") return cmd_curve(cfg);
        if (cfg.command == "attack-compare") return cmd_attack_compare(cfg);
        if (cfg.command == "regtable") return cmd_regtable(cfg);
        throw UsageError("unknown command '" + cfg.command + "'");
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

int run_cli(int argc, const char* const* argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run_cli(args);
}

}  // namespace gradforge
