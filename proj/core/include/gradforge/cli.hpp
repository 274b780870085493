#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace gradforge {

// Fully resolved run configuration. Resolution order: desk-scale defaults,
// then the --full preset, then the --config file, then explicit flags.
struct ExperimentConfig {
    std::string command;

    std::string dataset = "synth";  // synth | cifar10 | cifar100
    std::string data_dir;
    std::string out_dir = "out";
    std::uint64_t seed = 1;

    // model
    int hw = 16;
    int channels = 3;
    int classes = 10;
    double width_scale = 0.25;
    double dropout = 0.2;  // rate used by the dropout regtable rows

    // training
    std::string variant = "baseline";
    double alpha = 0.5;
    double cg = 0.1;
    int k = 1;
    double lr_f = 1e-3;
    double lr_g = 1e-3;  // desk-scale default; --full restores 1e-6
    int batch = 50;
    int epochs = 30;
    int patience = 8;
    double epsilon = 1.0;

    // experiment grids
    std::vector<double> eps = {0.0, 0.5, 1.0, 2.0, 4.0};
    std::vector<double> cg_grid = {5.0, 1.0, 0.1};
    int repeats = 5;
    std::string methods = "baseline,dropout,random,fg_linf,fg_l2,gat,dropout_gat";
    double eps_linf = 0.05;
    double eps_l2 = 1.0;
    double eps_random = 1.0;

    // synth data
    int n_train = 2000;
    int n_val = 500;
    int n_test = 2000;
    double noise = 0.5;
    std::string synth_kind = "gaussian_blobs";

    // curve
    std::string mode = "direct";  // direct | indirect
    std::string attack = "fg_l2";

    std::string ckpt;  // reuse a trained model instead of training one
    int ckpt_every = 0;  // periodic checkpoints every N epochs (0 = final only)
    bool full = false;
    bool timings = false;
    bool dry_run = false;
    int threads = 0;  // 0: pick from hardware
};

// Parses command + flags (+ optional config file); throws UsageError on
// unknown flags, malformed values, or invalid combinations.
ExperimentConfig resolve_cli_config(const std::vector<std::string>& args);

// Entry point behind the gradforge binary. Returns 0 on success, 2 on usage
// errors (with a one-line diagnostic naming the flag), 1 on runtime failure.
int run_cli(const std::vector<std::string>& args);
int run_cli(int argc, const char* const* argv);

}  // namespace gradforge
