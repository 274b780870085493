#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gradforge/rng.hpp"
#include "gradforge/tensor.hpp"

namespace gradforge {

enum class LayerKind { conv3x3, conv1x1, relu, tanh, global_avg_pool, softmax, dropout };

struct LayerSpec {
    LayerKind kind;
    int out_channels = 0;  // conv only
    int stride = 1;        // conv only
    double rate = 0.0;     // dropout only
};

enum class Mode { train, eval };

struct ModelConfig {
    int input_hw = 32;
    int input_channels = 3;
    int num_classes = 10;
    double width_scale = 1.0;
    std::uint64_t seed = 0;
    double dropout_rate = 0.0;  // 0 disables the dropout insertions entirely
};

struct ConvParam {
    std::string name;
    Tensor w;  // [kh,kw,Cin,Cout]
    Tensor b;  // [Cout]
};

// Per-call forward controls. `track_params` watches every conv parameter onto
// `tape` so backward reaches them; leaving it off freezes the network inside a
// larger graph (gradients still flow through to its input).
struct ForwardOptions {
    Tape* tape = nullptr;
    bool track_params = false;
    std::optional<Mode> mode;  // overrides the network's stored mode
    Rng* rng = nullptr;        // required for train-mode dropout
};

// Ordered layer stack with one weight/bias pair per conv layer. Copies share
// parameter buffers; clone() makes them independent.
class Network {
public:
    Network() = default;
    Network(std::vector<LayerSpec> layers, ModelConfig cfg, Rng& rng,
            const std::string& name_prefix);
    Network(std::vector<LayerSpec> layers, ModelConfig cfg, std::vector<ConvParam> params);

    Tensor forward(const Tensor& x, const ForwardOptions& opt = {}) const;

    Mode mode() const { return mode_; }
    void set_mode(Mode m) { mode_ = m; }

    std::vector<ConvParam>& params() { return params_; }
    const std::vector<ConvParam>& params() const { return params_; }
    const std::vector<LayerSpec>& layers() const { return layers_; }
    const ModelConfig& config() const { return cfg_; }

    std::int64_t param_count() const;
    Network clone() const;

private:
    std::vector<LayerSpec> layers_;
    std::vector<ConvParam> params_;
    ModelConfig cfg_;
    Mode mode_ = Mode::train;
};

// Uniform draw in [-sqrt(6/(fan_in+fan_out)), +sqrt(6/(fan_in+fan_out))].
Tensor xavier_init(int fan_in, int fan_out, const Shape& shape, Rng& rng);

// Inverted dropout: train mode zeroes with probability `rate` and scales
// survivors by 1/(1-rate); eval mode is the identity.
Tensor dropout(const Tensor& x, double rate, Rng* rng, Mode mode);

// Reference all-convolutional classifier
//   conv3x3(48s) conv3x3(48s,s2) conv3x3(96s) conv3x3(96s,s2) conv3x3(96s)
//   conv1x1(96s) conv1x1(K) gap softmax      (48s = round(48*width_scale))
// with relu between convs. cfg.dropout_rate > 0 additionally inserts dropout
// after each downsampling conv's relu.
Network build_classifier(const ModelConfig& cfg);

// Perturbation generator: six conv3x3(48s) + relu, conv1x1(48s) + relu,
// conv1x1(C), tanh. Shape-preserving by construction.
Network build_generator(const ModelConfig& cfg);

Tensor forward(const Network& net, const Tensor& x, const ForwardOptions& opt = {});

// Class predictions (argmax of eval-mode probabilities, ties to lowest index).
std::vector<int> predict_classes(const Network& net, const Tensor& x);

}  // namespace gradforge
