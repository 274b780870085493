#include "gradforge/model.hpp"

#include <cmath>
#include <utility>

namespace gradforge {

Tensor xavier_init(int fan_in, int fan_out, const Shape& shape, Rng& rng) {
    if (fan_in < 1 || fan_out < 1) {
        throw ValueError("xavier_init: fans must be >= 1, got " + std::to_string(fan_in) + "/" +
                         std::to_string(fan_out));
    }
    const double bound = std::sqrt(6.0 / (static_cast<double>(fan_in) + fan_out));
    Tensor t = Tensor::zeros(shape);
    for (std::int64_t i = 0; i < t.size(); ++i) t.at(i) = rng.uniform(-bound, bound);
    return t;
}

Tensor dropout(const Tensor& x, double rate, Rng* rng, Mode mode) {
    if (rate < 0.0 || rate >= 1.0) {
        throw ValueError("dropout: rate must be in [0,1), got " + std::to_string(rate));
    }
    if (mode == Mode::eval || rate == 0.0) return x;
    if (rng == nullptr) throw ValueError("dropout: train mode requires an rng");
    const double keep = 1.0 - rate;
    const double scale_up = 1.0 / keep;
    auto mask = std::make_shared<std::vector<double>>(static_cast<std::size_t>(x.size()));
    std::vector<double> out(static_cast<std::size_t>(x.size()));
    const double* px = x.data->data();
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double m = rng->uniform() < rate ? 0.0 : scale_up;
        (*mask)[i] = m;
        out[i] = px[i] * m;
    }
    Tensor r(x.shape, std::move(out));
    if (x.attached()) {
        Tape& tape = *x.tape;
        int xn = x.node;
        r.tape = &tape;
        r.node = tape.add_node("dropout", r, {xn},
                               [xn, mask](Tape& t, const std::vector<double>& g) {
            auto& gx = t.grad_buffer(xn);
            for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * (*mask)[i];
        });
    }
    return r;
}

namespace {

int scaled_channels(int base, double width_scale) {
    const int c = static_cast<int>(std::lround(base * width_scale));
    return c < 1 ? 1 : c;
}

void validate_config(const ModelConfig& cfg) {
    if (cfg.input_hw < 1) throw ValueError("model config: input_hw must be >= 1");
    if (cfg.input_channels < 1) throw ValueError("model config: input_channels must be >= 1");
    if (cfg.width_scale <= 0.0) throw ValueError("model config: width_scale must be > 0");
    if (cfg.dropout_rate < 0.0 || cfg.dropout_rate >= 1.0) {
        throw ValueError("model config: dropout_rate must be in [0,1)");
    }
}

}  // namespace

Network::Network(std::vector<LayerSpec> layers, ModelConfig cfg, Rng& rng,
                 const std::string& name_prefix)
    : layers_(std::move(layers)), cfg_(cfg) {
    int in_c = cfg_.input_channels;
    int conv_idx = 0;
    for (const LayerSpec& spec : layers_) {
        if (spec.kind != LayerKind::conv3x3 && spec.kind != LayerKind::conv1x1) continue;
        const int k = spec.kind == LayerKind::conv3x3 ? 3 : 1;
        if (spec.out_channels < 1) {
            throw ValueError("conv layer needs out_channels >= 1");
        }
        if (spec.stride != 1 && spec.stride != 2) {
            throw ValueError("conv layer stride must be 1 or 2");
        }
        ConvParam p;
        p.name = name_prefix + ".conv" + std::to_string(conv_idx + 1);
        const int fan_in = k * k * in_c;
        const int fan_out = k * k * spec.out_channels;
        p.w = xavier_init(fan_in, fan_out, {k, k, in_c, spec.out_channels}, rng);
        p.b = Tensor::zeros({spec.out_channels});
        params_.push_back(std::move(p));
        in_c = spec.out_channels;
        ++conv_idx;
    }
}

Network::Network(std::vector<LayerSpec> layers, ModelConfig cfg, std::vector<ConvParam> params)
    : layers_(std::move(layers)), params_(std::move(params)), cfg_(cfg) {}

Tensor Network::forward(const Tensor& x, const ForwardOptions& opt) const {
    if (x.shape.size() != 4) {
        throw ShapeError("forward: input must be [N,H,W,C], got " + shape_str(x.shape));
    }
    if (x.shape[3] != cfg_.input_channels) {
        throw ShapeError("forward: expected " + std::to_string(cfg_.input_channels) +
                         " channels, got input " + shape_str(x.shape));
    }
    if (x.shape[1] != cfg_.input_hw || x.shape[2] != cfg_.input_hw) {
        throw ShapeError("forward: expected " + std::to_string(cfg_.input_hw) + "x" +
                         std::to_string(cfg_.input_hw) + " input, got " + shape_str(x.shape));
    }
    const Mode mode = opt.mode.value_or(mode_);
    Tensor h = x;
    std::size_t conv_idx = 0;
    for (const LayerSpec& spec : layers_) {
        switch (spec.kind) {
            case LayerKind::conv3x3:
            case LayerKind::conv1x1: {
                const ConvParam& p = params_[conv_idx++];
                Tensor w = p.w;
                Tensor b = p.b;
                if (opt.tape != nullptr && opt.track_params) {
                    w = opt.tape->watch(w);
                    b = opt.tape->watch(b);
                }
                h = conv2d(h, w, b, spec.stride);
                break;
            }
            case LayerKind::relu:
                h = relu(h);
                break;
            case LayerKind::tanh:
                h = tanh(h);
                break;
            case LayerKind::global_avg_pool:
                h = global_avg_pool(h);
                break;
            case LayerKind::softmax:
                h = softmax(h);
                break;
            case LayerKind::dropout:
                h = dropout(h, spec.rate, opt.rng, mode);
                break;
        }
    }
    return h;
}

std::int64_t Network::param_count() const {
    std::int64_t n = 0;
    for (const ConvParam& p : params_) n += p.w.size() + p.b.size();
    return n;
}

Network Network::clone() const {
    std::vector<ConvParam> copies;
    copies.reserve(params_.size());
    for (const ConvParam& p : params_) copies.push_back({p.name, p.w.clone(), p.b.clone()});
    Network net(layers_, cfg_, std::move(copies));
    net.mode_ = mode_;
    return net;
}

Network build_classifier(const ModelConfig& cfg) {
    validate_config(cfg);
    if (cfg.input_hw % 4 != 0) {
        throw ValueError("build_classifier: input_hw must be divisible by 4, got " +
                         std::to_string(cfg.input_hw));
    }
    if (cfg.num_classes < 2) {
        throw ValueError("build_classifier: num_classes must be >= 2, got " +
                         std::to_string(cfg.num_classes));
    }
    const int c48 = scaled_channels(48, cfg.width_scale);
    const int c96 = scaled_channels(96, cfg.width_scale);
    std::vector<LayerSpec> layers;
    auto conv = [&layers](LayerKind k, int out_c, int stride) {
        layers.push_back({k, out_c, stride, 0.0});
        layers.push_back({LayerKind::relu});
    };
    conv(LayerKind::conv3x3, c48, 1);
    conv(LayerKind::conv3x3, c48, 2);
    if (cfg.dropout_rate > 0.0) layers.push_back({LayerKind::dropout, 0, 1, cfg.dropout_rate});
    conv(LayerKind::conv3x3, c96, 1);
    conv(LayerKind::conv3x3, c96, 2);
    if (cfg.dropout_rate > 0.0) layers.push_back({LayerKind::dropout, 0, 1, cfg.dropout_rate});
    conv(LayerKind::conv3x3, c96, 1);
    conv(LayerKind::conv1x1, c96, 1);
    layers.push_back({LayerKind::conv1x1, cfg.num_classes, 1, 0.0});
    layers.push_back({LayerKind::global_avg_pool});
    layers.push_back({LayerKind::softmax});
    Rng rng(mix_seed(cfg.seed, "classifier-init"));
    return Network(std::move(layers), cfg, rng, "clf");
}

Network build_generator(const ModelConfig& cfg) {
    validate_config(cfg);
    const int c48 = scaled_channels(48, cfg.width_scale);
    std::vector<LayerSpec> layers;
    for (int i = 0; i < 6; ++i) {
        layers.push_back({LayerKind::conv3x3, c48, 1, 0.0});
        layers.push_back({LayerKind::relu});
    }
    layers.push_back({LayerKind::conv1x1, c48, 1, 0.0});
    layers.push_back({LayerKind::relu});
    layers.push_back({LayerKind::conv1x1, cfg.input_channels, 1, 0.0});
    layers.push_back({LayerKind::tanh});
    Rng rng(mix_seed(cfg.seed, "generator-init"));
    return Network(std::move(layers), cfg, rng, "gen");
}

Tensor forward(const Network& net, const Tensor& x, const ForwardOptions& opt) {
    return net.forward(x, opt);
}

std::vector<int> predict_classes(const Network& net, const Tensor& x) {
    ForwardOptions opt;
    opt.mode = Mode::eval;
    Tensor probs = net.forward(x, opt);
    if (probs.shape.size() != 2) {
        throw ShapeError("predict_classes: network output must be [N,K], got " +
                         shape_str(probs.shape));
    }
    const int N = probs.shape[0], K = probs.shape[1];
    std::vector<int> out(static_cast<std::size_t>(N));
    for (int n = 0; n < N; ++n) {
        const double* row = probs.data->data() + static_cast<std::int64_t>(n) * K;
        int best = 0;
        for (int k = 1; k < K; ++k) {
            if (row[k] > row[best]) best = k;
        }
        out[static_cast<std::size_t>(n)] = best;
    }
    return out;
}

}  // namespace gradforge
