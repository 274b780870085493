#include "gradforge/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "gradforge/rng.hpp"

namespace gradforge {

namespace {

constexpr int kCifarHw = 32;
constexpr int kCifarChannels = 3;
constexpr int kCifarPixels = kCifarHw * kCifarHw * kCifarChannels;

void validate_dataset(const Dataset& ds) {
    if (ds.images.shape.size() != 4) {
        throw ValueError("dataset " + ds.name + ": images must be [N,H,W,C]");
    }
    if (ds.n() != static_cast<int>(ds.labels.size())) {
        throw ValueError("dataset " + ds.name + ": " + std::to_string(ds.n()) + " images vs " +
                         std::to_string(ds.labels.size()) + " labels");
    }
}

Dataset concat(const std::vector<Dataset>& parts, const std::string& name) {
    int total = 0;
    for (const Dataset& p : parts) total += p.n();
    Dataset out;
    out.name = name;
    out.num_classes = parts.front().num_classes;
    Shape shape = parts.front().images.shape;
    shape[0] = total;
    out.images = Tensor::zeros(shape);
    std::int64_t off = 0;
    for (const Dataset& p : parts) {
        std::copy(p.images.data->begin(), p.images.data->end(), out.images.data->begin() + off);
        off += p.images.size();
        out.labels.insert(out.labels.end(), p.labels.begin(), p.labels.end());
    }
    return out;
}

}  // namespace

Dataset load_cifar(const std::string& path, CifarVariant variant) {
    const int label_bytes = variant == CifarVariant::cifar10 ? 1 : 2;
    const int record = label_bytes + kCifarPixels;
    const int num_classes = variant == CifarVariant::cifar10 ? 10 : 100;

    std::error_code ec;
    const auto fsize = std::filesystem::file_size(path, ec);
    if (ec) throw IoError("cannot stat " + path + ": " + ec.message());
    if (fsize == 0 || fsize % static_cast<std::uintmax_t>(record) != 0) {
        throw IoError(path + ": size " + std::to_string(fsize) +
                      " is not a multiple of the record size " + std::to_string(record));
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::vector<unsigned char> bytes(static_cast<std::size_t>(fsize));
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(fsize));
    if (!in) throw IoError("read failed for " + path);

    const int n = static_cast<int>(fsize / static_cast<std::uintmax_t>(record));
    Dataset ds;
    ds.name = path;
    ds.num_classes = num_classes;
    ds.images = Tensor::zeros({n, kCifarHw, kCifarHw, kCifarChannels});
    ds.labels.resize(static_cast<std::size_t>(n));
    double* px = ds.images.data->data();
    for (int i = 0; i < n; ++i) {
        const unsigned char* rec = bytes.data() + static_cast<std::int64_t>(i) * record;
        const int label = rec[label_bytes - 1];  // fine label for cifar100
        if (label >= num_classes) {
            throw IoError(path + ": record " + std::to_string(i) + " has label " +
                          std::to_string(label) + " >= " + std::to_string(num_classes));
        }
        ds.labels[static_cast<std::size_t>(i)] = label;
        const unsigned char* pix = rec + label_bytes;
        double* img = px + static_cast<std::int64_t>(i) * kCifarPixels;
        // channel-planar source -> HWC destination
        for (int c = 0; c < kCifarChannels; ++c) {
            const unsigned char* plane = pix + c * kCifarHw * kCifarHw;
            for (int s = 0; s < kCifarHw * kCifarHw; ++s) {
                img[static_cast<std::int64_t>(s) * kCifarChannels + c] = plane[s] / 255.0;
            }
        }
    }
    return ds;
}

Dataset load_cifar_train(const std::string& dir, CifarVariant variant) {
    std::vector<Dataset> parts;
    if (variant == CifarVariant::cifar10) {
        for (int i = 1; i <= 5; ++i) {
            parts.push_back(load_cifar(dir + "/data_batch_" + std::to_string(i) + ".bin", variant));
        }
    } else {
        parts.push_back(load_cifar(dir + "/train.bin", variant));
    }
    return concat(parts, "cifar-train");
}

Dataset load_cifar_test(const std::string& dir, CifarVariant variant) {
    const std::string file =
        variant == CifarVariant::cifar10 ? dir + "/test_batch.bin" : dir + "/test.bin";
    Dataset ds = load_cifar(file, variant);
    ds.name = "cifar-test";
    return ds;
}

std::vector<unsigned char> cifar_encode(const Dataset& ds, CifarVariant variant) {
    validate_dataset(ds);
    if (ds.h() != kCifarHw || ds.w() != kCifarHw || ds.c() != kCifarChannels) {
        throw ValueError("cifar_encode: dataset is not 32x32x3");
    }
    const int label_bytes = variant == CifarVariant::cifar10 ? 1 : 2;
    const int record = label_bytes + kCifarPixels;
    std::vector<unsigned char> out(static_cast<std::size_t>(ds.n()) * record);
    const double* px = ds.images.data->data();
    for (int i = 0; i < ds.n(); ++i) {
        unsigned char* rec = out.data() + static_cast<std::int64_t>(i) * record;
        const int label = ds.labels[static_cast<std::size_t>(i)];
        if (variant == CifarVariant::cifar100) {
            rec[0] = static_cast<unsigned char>(label / 5);  // placeholder coarse byte
            rec[1] = static_cast<unsigned char>(label);
        } else {
            rec[0] = static_cast<unsigned char>(label);
        }
        const double* img = px + static_cast<std::int64_t>(i) * kCifarPixels;
        unsigned char* pix = rec + label_bytes;
        for (int c = 0; c < kCifarChannels; ++c) {
            unsigned char* plane = pix + c * kCifarHw * kCifarHw;
            for (int s = 0; s < kCifarHw * kCifarHw; ++s) {
                plane[s] = static_cast<unsigned char>(
                    std::llround(img[static_cast<std::int64_t>(s) * kCifarChannels + c] * 255.0));
            }
        }
    }
    return out;
}

std::pair<Dataset, Dataset> split(const Dataset& ds, const SplitSpec& spec) {
    validate_dataset(ds);
    if (spec.n_train < 0 || spec.n_val < 0 || spec.n_train + spec.n_val > ds.n()) {
        throw ValueError("split: " + std::to_string(spec.n_train) + "+" +
                         std::to_string(spec.n_val) + " exceeds dataset size " +
                         std::to_string(ds.n()));
    }
    std::vector<int> perm(static_cast<std::size_t>(ds.n()));
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(mix_seed(spec.seed, "split"));
    shuffle(perm, rng);

    auto build = [&ds](const std::vector<int>& idx, const std::string& suffix) {
        auto [images, labels] = gather(ds, idx);
        Dataset out;
        out.images = std::move(images);
        out.labels = std::move(labels);
        out.num_classes = ds.num_classes;
        out.name = ds.name + suffix;
        return out;
    };
    std::vector<int> train_idx(perm.begin(), perm.begin() + spec.n_train);
    std::vector<int> val_idx(perm.begin() + spec.n_train,
                             perm.begin() + spec.n_train + spec.n_val);
    return {build(train_idx, "-train"), build(val_idx, "-val")};
}

namespace {

// Smooth per-class template: a few seeded gaussian bumps over a mid-grey base,
// bump amplitudes drawn in [-amplitude, +amplitude] per channel.
Tensor blob_template(int k, int hw, int channels, double amplitude, std::uint64_t seed) {
    Rng rng(mix_seed(seed, "blob-template", static_cast<std::uint64_t>(k)));
    Tensor t = Tensor::full({hw, hw, channels}, 0.5);
    const int bumps = 3;
    for (int b = 0; b < bumps; ++b) {
        const double cy = rng.uniform(0.15, 0.85) * hw;
        const double cx = rng.uniform(0.15, 0.85) * hw;
        const double sigma = rng.uniform(hw / 6.0, hw / 3.0);
        std::vector<double> amp(static_cast<std::size_t>(channels));
        for (int c = 0; c < channels; ++c) {
            amp[static_cast<std::size_t>(c)] = rng.uniform(-amplitude, amplitude);
        }
        for (int y = 0; y < hw; ++y) {
            for (int x = 0; x < hw; ++x) {
                const double d2 = (y - cy) * (y - cy) + (x - cx) * (x - cx);
                const double g = std::exp(-d2 / (2.0 * sigma * sigma));
                for (int c = 0; c < channels; ++c) {
                    t.at((static_cast<std::int64_t>(y) * hw + x) * channels + c) +=
                        amp[static_cast<std::size_t>(c)] * g;
                }
            }
        }
    }
    for (std::int64_t i = 0; i < t.size(); ++i) t.at(i) = std::clamp(t.at(i), 0.0, 1.0);
    return t;
}

// Ring of class-dependent radius on channel k%C.
Tensor ring_template(int k, int hw, int channels, int num_classes) {
    Tensor t = Tensor::full({hw, hw, channels}, 0.3);
    const double center = (hw - 1) / 2.0;
    const double radius = (k + 1) * (hw / 2.0 - 1.0) / num_classes;
    const double width = std::max(1.0, hw / 10.0);
    for (int y = 0; y < hw; ++y) {
        for (int x = 0; x < hw; ++x) {
            const double r = std::sqrt((y - center) * (y - center) + (x - center) * (x - center));
            const double v = 0.6 * std::exp(-(r - radius) * (r - radius) / (2.0 * width * width));
            t.at((static_cast<std::int64_t>(y) * hw + x) * channels + k % channels) += v;
        }
    }
    for (std::int64_t i = 0; i < t.size(); ++i) t.at(i) = std::clamp(t.at(i), 0.0, 1.0);
    return t;
}

}  // namespace

Dataset synth_dataset(const SynthSpec& spec) {
    if (spec.n < spec.num_classes) {
        throw ValueError("synth_dataset: n must be >= num_classes");
    }
    if (spec.hw < 2 || spec.channels < 1 || spec.num_classes < 2) {
        throw ValueError("synth_dataset: invalid dimensions");
    }
    if (spec.amplitude <= 0.0) throw ValueError("synth_dataset: amplitude must be > 0");
    std::vector<Tensor> templates;
    for (int k = 0; k < spec.num_classes; ++k) {
        templates.push_back(spec.kind == SynthKind::gaussian_blobs
                                ? blob_template(k, spec.hw, spec.channels, spec.amplitude,
                                                spec.seed)
                                : ring_template(k, spec.hw, spec.channels, spec.num_classes));
    }
    Dataset ds;
    ds.name = spec.kind == SynthKind::gaussian_blobs ? "synth-blobs" : "synth-ring";
    ds.num_classes = spec.num_classes;
    ds.images = Tensor::zeros({spec.n, spec.hw, spec.hw, spec.channels});
    ds.labels.resize(static_cast<std::size_t>(spec.n));

    // round-robin labels, then one seeded shuffle of the sample order
    std::vector<int> order(static_cast<std::size_t>(spec.n));
    std::iota(order.begin(), order.end(), 0);
    Rng order_rng(mix_seed(spec.seed, "sample-order"));
    shuffle(order, order_rng);

    Rng noise_rng(mix_seed(spec.seed, "sample-noise"));
    const std::int64_t per_image = static_cast<std::int64_t>(spec.hw) * spec.hw * spec.channels;
    for (int i = 0; i < spec.n; ++i) {
        const int slot = order[static_cast<std::size_t>(i)];
        const int k = i % spec.num_classes;
        ds.labels[static_cast<std::size_t>(slot)] = k;
        double* img = ds.images.data->data() + static_cast<std::int64_t>(slot) * per_image;
        const Tensor& tmpl = templates[static_cast<std::size_t>(k)];
        for (std::int64_t j = 0; j < per_image; ++j) {
            const double v = tmpl.at(j) + spec.noise * noise_rng.normal();
            img[j] = std::clamp(v, 0.0, 1.0);
        }
    }
    return ds;
}

std::vector<std::vector<int>> minibatches(int n, int m, std::uint64_t seed, int epoch) {
    if (m < 1 || m > n) {
        throw ValueError("minibatches: batch size " + std::to_string(m) +
                         " invalid for dataset of " + std::to_string(n));
    }
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(mix_seed(seed, "minibatch-epoch", static_cast<std::uint64_t>(epoch)));
    shuffle(perm, rng);
    std::vector<std::vector<int>> out;
    for (int start = 0; start < n; start += m) {
        const int end = std::min(n, start + m);
        out.emplace_back(perm.begin() + start, perm.begin() + end);
    }
    return out;
}

std::vector<std::vector<int>> minibatches(const Dataset& ds, int m, std::uint64_t seed, int epoch) {
    return minibatches(ds.n(), m, seed, epoch);
}

std::pair<Tensor, std::vector<int>> gather(const Dataset& ds, const std::vector<int>& idx) {
    validate_dataset(ds);
    const std::int64_t per_image =
        static_cast<std::int64_t>(ds.h()) * ds.w() * ds.c();
    Shape shape = ds.images.shape;
    shape[0] = static_cast<int>(idx.size());
    Tensor images = Tensor::zeros(shape);
    std::vector<int> labels(idx.size());
    const double* src = ds.images.data->data();
    double* dst = images.data->data();
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const int j = idx[i];
        if (j < 0 || j >= ds.n()) throw ValueError("gather: index out of range");
        std::memcpy(dst + static_cast<std::int64_t>(i) * per_image,
                    src + static_cast<std::int64_t>(j) * per_image,
                    static_cast<std::size_t>(per_image) * sizeof(double));
        labels[i] = ds.labels[static_cast<std::size_t>(j)];
    }
    return {std::move(images), std::move(labels)};
}

Dataset downsample2x(const Dataset& ds) {
    validate_dataset(ds);
    if (ds.h() % 2 != 0 || ds.w() % 2 != 0) {
        throw ValueError("downsample2x: spatial dims must be even, got " +
                         shape_str(ds.images.shape));
    }
    const int N = ds.n(), H = ds.h(), W = ds.w(), C = ds.c();
    const int Ho = H / 2, Wo = W / 2;
    Dataset out;
    out.name = ds.name + "-half";
    out.num_classes = ds.num_classes;
    out.labels = ds.labels;
    out.images = Tensor::zeros({N, Ho, Wo, C});
    const double* src = ds.images.data->data();
    double* dst = out.images.data->data();
    for (int n = 0; n < N; ++n) {
        for (int y = 0; y < Ho; ++y) {
            for (int x = 0; x < Wo; ++x) {
                for (int c = 0; c < C; ++c) {
                    double s = 0.0;
                    for (int dy = 0; dy < 2; ++dy) {
                        for (int dx = 0; dx < 2; ++dx) {
                            s += src[(((static_cast<std::int64_t>(n) * H + 2 * y + dy) * W +
                                       2 * x + dx) *
                                      C) +
                                     c];
                        }
                    }
                    dst[(((static_cast<std::int64_t>(n) * Ho + y) * Wo + x) * C) + c] = s * 0.25;
                }
            }
        }
    }
    return out;
}

Dataset subsample(const Dataset& ds, int n, std::uint64_t seed) {
    validate_dataset(ds);
    if (n < 0 || n > ds.n()) throw ValueError("subsample: n out of range");
    std::vector<int> perm(static_cast<std::size_t>(ds.n()));
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(mix_seed(seed, "subsample"));
    shuffle(perm, rng);
    perm.resize(static_cast<std::size_t>(n));
    auto [images, labels] = gather(ds, perm);
    Dataset out;
    out.images = std::move(images);
    out.labels = std::move(labels);
    out.num_classes = ds.num_classes;
    out.name = ds.name + "-sub" + std::to_string(n);
    return out;
}

// ---------------------------------------------------------------------------
// Dataset container
// ---------------------------------------------------------------------------

namespace {
constexpr char kDsMagic[4] = {'G', 'F', 'D', 'S'};
}

void save_dataset(const std::string& path, const Dataset& ds) {
    validate_dataset(ds);
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open " + path + " for writing");
    os.write(kDsMagic, 4);
    auto put_u32 = [&os](std::uint32_t v) {
        unsigned char b[4];
        for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
        os.write(reinterpret_cast<const char*>(b), 4);
    };
    put_u32(1);  // version
    put_u32(static_cast<std::uint32_t>(ds.n()));
    put_u32(static_cast<std::uint32_t>(ds.h()));
    put_u32(static_cast<std::uint32_t>(ds.w()));
    put_u32(static_cast<std::uint32_t>(ds.c()));
    put_u32(static_cast<std::uint32_t>(ds.num_classes));
    put_u32(static_cast<std::uint32_t>(ds.name.size()));
    os.write(ds.name.data(), static_cast<std::streamsize>(ds.name.size()));
    for (int label : ds.labels) put_u32(static_cast<std::uint32_t>(label));
    os.write(reinterpret_cast<const char*>(ds.images.data->data()),
             static_cast<std::streamsize>(ds.images.size() * 8));
    if (!os) throw IoError("write failed for " + path);
}

Dataset load_dataset_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open dataset " + path);
    auto fail = [&path]() -> IoError { return IoError("dataset " + path + ": truncated or corrupt"); };
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kDsMagic, 4) != 0) throw fail();
    auto get_u32 = [&in, &fail]() {
        unsigned char b[4];
        in.read(reinterpret_cast<char*>(b), 4);
        if (!in) throw fail();
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
        return v;
    };
    if (get_u32() != 1) throw IoError("dataset " + path + ": unsupported version");
    const int n = static_cast<int>(get_u32());
    const int h = static_cast<int>(get_u32());
    const int w = static_cast<int>(get_u32());
    const int c = static_cast<int>(get_u32());
    const int k = static_cast<int>(get_u32());
    const std::uint32_t name_len = get_u32();
    if (name_len > (1u << 20)) throw fail();
    Dataset ds;
    ds.name.resize(name_len);
    if (name_len > 0) {
        in.read(ds.name.data(), name_len);
        if (!in) throw fail();
    }
    ds.num_classes = k;
    ds.labels.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) ds.labels[static_cast<std::size_t>(i)] = static_cast<int>(get_u32());
    ds.images = Tensor::zeros({n, h, w, c});
    in.read(reinterpret_cast<char*>(ds.images.data->data()),
            static_cast<std::streamsize>(ds.images.size() * 8));
    if (!in) throw fail();
    return ds;
}

}  // namespace gradforge
