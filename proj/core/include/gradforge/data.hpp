#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "gradforge/tensor.hpp"

namespace gradforge {

struct Dataset {
    Tensor images;            // [N,H,W,C], every pixel in [0,1]
    std::vector<int> labels;  // in [0, num_classes)
    int num_classes = 0;
    std::string name;

    int n() const { return images.shape.empty() ? 0 : images.shape[0]; }
    int h() const { return images.shape[1]; }
    int w() const { return images.shape[2]; }
    int c() const { return images.shape[3]; }
};

struct DataSplits {
    Dataset train;
    Dataset val;
};

struct SplitSpec {
    int n_train = 0;
    int n_val = 0;
    std::uint64_t seed = 0;
};

enum class CifarVariant { cifar10, cifar100 };

// One CIFAR binary batch file: records of 1 (cifar10) or 2 (cifar100) label
// bytes followed by 3072 channel-planar pixel bytes. Pixels become byte/255 in
// HWC order; cifar100 uses the fine label. File size must be an exact multiple
// of the record size or nothing is loaded.
Dataset load_cifar(const std::string& path, CifarVariant variant);

// Standard directory layouts: data_batch_1..5.bin / test_batch.bin for
// cifar10, train.bin / test.bin for cifar100.
Dataset load_cifar_train(const std::string& dir, CifarVariant variant);
Dataset load_cifar_test(const std::string& dir, CifarVariant variant);

// Inverse of load_cifar, for fixtures and round-trip checks. The cifar100
// coarse byte is written as fine/5.
std::vector<unsigned char> cifar_encode(const Dataset& ds, CifarVariant variant);

// Seeded permutation; first n_train indices to train, next n_val to val.
std::pair<Dataset, Dataset> split(const Dataset& ds, const SplitSpec& spec);

enum class SynthKind { gaussian_blobs, ring };

struct SynthSpec {
    SynthKind kind = SynthKind::gaussian_blobs;
    int n = 0;
    int hw = 16;
    int channels = 3;
    int num_classes = 10;
    double noise = 0.0;
    double amplitude = 0.45;  // bump amplitude range of the class templates
    std::uint64_t seed = 0;
};

// Class-conditional images: per-class smooth template plus iid pixel noise,
// clamped to [0,1]; classes balanced up to rounding and sample order shuffled.
Dataset synth_dataset(const SynthSpec& spec);

// Index batches for one epoch: shuffle keyed by (seed, epoch), last partial
// batch kept.
std::vector<std::vector<int>> minibatches(int n, int m, std::uint64_t seed, int epoch);
std::vector<std::vector<int>> minibatches(const Dataset& ds, int m, std::uint64_t seed, int epoch);

std::pair<Tensor, std::vector<int>> gather(const Dataset& ds, const std::vector<int>& idx);

// 2x2 average pooling over the spatial dims (desk-scale reduction).
Dataset downsample2x(const Dataset& ds);

// First n examples of a seeded shuffle.
Dataset subsample(const Dataset& ds, int n, std::uint64_t seed);

// Binary dataset container (same container style as checkpoints).
void save_dataset(const std::string& path, const Dataset& ds);
Dataset load_dataset_file(const std::string& path);

}  // namespace gradforge
