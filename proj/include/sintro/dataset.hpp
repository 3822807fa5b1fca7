#pragma once

#include "sintro/error.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace sintro {

// MNIST-style image set: row-major 28x28 inputs scaled to [0,1], labels 0..9.
struct Dataset {
    static constexpr int kClasses = 10;
    static constexpr std::size_t kInputDim = 28 * 28;

    std::vector<std::vector<float>> inputs;
    std::vector<int> labels;

    std::size_t size() const { return inputs.size(); }
    std::vector<float> one_hot(std::size_t i) const;
};

struct SplitSpec {
    std::size_t train_count = 0;
    std::size_t val_count = 0;
    std::size_t test_count = 0;
    std::uint64_t seed = 1;
};

struct Split {
    Dataset train, val, test;
    std::vector<std::size_t> train_idx, val_idx, test_idx; // into the source set
};

// Parses the big-endian IDX pair (magic 0x00000803 images across n x 28 x 28,
// 0x00000801 labels); pixel bytes are scaled by 1/255. Throws Error naming the
// byte offset on malformed input.
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

// Inverse of load_idx; pixels are written as round(v * 255).
void save_idx(const Dataset& data, const std::string& images_path,
              const std::string& labels_path);

// Deterministic stratified partition: per-class shuffles keyed on the seed,
// counts apportioned per class by largest remainder. Index sets are pairwise
// disjoint.
Split split(const Dataset& data, const SplitSpec& spec);

// x + n with n ~ N(0, sigma^2 I); values are not clipped.
std::vector<float> add_awgn(const std::vector<float>& x, double sigma,
                            std::mt19937_64& rng);

// max(sup_a inf_b, sup_b inf_a) Euclidean distance, brute force.
double hausdorff_distance(const std::vector<std::vector<double>>& A,
                          const std::vector<std::vector<double>>& B);

} // namespace sintro
