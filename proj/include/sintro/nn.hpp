#pragma once

#include "sintro/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

// Minimal reverse-mode engine for dense feedforward stacks: ELU/sigmoid/linear
// layers, half-MSE loss, Adam with bias correction, a triangular cyclic
// learning-rate schedule and inverted dropout. Float instantiation is used for
// bulk training, double for gradient-check oracles.

namespace sintro::nn {

enum class Activation { Elu, Sigmoid, Linear };

struct LayerSpec {
    std::size_t in = 0;
    std::size_t out = 0;
    Activation act = Activation::Elu;
};

struct NetworkSpec {
    std::vector<LayerSpec> layers;
    double dropout_keep = 1.0; // keep probability; 1 = no dropout

    void validate() const; // throws Error if widths do not chain, list empty,
                           // or dropout_keep outside (0,1]
    std::size_t input_width() const { return layers.front().in; }
    std::size_t output_width() const { return layers.back().out; }
    // Sum of hidden-layer widths (all layers except the last).
    std::size_t hidden_width_total() const;
};

// Uniform two-hidden-width builder: `hidden_layers` layers of width
// `hidden_width` with ELU, then a `Linear`/`Sigmoid` output layer.
NetworkSpec make_mlp_spec(std::size_t input_width, std::size_t hidden_layers,
                          std::size_t hidden_width, std::size_t output_width,
                          Activation output_act, double dropout_keep = 1.0);

template <typename T>
struct LayerParams {
    std::vector<T> W; // out x in, row-major
    std::vector<T> b; // out
};

template <typename T>
struct ParamsT {
    std::vector<LayerParams<T>> layers;

    std::size_t total_size() const {
        std::size_t n = 0;
        for (const auto& l : layers) n += l.W.size() + l.b.size();
        return n;
    }
    void fill(T v) {
        for (auto& l : layers) {
            std::fill(l.W.begin(), l.W.end(), v);
            std::fill(l.b.begin(), l.b.end(), v);
        }
    }
    bool all_finite() const;
};

using Params = ParamsT<float>;

// Zero-initialized parameter set matching the spec's shapes.
template <typename T> ParamsT<T> zeros_like(const NetworkSpec& spec);
// Seeded uniform init, W ~ U(-sqrt(6/fan_in), +sqrt(6/fan_in)), b = 0.
template <typename T> ParamsT<T> init_params(const NetworkSpec& spec, std::uint64_t seed);

template <typename T>
struct AdamState {
    ParamsT<T> m;
    ParamsT<T> v;
    std::uint64_t t = 0;
};

template <typename T> AdamState<T> make_adam_state(const NetworkSpec& spec);

struct AdamHyper {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps_hat = 1e-8;
};

struct TrainConfig {
    std::size_t cycle_length = 1000; // iterations per CLR cycle
    std::size_t num_cycles = 10;
    double lr_min = 0.0;
    double lr_max = 1e-4;
    std::size_t batch_size = 128;
    std::size_t patience = 5; // consecutive cycle-end validation increases
    double dropout_keep = 1.0;
    AdamHyper adam;
    std::uint64_t seed = 1;
    std::size_t threads = 0; // 0 = hardware concurrency

    void validate() const;
};

enum class Mode { Train, Eval };

// ELU with alpha = 1.
inline double elu(double x) { return x >= 0.0 ? x : std::expm1(x); }
inline float elu(float x) { return x >= 0.0f ? x : std::expm1(x); }

template <typename T>
struct ForwardResult {
    std::vector<T> output;
    // Post-nonlinearity, pre-dropout activation of every hidden layer.
    std::vector<std::vector<T>> hidden;
};

// Per-layer state kept for the backward pass.
template <typename T>
struct ForwardCache {
    std::vector<T> input;
    std::vector<std::vector<T>> act;     // post-activation per layer (pre-dropout)
    std::vector<std::vector<T>> fed;     // value actually fed forward (post-dropout)
    std::vector<std::vector<T>> mask;    // dropout mask (0 or 1/keep); empty in Eval
    Mode mode = Mode::Eval;

    const std::vector<T>& output() const { return act.back(); }
};

// Forward pass. In Train mode with dropout_keep < 1, a non-null rng is
// required; masks apply inverted scaling (activation / keep) to hidden layers
// only. Eval mode ignores dropout entirely.
template <typename T>
ForwardCache<T> forward_cache(const NetworkSpec& spec, const ParamsT<T>& params,
                              const std::vector<T>& x, Mode mode,
                              std::mt19937_64* rng);

template <typename T>
ForwardResult<T> forward(const NetworkSpec& spec, const ParamsT<T>& params,
                         const std::vector<T>& x, Mode mode = Mode::Eval,
                         std::mt19937_64* rng = nullptr);

// Vector-Jacobian product: given dL/d(output), accumulates parameter
// gradients into `grads` (+=) and returns dL/d(input). Throws Error naming
// the layer if a non-finite activation is found in the cache.
template <typename T>
std::vector<T> backward_from(const NetworkSpec& spec, const ParamsT<T>& params,
                             const ForwardCache<T>& cache,
                             const std::vector<T>& dLdy, ParamsT<T>& grads);

// Gradients of the half-MSE loss E = (1/2)||f(x) - target||^2 at Eval mode.
// Parameters are not mutated.
template <typename T>
ParamsT<T> backward(const NetworkSpec& spec, const ParamsT<T>& params,
                    const std::vector<T>& x, const std::vector<T>& target);

// Standard Adam update with bias correction, in place; increments state.t.
template <typename T>
void adam_step(ParamsT<T>& params, const ParamsT<T>& grads, AdamState<T>& state,
               double lr, const AdamHyper& hp = {});

// Triangular CLR wave of period T: lr_min -> lr_max over [0, T/2], back down
// over [T/2, T]. Requires T >= 2.
double clr_lr(std::uint64_t iteration, std::uint64_t T, double lr_min, double lr_max);

// Concatenation of hidden-layer activations in layer order.
template <typename T>
std::vector<T> hidden_concat(const std::vector<std::vector<T>>& hidden);

template <typename T>
double half_mse(const std::vector<T>& a, const std::vector<T>& b);

extern template struct ParamsT<float>;
extern template struct ParamsT<double>;

} // namespace sintro::nn
