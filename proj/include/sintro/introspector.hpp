#pragma once

#include "sintro/classifier.hpp"
#include "sintro/nn.hpp"

#include <array>
#include <vector>

namespace sintro {

struct LatentPoint {
    double z1 = 0.0;
    double z2 = 0.0;
};

inline double latent_dist(const LatentPoint& a, const LatentPoint& b) {
    const double dx = a.z1 - b.z1, dy = a.z2 - b.z2;
    return std::sqrt(dx * dx + dy * dy);
}

// Deterministic-encoder autoencoder over concatenated hidden activations,
// regularized by squared MMD between batch latents and standard-normal draws.
// Inputs are standardized per component by the training mean/std stored with
// the model; encode/decode operate in standardized space.
struct AutoencoderModel {
    nn::NetworkSpec enc_spec; // N_h -> 200 -> 200 -> 200 -> 2 linear
    nn::NetworkSpec dec_spec; // 2 -> 200 -> 200 -> 200 -> N_h linear
    nn::Params enc;
    nn::Params dec;
    std::vector<float> mean;  // length N_h
    std::vector<float> stdev; // length N_h, floored away from zero
    double mmd_weight = 1.0;
    // mean per-sample training loss (recon + weighted MMD) over the last cycle
    double final_train_loss = 0.0;

    std::size_t input_width() const { return enc_spec.input_width(); }
};

struct EstimatorModel {
    nn::NetworkSpec spec; // 2 -> 200 -> 200 -> 200 -> 1 linear
    nn::Params params;
    double error_floor = 1e-8; // target is log10(e + error_floor)
};

// Biased (V-statistic) squared-MMD with Gaussian kernel
// k(a,b) = exp(-||a-b||^2 / (2 sigma_k^2)), sigma_k^2 = 2. Requires at least
// 2 points per set. Always >= 0 (clamped against rounding).
double mmd_sq(const std::vector<LatentPoint>& Z, const std::vector<LatentPoint>& P);

// d(mmd_sq)/dz_i for every z in Z, holding P fixed.
std::vector<LatentPoint> mmd_sq_grad(const std::vector<LatentPoint>& Z,
                                     const std::vector<LatentPoint>& P);

struct AutoencoderOptions {
    double mmd_weight = 1.0;
    std::size_t hidden_width = 200;
    std::size_t hidden_layers = 3; // per side
};

// Minimizes (1/2)||h_hat - h||^2 + mmd_weight * mmd_sq(batch latents, fresh
// prior draws) with Adam + CLR over standardized records.
AutoencoderModel train_autoencoder(const std::vector<ActivationRecord>& records,
                                   const nn::TrainConfig& config,
                                   const AutoencoderOptions& opts = {});

std::vector<float> standardize(const AutoencoderModel& model,
                               const std::vector<float>& h);
std::vector<float> destandardize(const AutoencoderModel& model,
                                 const std::vector<float>& h_std);

LatentPoint encode(const AutoencoderModel& model, const std::vector<float>& h);
// Reconstruction in standardized space; feed through destandardize() for
// original activation units.
std::vector<float> decode(const AutoencoderModel& model, const LatentPoint& z);

std::vector<LatentPoint> encode_all(const AutoencoderModel& model,
                                    const std::vector<ActivationRecord>& records,
                                    std::size_t threads = 0);

struct EstimatorOptions {
    double error_floor = 1e-8;
    std::size_t hidden_width = 200;
    std::size_t hidden_layers = 3;
};

// Trains on (encode(h), log10(e + error_floor)) pairs with half-MSE loss.
// Only the estimator's own parameters are touched; the autoencoder and
// classifier are read-only here.
EstimatorModel train_estimator(const AutoencoderModel& vae,
                               const std::vector<ActivationRecord>& records,
                               const nn::TrainConfig& config,
                               const EstimatorOptions& opts = {});

// Estimated log10 of the classifier's half-MSE error at latent z.
double estimate_error(const EstimatorModel& est, const LatentPoint& z);

inline double confidence(double e_log10) { return -e_log10; }

} // namespace sintro
