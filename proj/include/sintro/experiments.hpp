#pragma once

#include "sintro/classifier.hpp"
#include "sintro/introspector.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace sintro {

struct ConstellationPoint {
    LatentPoint z;
    int label = 0;
    double e_log10 = 0.0; // estimator output; 0 when no estimator given
    LatentPoint displacement; // z - noiseless z
};

// Latent scatter of AWGN-perturbed copies of one input, one per noise draw.
struct Constellation {
    std::size_t sample_id = 0;
    double sigma = 0.0;
    LatentPoint base; // latent of the noiseless input
    std::vector<ConstellationPoint> points;
};

// For each sigma, encodes n_draws noisy copies of the sample. The estimator
// is optional; per-point e_log10 is 0 without one.
std::vector<Constellation> noise_constellation(const ClassifierModel& model,
                                               const AutoencoderModel& vae,
                                               const EstimatorModel* est,
                                               const std::vector<float>& x,
                                               std::size_t sample_id,
                                               const std::vector<double>& sigmas,
                                               std::size_t n_draws,
                                               std::uint64_t seed);

// train_classifier with per-minibatch sigma ~ U(0, sigma_max) AWGN on the
// inputs; validation and early stopping stay noiseless.
ClassifierModel train_with_noise_injection(const Split& data,
                                           const nn::TrainConfig& config,
                                           const nn::NetworkSpec& arch,
                                           double sigma_max);

struct AttackStep {
    std::uint64_t input_hash = 0; // FNV-1a over the input bytes
    LatentPoint z;
    std::vector<float> y_hat;
    int label = 0;
};

struct AttackTrajectory {
    std::size_t sample_id = 0;
    int target = 0;
    double eps = 0.0;
    std::vector<AttackStep> steps; // steps[0] is the unperturbed input
    bool success = false;
    std::optional<std::size_t> success_step;
};

struct FgsmOptions {
    double eps = 0.01;
    std::size_t max_steps = 100;
    bool continue_after_success = false; // keep stepping for full trajectories
};

// Iterates x <- x - eps * sign(d/dx (1/2)||y_target - y_hat||^2), recording
// the latent and prediction at every step. Eval-mode gradients; inputs are
// not clipped.
AttackTrajectory fgsm_attack(const ClassifierModel& model,
                             const AutoencoderModel& vae,
                             const std::vector<float>& x, std::size_t sample_id,
                             int target, const FgsmOptions& opts = {});

std::uint64_t fnv1a_bytes(const void* data, std::size_t size);

struct ViolinClass {
    int cls = 0;
    std::vector<double> correct_e_log10;
    std::vector<double> miscl_e_log10;
    double sensitivity = 0.0; // correct fraction within the class
};

struct ViolinReport {
    std::vector<ViolinClass> classes; // one per class, index == class
    std::size_t total = 0;

    double overall_accuracy() const;
};

// Splits the test set per class into correct/misclassified buckets of
// estimator outputs.
ViolinReport violin_report(const ClassifierModel& model, const AutoencoderModel& vae,
                           const EstimatorModel& est, const Dataset& test,
                           std::size_t threads = 0);

double median(std::vector<double> v); // NaN on empty input

} // namespace sintro
