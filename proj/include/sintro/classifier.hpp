#pragma once

#include "sintro/dataset.hpp"
#include "sintro/nn.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace sintro {

enum class Arch { Desk, Paper };

// Desk = 6x128 ELU hidden stack, Paper = 12x200; both end in a 10-wide
// sigmoid output over 784 inputs.
nn::NetworkSpec classifier_spec(Arch arch, double dropout_keep);

struct CycleStats {
    std::size_t cycle = 0; // 1-based completed cycle
    double train_error = 0.0;
    double val_error = 0.0;
    double test_accuracy = 0.0;
};

struct ClassifierModel {
    nn::NetworkSpec spec;
    nn::Params params;
    std::vector<CycleStats> history;
};

// One sample's concatenated hidden vector with its classifier outcome.
struct ActivationRecord {
    std::size_t sample_id = 0;
    std::vector<float> h;
    int y_true = 0;
    std::vector<float> y_hat;
    double e = 0.0; // (1/2)||y - y_hat||^2
    int cycle = -1; // >= 1 for training-history snapshots
};

struct TrainClassifierOptions {
    // When > 0, each minibatch draws sigma ~ U(0, noise_sigma_max) and
    // perturbs its inputs with AWGN; validation stays noiseless.
    double noise_sigma_max = 0.0;
    // Eval-mode activation records of these samples at every cycle end.
    const Dataset* snapshot_probe = nullptr;
    std::vector<ActivationRecord>* probe_history = nullptr;
};

// Minibatch Adam under the triangular CLR schedule. Validation error is
// checked at each cycle end; training halts after `patience` consecutive
// cycle-end increases or after num_cycles. A non-finite batch loss aborts
// with the parameters captured at the last completed cycle.
ClassifierModel train_classifier(const Split& data, const nn::TrainConfig& config,
                                 const nn::NetworkSpec& arch,
                                 const TrainClassifierOptions& opts = {});

// Eval-mode records for every sample; parallel over read-only params.
std::vector<ActivationRecord> record_activations(const ClassifierModel& model,
                                                 const Dataset& data,
                                                 std::size_t threads = 0,
                                                 int cycle = -1);

// Argmax over the 10 sigmoid outputs, ties to the lowest index.
std::pair<int, std::vector<float>> classify(const ClassifierModel& model,
                                            const std::vector<float>& x);

double mean_half_mse(const ClassifierModel& model, const Dataset& data,
                     std::size_t threads = 0);
double test_accuracy(const ClassifierModel& model, const Dataset& data,
                     std::size_t threads = 0);

} // namespace sintro
