#include "sintro/classifier.hpp"

#include "sintro/kernels.hpp"
#include "sintro/parallel.hpp"
#include "sintro/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace sintro {

nn::NetworkSpec classifier_spec(Arch arch, double dropout_keep) {
    switch (arch) {
        case Arch::Desk:
            return nn::make_mlp_spec(Dataset::kInputDim, 6, 128, Dataset::kClasses,
                                     nn::Activation::Sigmoid, dropout_keep);
        case Arch::Paper:
            return nn::make_mlp_spec(Dataset::kInputDim, 12, 200, Dataset::kClasses,
                                     nn::Activation::Sigmoid, dropout_keep);
    }
    throw Error("unknown architecture");
}

namespace {

// Epoch-shuffled index stream; batches wrap across epoch boundaries.
class BatchSampler {
public:
    BatchSampler(std::size_t n, std::uint64_t seed) : idx_(n), rng_(make_rng(seed)) {
        std::iota(idx_.begin(), idx_.end(), std::size_t(0));
        reshuffle();
    }
    std::size_t next() {
        if (pos_ == idx_.size()) reshuffle();
        return idx_[pos_++];
    }

private:
    void reshuffle() {
        std::shuffle(idx_.begin(), idx_.end(), rng_);
        pos_ = 0;
    }
    std::vector<std::size_t> idx_;
    std::mt19937_64 rng_;
    std::size_t pos_ = 0;
};

void add_params(nn::Params& dst, const nn::Params& src) {
    const auto& K = kernels::ops<float>();
    for (std::size_t li = 0; li < dst.layers.size(); ++li) {
        K.axpy(dst.layers[li].W.data(), src.layers[li].W.data(), 1.0f,
               dst.layers[li].W.size());
        K.axpy(dst.layers[li].b.data(), src.layers[li].b.data(), 1.0f,
               dst.layers[li].b.size());
    }
}

void scale_params(nn::Params& p, float alpha) {
    const auto& K = kernels::ops<float>();
    for (auto& l : p.layers) {
        K.scale(l.W.data(), alpha, l.W.size());
        K.scale(l.b.data(), alpha, l.b.size());
    }
}

} // namespace

ClassifierModel train_classifier(const Split& data, const nn::TrainConfig& config,
                                 const nn::NetworkSpec& arch,
                                 const TrainClassifierOptions& opts) {
    config.validate();
    arch.validate();
    if (data.train.size() == 0) throw Error("train_classifier: empty training set");

    nn::NetworkSpec spec = arch;
    spec.dropout_keep = config.dropout_keep;

    ClassifierModel model;
    model.spec = spec;
    model.params = nn::init_params<float>(spec, mix64(config.seed, 0x1417));
    auto adam = nn::make_adam_state<float>(spec);

    const std::size_t threads = resolve_threads(config.threads);
    const std::size_t batch = std::min(config.batch_size, data.train.size());
    BatchSampler sampler(data.train.size(), mix64(config.seed, 0xba7c));
    auto sigma_rng = make_rng(mix64(config.seed, 0x516a));

    std::vector<nn::Params> slot_grads(threads, nn::zeros_like<float>(spec));
    std::vector<double> slot_loss(threads, 0.0);
    std::vector<std::size_t> batch_idx(batch);

    nn::Params last_good = model.params;
    std::size_t bad_streak = 0;
    double prev_val = std::numeric_limits<double>::infinity();
    bool diverged = false;

    const std::uint64_t total_iters =
        std::uint64_t(config.cycle_length) * config.num_cycles;

    auto snapshot = [&](std::size_t cycle) {
        if (!opts.snapshot_probe || !opts.probe_history) return;
        auto records = record_activations(model, *opts.snapshot_probe, threads,
                                          int(cycle));
        opts.probe_history->insert(opts.probe_history->end(), records.begin(),
                                   records.end());
    };

    for (std::uint64_t iter = 0; iter < total_iters && !diverged; ++iter) {
        const double lr =
            nn::clr_lr(iter, config.cycle_length, config.lr_min, config.lr_max);
        for (std::size_t j = 0; j < batch; ++j) batch_idx[j] = sampler.next();

        double sigma = 0.0;
        if (opts.noise_sigma_max > 0.0) {
            std::uniform_real_distribution<double> u(0.0, opts.noise_sigma_max);
            sigma = u(sigma_rng);
        }

        for (auto& g : slot_grads) g.fill(0.0f);
        std::fill(slot_loss.begin(), slot_loss.end(), 0.0);

        try {
            parallel_chunks(batch, threads, [&](std::size_t b0, std::size_t b1, std::size_t slot) {
                for (std::size_t j = b0; j < b1; ++j) {
                    const std::size_t si = batch_idx[j];
                    auto rng = make_rng(mix64(config.seed, iter, si));
                    const std::vector<float>* x = &data.train.inputs[si];
                    std::vector<float> noisy;
                    if (sigma > 0.0) {
                        noisy = add_awgn(*x, sigma, rng);
                        x = &noisy;
                    }
                    auto cache = nn::forward_cache(spec, model.params, *x,
                                                   nn::Mode::Train, &rng);
                    const auto target = data.train.one_hot(si);
                    std::vector<float> dLdy(target.size());
                    double loss = 0.0;
                    for (std::size_t u = 0; u < target.size(); ++u) {
                        dLdy[u] = cache.output()[u] - target[u];
                        loss += 0.5 * double(dLdy[u]) * double(dLdy[u]);
                    }
                    slot_loss[slot] += loss;
                    nn::backward_from(spec, model.params, cache, dLdy, slot_grads[slot]);
                }
            });
        } catch (const NumericError&) {
            model.params = last_good;
            diverged = true;
            break;
        }

        double batch_loss = 0.0;
        for (double l : slot_loss) batch_loss += l;
        if (!std::isfinite(batch_loss)) {
            model.params = last_good;
            diverged = true;
            break;
        }
        for (std::size_t t = 1; t < threads; ++t) add_params(slot_grads[0], slot_grads[t]);
        scale_params(slot_grads[0], 1.0f / float(batch));
        nn::adam_step(model.params, slot_grads[0], adam, lr, config.adam);

        if ((iter + 1) % config.cycle_length == 0) {
            const std::size_t cycle = (iter + 1) / config.cycle_length;
            CycleStats stats;
            stats.cycle = cycle;
            stats.train_error = mean_half_mse(model, data.train, threads);
            stats.val_error = data.val.size() > 0
                                  ? mean_half_mse(model, data.val, threads)
                                  : stats.train_error;
            stats.test_accuracy =
                data.test.size() > 0 ? test_accuracy(model, data.test, threads) : 0.0;
            model.history.push_back(stats);
            snapshot(cycle);

            if (!std::isfinite(stats.train_error)) {
                model.params = last_good;
                diverged = true;
                break;
            }
            last_good = model.params;

            if (stats.val_error > prev_val) {
                if (++bad_streak >= config.patience) break;
            } else {
                bad_streak = 0;
            }
            prev_val = stats.val_error;
        }
    }
    return model;
}

std::vector<ActivationRecord> record_activations(const ClassifierModel& model,
                                                 const Dataset& data,
                                                 std::size_t threads, int cycle) {
    std::vector<ActivationRecord> records(data.size());
    parallel_chunks(data.size(), threads, [&](std::size_t b0, std::size_t b1, std::size_t) {
        for (std::size_t i = b0; i < b1; ++i) {
            auto fwd = nn::forward(model.spec, model.params, data.inputs[i]);
            ActivationRecord& r = records[i];
            r.sample_id = i;
            r.h = nn::hidden_concat(fwd.hidden);
            r.y_true = data.labels[i];
            r.y_hat = std::move(fwd.output);
            r.e = nn::half_mse(r.y_hat, data.one_hot(i));
            r.cycle = cycle;
        }
    });
    return records;
}

std::pair<int, std::vector<float>> classify(const ClassifierModel& model,
                                            const std::vector<float>& x) {
    auto fwd = nn::forward(model.spec, model.params, x);
    int best = 0;
    for (std::size_t u = 1; u < fwd.output.size(); ++u)
        if (fwd.output[u] > fwd.output[std::size_t(best)]) best = int(u);
    return {best, std::move(fwd.output)};
}

double mean_half_mse(const ClassifierModel& model, const Dataset& data,
                     std::size_t threads) {
    if (data.size() == 0) throw Error("mean_half_mse: empty dataset");
    const std::size_t nt = resolve_threads(threads);
    std::vector<double> slot_sum(nt, 0.0);
    parallel_chunks(data.size(), nt, [&](std::size_t b0, std::size_t b1, std::size_t slot) {
        for (std::size_t i = b0; i < b1; ++i) {
            auto fwd = nn::forward(model.spec, model.params, data.inputs[i]);
            slot_sum[slot] += nn::half_mse(fwd.output, data.one_hot(i));
        }
    });
    double s = 0.0;
    for (double v : slot_sum) s += v;
    return s / double(data.size());
}

double test_accuracy(const ClassifierModel& model, const Dataset& data,
                     std::size_t threads) {
    if (data.size() == 0) throw Error("test_accuracy: empty dataset");
    const std::size_t nt = resolve_threads(threads);
    std::vector<std::size_t> slot_hits(nt, 0);
    parallel_chunks(data.size(), nt, [&](std::size_t b0, std::size_t b1, std::size_t slot) {
        for (std::size_t i = b0; i < b1; ++i) {
            auto fwd = nn::forward(model.spec, model.params, data.inputs[i]);
            int best = 0;
            for (std::size_t u = 1; u < fwd.output.size(); ++u)
                if (fwd.output[u] > fwd.output[std::size_t(best)]) best = int(u);
            if (best == data.labels[i]) slot_hits[slot] += 1;
        }
    });
    std::size_t hits = 0;
    for (std::size_t h : slot_hits) hits += h;
    return double(hits) / double(data.size());
}

} // namespace sintro
