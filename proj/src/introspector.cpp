#include "sintro/introspector.hpp"

#include "sintro/kernels.hpp"
#include "sintro/parallel.hpp"
#include "sintro/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace sintro {

namespace {

constexpr double kKernelSigmaSq = 2.0; // k(a,b) = exp(-||a-b||^2 / (2*2))

inline double kernel(const LatentPoint& a, const LatentPoint& b) {
    const double dx = a.z1 - b.z1, dy = a.z2 - b.z2;
    return std::exp(-(dx * dx + dy * dy) / (2.0 * kKernelSigmaSq));
}

} // namespace

double mmd_sq(const std::vector<LatentPoint>& Z, const std::vector<LatentPoint>& P) {
    if (Z.size() < 2 || P.size() < 2)
        throw Error("mmd_sq: need at least 2 points per set");
    const double n = double(Z.size()), m = double(P.size());
    double kzz = 0.0, kpp = 0.0, kzp = 0.0;
    for (const auto& a : Z)
        for (const auto& b : Z) kzz += kernel(a, b);
    for (const auto& a : P)
        for (const auto& b : P) kpp += kernel(a, b);
    for (const auto& a : Z)
        for (const auto& b : P) kzp += kernel(a, b);
    const double v = kzz / (n * n) + kpp / (m * m) - 2.0 * kzp / (n * m);
    return std::max(0.0, v);
}

std::vector<LatentPoint> mmd_sq_grad(const std::vector<LatentPoint>& Z,
                                     const std::vector<LatentPoint>& P) {
    if (Z.size() < 2 || P.size() < 2)
        throw Error("mmd_sq_grad: need at least 2 points per set");
    const double n = double(Z.size()), m = double(P.size());
    std::vector<LatentPoint> grad(Z.size());
    for (std::size_t a = 0; a < Z.size(); ++a) {
        double gx = 0.0, gy = 0.0;
        for (const auto& zb : Z) {
            const double k = kernel(Z[a], zb) / kKernelSigmaSq;
            gx -= (Z[a].z1 - zb.z1) * k;
            gy -= (Z[a].z2 - zb.z2) * k;
        }
        gx *= 2.0 / (n * n);
        gy *= 2.0 / (n * n);
        double hx = 0.0, hy = 0.0;
        for (const auto& pb : P) {
            const double k = kernel(Z[a], pb) / kKernelSigmaSq;
            hx += (Z[a].z1 - pb.z1) * k;
            hy += (Z[a].z2 - pb.z2) * k;
        }
        grad[a].z1 = gx + hx * 2.0 / (n * m);
        grad[a].z2 = gy + hy * 2.0 / (n * m);
    }
    return grad;
}

namespace {

struct Standardizer {
    std::vector<float> mean;
    std::vector<float> stdev;
};

Standardizer fit_standardizer(const std::vector<ActivationRecord>& records) {
    const std::size_t dim = records.front().h.size();
    std::vector<double> mu(dim, 0.0), var(dim, 0.0);
    for (const auto& r : records) {
        if (r.h.size() != dim) throw Error("records have inconsistent widths");
        for (std::size_t k = 0; k < dim; ++k) mu[k] += double(r.h[k]);
    }
    for (auto& v : mu) v /= double(records.size());
    for (const auto& r : records)
        for (std::size_t k = 0; k < dim; ++k) {
            const double d = double(r.h[k]) - mu[k];
            var[k] += d * d;
        }
    Standardizer s;
    s.mean.resize(dim);
    s.stdev.resize(dim);
    for (std::size_t k = 0; k < dim; ++k) {
        s.mean[k] = float(mu[k]);
        s.stdev[k] = float(std::max(std::sqrt(var[k] / double(records.size())), 1e-6));
    }
    return s;
}

std::vector<float> standardize_with(const Standardizer& s, const std::vector<float>& h) {
    if (h.size() != s.mean.size()) throw Error("standardize: width mismatch");
    std::vector<float> out(h.size());
    for (std::size_t k = 0; k < h.size(); ++k)
        out[k] = (h[k] - s.mean[k]) / s.stdev[k];
    return out;
}

// Deterministic carve of a validation tail when the caller provides none.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>>
carve_validation(std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t(0));
    auto rng = make_rng(mix64(seed, 0xca3fULL));
    std::shuffle(idx.begin(), idx.end(), rng);
    const std::size_t n_val = std::min<std::size_t>(std::max<std::size_t>(n / 10, 2), 1024);
    std::vector<std::size_t> val(idx.end() - std::ptrdiff_t(n_val), idx.end());
    idx.resize(n - n_val);
    return {std::move(idx), std::move(val)};
}

} // namespace

AutoencoderModel train_autoencoder(const std::vector<ActivationRecord>& records,
                                   const nn::TrainConfig& config,
                                   const AutoencoderOptions& opts) {
    config.validate();
    if (records.size() < 4) throw Error("train_autoencoder: too few records");

    AutoencoderModel model;
    model.mmd_weight = opts.mmd_weight;
    const std::size_t dim = records.front().h.size();
    auto std12 = fit_standardizer(records);
    model.mean = std12.mean;
    model.stdev = std12.stdev;
    model.enc_spec = nn::make_mlp_spec(dim, opts.hidden_layers, opts.hidden_width, 2,
                                       nn::Activation::Linear, config.dropout_keep);
    model.dec_spec = nn::make_mlp_spec(2, opts.hidden_layers, opts.hidden_width, dim,
                                       nn::Activation::Linear, config.dropout_keep);
    model.enc = nn::init_params<float>(model.enc_spec, mix64(config.seed, 0xe2c));
    model.dec = nn::init_params<float>(model.dec_spec, mix64(config.seed, 0xdec));

    // Standardize once up front.
    std::vector<std::vector<float>> xs(records.size());
    for (std::size_t i = 0; i < records.size(); ++i)
        xs[i] = standardize_with(std12, records[i].h);

    auto [train_ids, val_ids] = carve_validation(records.size(), config.seed);

    auto enc_adam = nn::make_adam_state<float>(model.enc_spec);
    auto dec_adam = nn::make_adam_state<float>(model.dec_spec);

    const std::size_t threads = resolve_threads(config.threads);
    const std::size_t batch = std::min(config.batch_size, train_ids.size());
    auto batch_rng = make_rng(mix64(config.seed, 0xba7c));
    auto prior_rng = make_rng(mix64(config.seed, 0x9107));
    std::uniform_int_distribution<std::size_t> pick(0, train_ids.size() - 1);
    std::normal_distribution<double> prior(0.0, 1.0);

    std::vector<nn::Params> enc_slots(threads, nn::zeros_like<float>(model.enc_spec));
    std::vector<nn::Params> dec_slots(threads, nn::zeros_like<float>(model.dec_spec));
    std::vector<double> slot_loss(threads, 0.0);

    std::vector<std::size_t> batch_idx(batch);
    std::vector<nn::ForwardCache<float>> enc_caches(batch), dec_caches(batch);
    std::vector<LatentPoint> latents(batch);
    std::vector<LatentPoint> prior_pts(batch);

    nn::Params enc_good = model.enc, dec_good = model.dec;
    double prev_val = std::numeric_limits<double>::infinity();
    std::size_t bad_streak = 0;

    auto val_recon = [&]() {
        if (val_ids.empty()) return 0.0;
        std::vector<double> slot_sum(threads, 0.0);
        parallel_chunks(val_ids.size(), threads,
                        [&](std::size_t b0, std::size_t b1, std::size_t slot) {
                            for (std::size_t j = b0; j < b1; ++j) {
                                const auto& x = xs[val_ids[j]];
                                auto z = nn::forward(model.enc_spec, model.enc, x);
                                auto xh = nn::forward(model.dec_spec, model.dec, z.output);
                                slot_sum[slot] += nn::half_mse(xh.output, x);
                            }
                        });
        double s = 0.0;
        for (double v : slot_sum) s += v;
        return s / double(val_ids.size());
    };

    const std::uint64_t total_iters =
        std::uint64_t(config.cycle_length) * config.num_cycles;
    bool diverged = false;
    double cycle_loss_sum = 0.0;
    std::uint64_t cycle_loss_n = 0;

    for (std::uint64_t iter = 0; iter < total_iters && !diverged; ++iter) {
        const double lr =
            nn::clr_lr(iter, config.cycle_length, config.lr_min, config.lr_max);
        for (std::size_t j = 0; j < batch; ++j) batch_idx[j] = train_ids[pick(batch_rng)];
        for (std::size_t j = 0; j < batch; ++j) {
            prior_pts[j].z1 = prior(prior_rng);
            prior_pts[j].z2 = prior(prior_rng);
        }

        for (auto& g : enc_slots) g.fill(0.0f);
        for (auto& g : dec_slots) g.fill(0.0f);
        std::fill(slot_loss.begin(), slot_loss.end(), 0.0);

        // Phase 1: forward both stacks, collect batch latents.
        parallel_chunks(batch, threads, [&](std::size_t b0, std::size_t b1, std::size_t) {
            for (std::size_t j = b0; j < b1; ++j) {
                auto rng = make_rng(mix64(config.seed, iter, j));
                const auto& x = xs[batch_idx[j]];
                enc_caches[j] = nn::forward_cache(model.enc_spec, model.enc, x,
                                                  nn::Mode::Train, &rng);
                latents[j].z1 = double(enc_caches[j].output()[0]);
                latents[j].z2 = double(enc_caches[j].output()[1]);
                dec_caches[j] = nn::forward_cache(model.dec_spec, model.dec,
                                                  enc_caches[j].output(),
                                                  nn::Mode::Train, &rng);
            }
        });

        // MMD couples the whole batch through the latents.
        const auto mmd_grads = mmd_sq_grad(latents, prior_pts);

        // Phase 2: backward; recon upstream pre-scaled by 1/batch so the MMD
        // term (a per-batch quantity) adds in unscaled.
        const float inv_b = 1.0f / float(batch);
        parallel_chunks(batch, threads, [&](std::size_t b0, std::size_t b1, std::size_t slot) {
            for (std::size_t j = b0; j < b1; ++j) {
                const auto& x = xs[batch_idx[j]];
                const auto& xh = dec_caches[j].output();
                std::vector<float> dLdxh(x.size());
                double loss = 0.0;
                for (std::size_t k = 0; k < x.size(); ++k) {
                    const float d = xh[k] - x[k];
                    loss += 0.5 * double(d) * double(d);
                    dLdxh[k] = d * inv_b;
                }
                slot_loss[slot] += loss;
                auto dLdz = nn::backward_from(model.dec_spec, model.dec, dec_caches[j],
                                              dLdxh, dec_slots[slot]);
                dLdz[0] += float(opts.mmd_weight * mmd_grads[j].z1);
                dLdz[1] += float(opts.mmd_weight * mmd_grads[j].z2);
                nn::backward_from(model.enc_spec, model.enc, enc_caches[j], dLdz,
                                  enc_slots[slot]);
            }
        });

        double batch_loss = 0.0;
        for (double l : slot_loss) batch_loss += l;
        if (!std::isfinite(batch_loss)) {
            model.enc = enc_good;
            model.dec = dec_good;
            break;
        }
        cycle_loss_sum += batch_loss / double(batch) +
                          opts.mmd_weight * mmd_sq(latents, prior_pts);
        cycle_loss_n += 1;
        for (std::size_t t = 1; t < threads; ++t) {
            for (std::size_t li = 0; li < enc_slots[0].layers.size(); ++li) {
                kernels::ops<float>().axpy(enc_slots[0].layers[li].W.data(),
                                           enc_slots[t].layers[li].W.data(), 1.0f,
                                           enc_slots[0].layers[li].W.size());
                kernels::ops<float>().axpy(enc_slots[0].layers[li].b.data(),
                                           enc_slots[t].layers[li].b.data(), 1.0f,
                                           enc_slots[0].layers[li].b.size());
            }
            for (std::size_t li = 0; li < dec_slots[0].layers.size(); ++li) {
                kernels::ops<float>().axpy(dec_slots[0].layers[li].W.data(),
                                           dec_slots[t].layers[li].W.data(), 1.0f,
                                           dec_slots[0].layers[li].W.size());
                kernels::ops<float>().axpy(dec_slots[0].layers[li].b.data(),
                                           dec_slots[t].layers[li].b.data(), 1.0f,
                                           dec_slots[0].layers[li].b.size());
            }
        }
        nn::adam_step(model.enc, enc_slots[0], enc_adam, lr, config.adam);
        nn::adam_step(model.dec, dec_slots[0], dec_adam, lr, config.adam);

        if ((iter + 1) % config.cycle_length == 0) {
            model.final_train_loss = cycle_loss_sum / double(cycle_loss_n);
            cycle_loss_sum = 0.0;
            cycle_loss_n = 0;
            const double ev = val_recon();
            if (!std::isfinite(ev)) {
                model.enc = enc_good;
                model.dec = dec_good;
                break;
            }
            enc_good = model.enc;
            dec_good = model.dec;
            if (ev > prev_val) {
                if (++bad_streak >= config.patience) break;
            } else {
                bad_streak = 0;
            }
            prev_val = ev;
        }
    }
    return model;
}

std::vector<float> standardize(const AutoencoderModel& model, const std::vector<float>& h) {
    Standardizer s{model.mean, model.stdev};
    return standardize_with(s, h);
}

std::vector<float> destandardize(const AutoencoderModel& model,
                                 const std::vector<float>& h_std) {
    if (h_std.size() != model.mean.size()) throw Error("destandardize: width mismatch");
    std::vector<float> out(h_std.size());
    for (std::size_t k = 0; k < h_std.size(); ++k)
        out[k] = h_std[k] * model.stdev[k] + model.mean[k];
    return out;
}

LatentPoint encode(const AutoencoderModel& model, const std::vector<float>& h) {
    const auto x = standardize(model, h);
    auto fwd = nn::forward(model.enc_spec, model.enc, x);
    return {double(fwd.output[0]), double(fwd.output[1])};
}

std::vector<float> decode(const AutoencoderModel& model, const LatentPoint& z) {
    const std::vector<float> zin{float(z.z1), float(z.z2)};
    return nn::forward(model.dec_spec, model.dec, zin).output;
}

std::vector<LatentPoint> encode_all(const AutoencoderModel& model,
                                    const std::vector<ActivationRecord>& records,
                                    std::size_t threads) {
    std::vector<LatentPoint> out(records.size());
    parallel_chunks(records.size(), threads,
                    [&](std::size_t b0, std::size_t b1, std::size_t) {
                        for (std::size_t i = b0; i < b1; ++i)
                            out[i] = encode(model, records[i].h);
                    });
    return out;
}

EstimatorModel train_estimator(const AutoencoderModel& vae,
                               const std::vector<ActivationRecord>& records,
                               const nn::TrainConfig& config,
                               const EstimatorOptions& opts) {
    config.validate();
    if (records.empty()) throw Error("train_estimator: no records");

    EstimatorModel model;
    model.error_floor = opts.error_floor;
    model.spec = nn::make_mlp_spec(2, opts.hidden_layers, opts.hidden_width, 1,
                                   nn::Activation::Linear, config.dropout_keep);
    model.params = nn::init_params<float>(model.spec, mix64(config.seed, 0xe57));
    auto adam = nn::make_adam_state<float>(model.spec);

    const std::size_t threads = resolve_threads(config.threads);
    const auto latents = encode_all(vae, records, threads);
    std::vector<float> targets(records.size());
    for (std::size_t i = 0; i < records.size(); ++i)
        targets[i] = float(std::log10(records[i].e + opts.error_floor));

    auto [train_ids, val_ids] = carve_validation(records.size(), config.seed);

    const std::size_t batch = std::min(config.batch_size, train_ids.size());
    auto batch_rng = make_rng(mix64(config.seed, 0xba7c));
    std::uniform_int_distribution<std::size_t> pick(0, train_ids.size() - 1);

    std::vector<nn::Params> slots(threads, nn::zeros_like<float>(model.spec));
    std::vector<double> slot_loss(threads, 0.0);
    std::vector<std::size_t> batch_idx(batch);

    nn::Params good = model.params;
    double prev_val = std::numeric_limits<double>::infinity();
    std::size_t bad_streak = 0;

    auto val_loss = [&]() {
        if (val_ids.empty()) return 0.0;
        double s = 0.0;
        for (std::size_t j : val_ids) {
            const std::vector<float> zin{float(latents[j].z1), float(latents[j].z2)};
            auto fwd = nn::forward(model.spec, model.params, zin);
            const double d = double(fwd.output[0]) - double(targets[j]);
            s += 0.5 * d * d;
        }
        return s / double(val_ids.size());
    };

    const std::uint64_t total_iters =
        std::uint64_t(config.cycle_length) * config.num_cycles;

    for (std::uint64_t iter = 0; iter < total_iters; ++iter) {
        const double lr =
            nn::clr_lr(iter, config.cycle_length, config.lr_min, config.lr_max);
        for (std::size_t j = 0; j < batch; ++j) batch_idx[j] = train_ids[pick(batch_rng)];

        for (auto& g : slots) g.fill(0.0f);
        std::fill(slot_loss.begin(), slot_loss.end(), 0.0);

        parallel_chunks(batch, threads, [&](std::size_t b0, std::size_t b1, std::size_t slot) {
            for (std::size_t j = b0; j < b1; ++j) {
                const std::size_t si = batch_idx[j];
                auto rng = make_rng(mix64(config.seed, iter, j));
                const std::vector<float> zin{float(latents[si].z1), float(latents[si].z2)};
                auto cache = nn::forward_cache(model.spec, model.params, zin,
                                               nn::Mode::Train, &rng);
                const float d = cache.output()[0] - targets[si];
                slot_loss[slot] += 0.5 * double(d) * double(d);
                const std::vector<float> dLdy{d};
                nn::backward_from(model.spec, model.params, cache, dLdy, slots[slot]);
            }
        });

        double batch_loss = 0.0;
        for (double l : slot_loss) batch_loss += l;
        if (!std::isfinite(batch_loss)) {
            model.params = good;
            break;
        }
        for (std::size_t t = 1; t < threads; ++t) {
            for (std::size_t li = 0; li < slots[0].layers.size(); ++li) {
                kernels::ops<float>().axpy(slots[0].layers[li].W.data(),
                                           slots[t].layers[li].W.data(), 1.0f,
                                           slots[0].layers[li].W.size());
                kernels::ops<float>().axpy(slots[0].layers[li].b.data(),
                                           slots[t].layers[li].b.data(), 1.0f,
                                           slots[0].layers[li].b.size());
            }
        }
        for (auto& l : slots[0].layers) {
            kernels::ops<float>().scale(l.W.data(), 1.0f / float(batch), l.W.size());
            kernels::ops<float>().scale(l.b.data(), 1.0f / float(batch), l.b.size());
        }
        nn::adam_step(model.params, slots[0], adam, lr, config.adam);

        if ((iter + 1) % config.cycle_length == 0) {
            const double ev = val_loss();
            if (!std::isfinite(ev)) {
                model.params = good;
                break;
            }
            good = model.params;
            if (ev > prev_val) {
                if (++bad_streak >= config.patience) break;
            } else {
                bad_streak = 0;
            }
            prev_val = ev;
        }
    }
    return model;
}

double estimate_error(const EstimatorModel& est, const LatentPoint& z) {
    const std::vector<float> zin{float(z.z1), float(z.z2)};
    return double(nn::forward(est.spec, est.params, zin).output[0]);
}

} // namespace sintro
