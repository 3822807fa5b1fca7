#include "sintro/experiments.hpp"

#include "sintro/parallel.hpp"
#include "sintro/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sintro {

std::uint64_t fnv1a_bytes(const void* data, std::size_t size) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 1469598103934665603ULL;
    for (std::size_t i = 0; i < size; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
    return h;
}

namespace {

LatentPoint encode_input(const ClassifierModel& model, const AutoencoderModel& vae,
                         const std::vector<float>& x, std::vector<float>* y_hat_out,
                         int* label_out) {
    auto fwd = nn::forward(model.spec, model.params, x);
    int best = 0;
    for (std::size_t u = 1; u < fwd.output.size(); ++u)
        if (fwd.output[u] > fwd.output[std::size_t(best)]) best = int(u);
    if (label_out) *label_out = best;
    const auto h = nn::hidden_concat(fwd.hidden);
    if (y_hat_out) *y_hat_out = std::move(fwd.output);
    return encode(vae, h);
}

} // namespace

std::vector<Constellation> noise_constellation(const ClassifierModel& model,
                                               const AutoencoderModel& vae,
                                               const EstimatorModel* est,
                                               const std::vector<float>& x,
                                               std::size_t sample_id,
                                               const std::vector<double>& sigmas,
                                               std::size_t n_draws,
                                               std::uint64_t seed) {
    int base_label = 0;
    const LatentPoint base = encode_input(model, vae, x, nullptr, &base_label);

    std::vector<Constellation> out;
    out.reserve(sigmas.size());
    for (std::size_t si = 0; si < sigmas.size(); ++si) {
        Constellation c;
        c.sample_id = sample_id;
        c.sigma = sigmas[si];
        c.base = base;
        c.points.resize(n_draws);
        parallel_chunks(n_draws, 0, [&](std::size_t b0, std::size_t b1, std::size_t) {
            for (std::size_t d = b0; d < b1; ++d) {
                auto rng = make_rng(mix64(seed, si, d));
                const auto noisy = add_awgn(x, c.sigma, rng);
                ConstellationPoint& pt = c.points[d];
                pt.z = encode_input(model, vae, noisy, nullptr, &pt.label);
                pt.displacement = {pt.z.z1 - base.z1, pt.z.z2 - base.z2};
                if (est) pt.e_log10 = estimate_error(*est, pt.z);
            }
        });
        out.push_back(std::move(c));
    }
    return out;
}

ClassifierModel train_with_noise_injection(const Split& data,
                                           const nn::TrainConfig& config,
                                           const nn::NetworkSpec& arch,
                                           double sigma_max) {
    if (sigma_max < 0.0) throw Error("train_with_noise_injection: negative sigma_max");
    TrainClassifierOptions opts;
    opts.noise_sigma_max = sigma_max;
    return train_classifier(data, config, arch, opts);
}

AttackTrajectory fgsm_attack(const ClassifierModel& model, const AutoencoderModel& vae,
                             const std::vector<float>& x, std::size_t sample_id,
                             int target, const FgsmOptions& opts) {
    if (target < 0 || std::size_t(target) >= model.spec.output_width())
        throw Error("fgsm_attack: target class out of range");

    AttackTrajectory traj;
    traj.sample_id = sample_id;
    traj.target = target;
    traj.eps = opts.eps;

    std::vector<float> y_target(model.spec.output_width(), 0.0f);
    y_target[std::size_t(target)] = 1.0f;

    std::vector<float> cur = x;
    auto record = [&](const std::vector<float>& input) {
        AttackStep step;
        step.input_hash = fnv1a_bytes(input.data(), input.size() * sizeof(float));
        std::vector<float> y_hat;
        step.z = encode_input(model, vae, input, &y_hat, &step.label);
        step.y_hat = std::move(y_hat);
        traj.steps.push_back(std::move(step));
        return traj.steps.back().label;
    };

    int label = record(cur);
    if (label == target) {
        traj.success = true;
        traj.success_step = 0;
        if (!opts.continue_after_success) return traj;
    }

    nn::ParamsT<float> scratch = nn::zeros_like<float>(model.spec);
    for (std::size_t s = 1; s <= opts.max_steps; ++s) {
        auto cache = nn::forward_cache(model.spec, model.params, cur, nn::Mode::Eval,
                                       nullptr);
        std::vector<float> dLdy(y_target.size());
        for (std::size_t u = 0; u < dLdy.size(); ++u)
            dLdy[u] = cache.output()[u] - y_target[u];
        scratch.fill(0.0f);
        const auto dx = nn::backward_from(model.spec, model.params, cache, dLdy, scratch);
        for (std::size_t i = 0; i < cur.size(); ++i) {
            if (dx[i] > 0.0f)
                cur[i] -= float(opts.eps);
            else if (dx[i] < 0.0f)
                cur[i] += float(opts.eps);
        }
        label = record(cur);
        if (label == target && !traj.success) {
            traj.success = true;
            traj.success_step = s;
            if (!opts.continue_after_success) break;
        }
    }
    return traj;
}

double median(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double ViolinReport::overall_accuracy() const {
    if (total == 0) return 0.0;
    double correct = 0.0;
    for (const auto& c : classes) correct += double(c.correct_e_log10.size());
    return correct / double(total);
}

ViolinReport violin_report(const ClassifierModel& model, const AutoencoderModel& vae,
                           const EstimatorModel& est, const Dataset& test,
                           std::size_t threads) {
    ViolinReport report;
    report.classes.resize(Dataset::kClasses);
    for (int k = 0; k < Dataset::kClasses; ++k) report.classes[std::size_t(k)].cls = k;
    report.total = test.size();

    struct Row {
        int cls;
        bool correct;
        double e_log10;
    };
    std::vector<Row> rows(test.size());
    parallel_chunks(test.size(), threads, [&](std::size_t b0, std::size_t b1, std::size_t) {
        for (std::size_t i = b0; i < b1; ++i) {
            int label = 0;
            const LatentPoint z = encode_input(model, vae, test.inputs[i], nullptr, &label);
            rows[i] = {test.labels[i], label == test.labels[i], estimate_error(est, z)};
        }
    });
    for (const auto& r : rows) {
        auto& c = report.classes[std::size_t(r.cls)];
        (r.correct ? c.correct_e_log10 : c.miscl_e_log10).push_back(r.e_log10);
    }
    for (auto& c : report.classes) {
        const std::size_t n = c.correct_e_log10.size() + c.miscl_e_log10.size();
        c.sensitivity = n == 0 ? 0.0 : double(c.correct_e_log10.size()) / double(n);
    }
    return report;
}

} // namespace sintro
