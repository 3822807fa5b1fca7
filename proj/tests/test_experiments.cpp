#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sintro/experiments.hpp"
#include "sintro/rng.hpp"

#include <cmath>
#include <set>

using namespace sintro;

namespace {

// Small untrained stack over MNIST-shaped inputs; the tests here only need
// consistent wiring, not accuracy.
struct Stack {
    ClassifierModel model;
    AutoencoderModel vae;
    EstimatorModel est;
};

Stack make_stack(std::uint64_t seed) {
    Stack s;
    s.model.spec = nn::make_mlp_spec(Dataset::kInputDim, 2, 16, Dataset::kClasses,
                                     nn::Activation::Sigmoid);
    s.model.params = nn::init_params<float>(s.model.spec, seed);

    const std::size_t nh = s.model.spec.hidden_width_total();
    s.vae.enc_spec = nn::make_mlp_spec(nh, 1, 8, 2, nn::Activation::Linear);
    s.vae.dec_spec = nn::make_mlp_spec(2, 1, 8, nh, nn::Activation::Linear);
    s.vae.enc = nn::init_params<float>(s.vae.enc_spec, mix64(seed, 1));
    s.vae.dec = nn::init_params<float>(s.vae.dec_spec, mix64(seed, 2));
    s.vae.mean.assign(nh, 0.0f);
    s.vae.stdev.assign(nh, 1.0f);

    s.est.spec = nn::make_mlp_spec(2, 1, 8, 1, nn::Activation::Linear);
    s.est.params = nn::init_params<float>(s.est.spec, mix64(seed, 3));
    return s;
}

std::vector<float> random_input(std::uint64_t seed) {
    auto rng = make_rng(seed);
    std::uniform_real_distribution<float> d(0.0f, 1.0f);
    std::vector<float> x(Dataset::kInputDim);
    for (auto& v : x) v = d(rng);
    return x;
}

} // namespace

TEST_CASE("constellation: zero sigma collapses onto the base latent") {
    const Stack s = make_stack(3);
    const auto x = random_input(10);
    const auto cons = noise_constellation(s.model, s.vae, &s.est, x, 907,
                                          {0.0, 0.2}, 25, 42);
    REQUIRE(cons.size() == 2);
    CHECK(cons[0].sample_id == 907);
    CHECK(cons[0].sigma == 0.0);
    REQUIRE(cons[0].points.size() == 25);
    for (const auto& p : cons[0].points) {
        CHECK(p.z.z1 == cons[0].base.z1);
        CHECK(p.z.z2 == cons[0].base.z2);
        CHECK(p.displacement.z1 == 0.0);
        CHECK(p.displacement.z2 == 0.0);
    }
    // nonzero noise moves at least some points
    double moved = 0.0;
    for (const auto& p : cons[1].points)
        moved += std::hypot(p.displacement.z1, p.displacement.z2);
    CHECK(moved > 0.0);
}

TEST_CASE("constellation is deterministic under a fixed seed") {
    const Stack s = make_stack(4);
    const auto x = random_input(11);
    const auto a = noise_constellation(s.model, s.vae, nullptr, x, 0, {0.1}, 16, 7);
    const auto b = noise_constellation(s.model, s.vae, nullptr, x, 0, {0.1}, 16, 7);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a[0].points.size(); ++i) {
        CHECK(a[0].points[i].z.z1 == b[0].points[i].z.z1);
        CHECK(a[0].points[i].z.z2 == b[0].points[i].z.z2);
        CHECK(a[0].points[i].label == b[0].points[i].label);
    }
}

TEST_CASE("fgsm: zero epsilon is stationary") {
    const Stack s = make_stack(5);
    const auto x = random_input(12);
    const auto [initial_label, y0] = classify(s.model, x);

    FgsmOptions opts;
    opts.eps = 0.0;
    opts.max_steps = 5;
    const int wrong = (initial_label + 1) % 10;
    const auto traj = fgsm_attack(s.model, s.vae, x, 1, wrong, opts);
    CHECK(traj.success == (initial_label == wrong));
    // input never changes: every snapshot hashes the same
    for (const auto& st : traj.steps) CHECK(st.input_hash == traj.steps[0].input_hash);

    const auto vacuous = fgsm_attack(s.model, s.vae, x, 1, initial_label, opts);
    CHECK(vacuous.success);
    REQUIRE(vacuous.success_step.has_value());
    CHECK(*vacuous.success_step == 0);
    CHECK(vacuous.steps.size() == 1); // early stop at the start point
}

TEST_CASE("fgsm: per-step perturbation is exactly eps in sup norm") {
    const Stack s = make_stack(6);
    auto x = random_input(13);
    FgsmOptions opts;
    opts.eps = 0.01;
    opts.max_steps = 4;
    opts.continue_after_success = true;
    const int target = 3;
    const auto traj = fgsm_attack(s.model, s.vae, x, 2, target, opts);
    CHECK(traj.steps.size() == opts.max_steps + 1);
    CHECK(traj.eps == 0.01);

    // replay: recompute each step's input and compare the per-component move
    std::vector<float> cur = x;
    for (std::size_t st = 1; st < traj.steps.size(); ++st) {
        auto cache = nn::forward_cache(s.model.spec, s.model.params, cur,
                                       nn::Mode::Eval, nullptr);
        std::vector<float> dLdy(10);
        for (std::size_t u = 0; u < 10; ++u)
            dLdy[u] = cache.output()[u] - (u == std::size_t(target) ? 1.0f : 0.0f);
        auto scratch = nn::zeros_like<float>(s.model.spec);
        const auto dx = nn::backward_from(s.model.spec, s.model.params, cache, dLdy,
                                          scratch);
        std::size_t moved = 0;
        for (std::size_t i = 0; i < cur.size(); ++i) {
            const float before = cur[i];
            if (dx[i] > 0.0f)
                cur[i] -= 0.01f;
            else if (dx[i] < 0.0f)
                cur[i] += 0.01f;
            const float delta = std::abs(cur[i] - before);
            if (dx[i] != 0.0f) {
                CHECK(delta == doctest::Approx(0.01).epsilon(1e-4));
                ++moved;
            } else {
                CHECK(delta == 0.0f);
            }
        }
        CHECK(moved > 0);
        CHECK(traj.steps[st].input_hash ==
              fnv1a_bytes(cur.data(), cur.size() * sizeof(float)));
    }
}

TEST_CASE("fgsm: trajectory bookkeeping") {
    const Stack s = make_stack(7);
    const auto x = random_input(14);
    FgsmOptions opts;
    opts.eps = 0.05;
    opts.max_steps = 50;
    const auto traj = fgsm_attack(s.model, s.vae, x, 3, 4, opts);
    CHECK(traj.steps.size() <= opts.max_steps + 1);
    bool hit = false;
    for (const auto& st : traj.steps) hit = hit || st.label == traj.target;
    CHECK(traj.success == hit);
    if (traj.success) {
        REQUIRE(traj.success_step.has_value());
        CHECK(traj.steps[*traj.success_step].label == traj.target);
        CHECK(*traj.success_step + 1 == traj.steps.size()); // stopped on success
    }
    CHECK_THROWS_AS((void)fgsm_attack(s.model, s.vae, x, 0, 17, opts), Error);
}

TEST_CASE("violin report partitions the test set") {
    const Stack s = make_stack(8);
    Dataset test;
    auto rng = make_rng(15);
    std::uniform_int_distribution<int> lab(0, 9);
    for (int i = 0; i < 60; ++i) {
        test.inputs.push_back(random_input(mix64(16, std::uint64_t(i))));
        test.labels.push_back(lab(rng));
    }

    const auto report = violin_report(s.model, s.vae, s.est, test, 2);
    CHECK(report.total == 60);
    std::size_t bucketed = 0;
    double weighted_sens = 0.0;
    for (const auto& c : report.classes) {
        const std::size_t n = c.correct_e_log10.size() + c.miscl_e_log10.size();
        bucketed += n;
        weighted_sens += c.sensitivity * double(n);
    }
    CHECK(bucketed == 60); // every sample in exactly one bucket
    // class-weighted sensitivities reproduce overall accuracy
    CHECK(weighted_sens / 60.0 == doctest::Approx(report.overall_accuracy()).epsilon(1e-12));
}

TEST_CASE("median helper") {
    CHECK(median({3.0, 1.0, 2.0}) == 2.0);
    CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
    CHECK(std::isnan(median({})));
}
