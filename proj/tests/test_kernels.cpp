#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sintro/error.hpp"
#include "sintro/kernels.hpp"
#include "sintro/rng.hpp"

#include <cmath>
#include <vector>

using namespace sintro;
namespace K = sintro::kernels;

namespace {

template <typename T>
std::vector<T> random_vec(std::size_t n, std::mt19937_64& rng, double scale = 1.0) {
    std::uniform_real_distribution<double> d(-scale, scale);
    std::vector<T> v(n);
    for (auto& x : v) x = T(d(rng));
    return v;
}

template <typename T>
void check_close(const std::vector<T>& a, const std::vector<T>& b, double tol) {
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double denom = std::max({std::abs(double(a[i])), std::abs(double(b[i])), 1.0});
        CHECK(std::abs(double(a[i]) - double(b[i])) / denom < tol);
    }
}

// Sizes straddling vector widths to cover remainder loops.
const std::size_t kSizes[] = {1, 2, 3, 4, 5, 7, 8, 9, 15, 16, 17, 31, 64, 100};

template <typename T>
void equivalence_suite(K::Backend simd, double tol) {
    const auto& ref = K::ops<T>(K::Backend::Scalar);
    const auto& vec = K::ops<T>(simd);
    auto rng = make_rng(42);

    for (std::size_t rows : {std::size_t(1), std::size_t(3), std::size_t(8), std::size_t(17)}) {
        for (std::size_t cols : kSizes) {
            const auto W = random_vec<T>(rows * cols, rng);
            const auto x = random_vec<T>(cols, rng);
            const auto b = random_vec<T>(rows, rng);
            std::vector<T> y0(rows), y1(rows);
            ref.matvec(W.data(), x.data(), b.data(), y0.data(), rows, cols);
            vec.matvec(W.data(), x.data(), b.data(), y1.data(), rows, cols);
            check_close(y0, y1, tol);

            // null bias path
            ref.matvec(W.data(), x.data(), nullptr, y0.data(), rows, cols);
            vec.matvec(W.data(), x.data(), nullptr, y1.data(), rows, cols);
            check_close(y0, y1, tol);

            const auto yg = random_vec<T>(rows, rng);
            std::vector<T> xg0(cols), xg1(cols);
            ref.matvec_t(W.data(), yg.data(), xg0.data(), rows, cols);
            vec.matvec_t(W.data(), yg.data(), xg1.data(), rows, cols);
            check_close(xg0, xg1, tol);

            auto W0 = W, W1 = W;
            ref.ger_acc(W0.data(), yg.data(), x.data(), T(0.37), rows, cols);
            vec.ger_acc(W1.data(), yg.data(), x.data(), T(0.37), rows, cols);
            check_close(W0, W1, tol);
        }
    }

    for (std::size_t n : kSizes) {
        const auto x = random_vec<T>(n, rng);
        auto y0 = random_vec<T>(n, rng);
        auto y1 = y0;
        ref.axpy(y0.data(), x.data(), T(-1.5), n);
        vec.axpy(y1.data(), x.data(), T(-1.5), n);
        check_close(y0, y1, tol);

        auto s0 = x, s1 = x;
        ref.scale(s0.data(), T(0.25), n);
        vec.scale(s1.data(), T(0.25), n);
        check_close(s0, s1, tol);

        const auto b = random_vec<T>(n, rng);
        const double d0 = double(ref.dot(x.data(), b.data(), n));
        const double d1 = double(vec.dot(x.data(), b.data(), n));
        CHECK(std::abs(d0 - d1) / std::max(1.0, std::abs(d0)) < tol);

        const double q0 = double(ref.sum_sq(x.data(), n));
        const double q1 = double(vec.sum_sq(x.data(), n));
        CHECK(std::abs(q0 - q1) / std::max(1.0, q0) < tol);

        auto p0 = random_vec<T>(n, rng);
        auto p1 = p0;
        auto m0 = random_vec<T>(n, rng, 0.1);
        auto m1 = m0;
        auto v0 = random_vec<T>(n, rng, 0.1);
        for (auto& v : v0) v = std::abs(v);
        auto v1 = v0;
        const auto g = random_vec<T>(n, rng);
        const T bc1 = T(1) - T(std::pow(0.9, 7));
        const T bc2 = T(1) - T(std::pow(0.999, 7));
        ref.adam(p0.data(), g.data(), m0.data(), v0.data(), T(0.01), T(0.9), T(0.999),
                 T(1e-8), bc1, bc2, n);
        vec.adam(p1.data(), g.data(), m1.data(), v1.data(), T(0.01), T(0.9), T(0.999),
                 T(1e-8), bc1, bc2, n);
        check_close(p0, p1, tol);
        check_close(m0, m1, tol);
        check_close(v0, v1, tol);
    }
}

} // namespace

TEST_CASE("scalar matvec matches hand arithmetic") {
    // [1 2; 3 4] * [5, 6] + [0.5, -0.5] = [17.5, 38.5]
    const std::vector<double> W{1, 2, 3, 4};
    const std::vector<double> x{5, 6};
    const std::vector<double> b{0.5, -0.5};
    std::vector<double> y(2);
    K::ops<double>(K::Backend::Scalar).matvec(W.data(), x.data(), b.data(), y.data(), 2, 2);
    CHECK(y[0] == doctest::Approx(17.5));
    CHECK(y[1] == doctest::Approx(38.5));

    std::vector<double> xg(2);
    const std::vector<double> yg{1.0, 1.0};
    K::ops<double>(K::Backend::Scalar).matvec_t(W.data(), yg.data(), xg.data(), 2, 2);
    CHECK(xg[0] == doctest::Approx(4.0));
    CHECK(xg[1] == doctest::Approx(6.0));
}

TEST_CASE("simd backends match scalar reference") {
    bool any = false;
    if (K::backend_supported(K::Backend::Avx2)) {
        any = true;
        equivalence_suite<float>(K::Backend::Avx2, 2e-5);
        equivalence_suite<double>(K::Backend::Avx2, 1e-12);
    }
    if (K::backend_supported(K::Backend::Neon)) {
        any = true;
        equivalence_suite<float>(K::Backend::Neon, 2e-5);
        equivalence_suite<double>(K::Backend::Neon, 1e-12);
    }
    if (!any) {
        MESSAGE("no SIMD backend on this CPU; scalar only");
        CHECK(K::active_backend() == K::Backend::Scalar);
    }
}

TEST_CASE("backend selection and forcing") {
    const K::Backend initial = K::active_backend();
    CHECK(K::backend_supported(K::Backend::Scalar));
    K::force_backend(K::Backend::Scalar);
    CHECK(K::active_backend() == K::Backend::Scalar);
    CHECK_THROWS_AS(K::force_backend(K::backend_supported(K::Backend::Avx2)
                                         ? K::Backend::Neon
                                         : K::Backend::Avx2),
                    Error);
    K::force_backend(initial);
    CHECK(K::active_backend() == initial);
}
