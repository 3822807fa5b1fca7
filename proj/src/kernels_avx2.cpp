// AVX2+FMA variants of the dense kernels. Compiled with -mavx2 -mfma on
// x86-64 only; callers reach this code through the runtime dispatch table,
// which checks CPU support first.

#include "sintro/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <cmath>

namespace sintro::kernels {
namespace {

inline float hsum256(__m256 v) {
    __m128 lo = _mm256_castps256_ps128(v);
    __m128 hi = _mm256_extractf128_ps(v, 1);
    lo = _mm_add_ps(lo, hi);
    lo = _mm_hadd_ps(lo, lo);
    lo = _mm_hadd_ps(lo, lo);
    return _mm_cvtss_f32(lo);
}

inline double hsum256d(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    lo = _mm_add_sd(lo, _mm_unpackhi_pd(lo, lo));
    return _mm_cvtsd_f64(lo);
}

// ---- float (8 lanes) ----

void matvec_f(const float* W, const float* x, const float* b, float* y,
              std::size_t rows, std::size_t cols) {
    const std::size_t vend = cols & ~std::size_t(7);
    for (std::size_t r = 0; r < rows; ++r) {
        const float* w = W + r * cols;
        __m256 acc = _mm256_setzero_ps();
        std::size_t c = 0;
        for (; c < vend; c += 8)
            acc = _mm256_fmadd_ps(_mm256_loadu_ps(w + c), _mm256_loadu_ps(x + c), acc);
        float s = hsum256(acc);
        for (; c < cols; ++c) s += w[c] * x[c];
        y[r] = b ? s + b[r] : s;
    }
}

void matvec_t_f(const float* W, const float* yg, float* xg,
                std::size_t rows, std::size_t cols) {
    for (std::size_t c = 0; c < cols; ++c) xg[c] = 0.0f;
    const std::size_t vend = cols & ~std::size_t(7);
    for (std::size_t r = 0; r < rows; ++r) {
        const float* w = W + r * cols;
        const __m256 g = _mm256_set1_ps(yg[r]);
        std::size_t c = 0;
        for (; c < vend; c += 8) {
            __m256 acc = _mm256_fmadd_ps(g, _mm256_loadu_ps(w + c), _mm256_loadu_ps(xg + c));
            _mm256_storeu_ps(xg + c, acc);
        }
        const float gs = yg[r];
        for (; c < cols; ++c) xg[c] += gs * w[c];
    }
}

void ger_acc_f(float* W, const float* y, const float* x, float alpha,
               std::size_t rows, std::size_t cols) {
    const std::size_t vend = cols & ~std::size_t(7);
    for (std::size_t r = 0; r < rows; ++r) {
        float* w = W + r * cols;
        const float a = alpha * y[r];
        const __m256 av = _mm256_set1_ps(a);
        std::size_t c = 0;
        for (; c < vend; c += 8) {
            __m256 acc = _mm256_fmadd_ps(av, _mm256_loadu_ps(x + c), _mm256_loadu_ps(w + c));
            _mm256_storeu_ps(w + c, acc);
        }
        for (; c < cols; ++c) w[c] += a * x[c];
    }
}

void axpy_f(float* y, const float* x, float alpha, std::size_t n) {
    const __m256 av = _mm256_set1_ps(alpha);
    const std::size_t vend = n & ~std::size_t(7);
    std::size_t i = 0;
    for (; i < vend; i += 8) {
        __m256 acc = _mm256_fmadd_ps(av, _mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i));
        _mm256_storeu_ps(y + i, acc);
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void scale_f(float* x, float alpha, std::size_t n) {
    const __m256 av = _mm256_set1_ps(alpha);
    const std::size_t vend = n & ~std::size_t(7);
    std::size_t i = 0;
    for (; i < vend; i += 8)
        _mm256_storeu_ps(x + i, _mm256_mul_ps(av, _mm256_loadu_ps(x + i)));
    for (; i < n; ++i) x[i] *= alpha;
}

float dot_f(const float* a, const float* b, std::size_t n) {
    __m256 acc = _mm256_setzero_ps();
    const std::size_t vend = n & ~std::size_t(7);
    std::size_t i = 0;
    for (; i < vend; i += 8)
        acc = _mm256_fmadd_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i), acc);
    float s = hsum256(acc);
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

float sum_sq_f(const float* a, std::size_t n) { return dot_f(a, a, n); }

void adam_f(float* p, const float* g, float* m, float* v, float lr,
            float beta1, float beta2, float eps, float bc1, float bc2,
            std::size_t n) {
    const __m256 b1 = _mm256_set1_ps(beta1);
    const __m256 b2 = _mm256_set1_ps(beta2);
    const __m256 ob1 = _mm256_set1_ps(1.0f - beta1);
    const __m256 ob2 = _mm256_set1_ps(1.0f - beta2);
    const __m256 rb1 = _mm256_set1_ps(1.0f / bc1);
    const __m256 rb2 = _mm256_set1_ps(1.0f / bc2);
    const __m256 lrv = _mm256_set1_ps(lr);
    const __m256 epsv = _mm256_set1_ps(eps);
    const std::size_t vend = n & ~std::size_t(7);
    std::size_t i = 0;
    for (; i < vend; i += 8) {
        const __m256 gv = _mm256_loadu_ps(g + i);
        __m256 mv = _mm256_fmadd_ps(ob1, gv, _mm256_mul_ps(b1, _mm256_loadu_ps(m + i)));
        __m256 vv = _mm256_fmadd_ps(ob2, _mm256_mul_ps(gv, gv),
                                    _mm256_mul_ps(b2, _mm256_loadu_ps(v + i)));
        _mm256_storeu_ps(m + i, mv);
        _mm256_storeu_ps(v + i, vv);
        const __m256 mhat = _mm256_mul_ps(mv, rb1);
        const __m256 denom = _mm256_add_ps(_mm256_sqrt_ps(_mm256_mul_ps(vv, rb2)), epsv);
        const __m256 step = _mm256_div_ps(_mm256_mul_ps(lrv, mhat), denom);
        _mm256_storeu_ps(p + i, _mm256_sub_ps(_mm256_loadu_ps(p + i), step));
    }
    for (; i < n; ++i) {
        m[i] = beta1 * m[i] + (1.0f - beta1) * g[i];
        v[i] = beta2 * v[i] + (1.0f - beta2) * g[i] * g[i];
        p[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
    }
}

// ---- double (4 lanes) ----

void matvec_d(const double* W, const double* x, const double* b, double* y,
              std::size_t rows, std::size_t cols) {
    const std::size_t vend = cols & ~std::size_t(3);
    for (std::size_t r = 0; r < rows; ++r) {
        const double* w = W + r * cols;
        __m256d acc = _mm256_setzero_pd();
        std::size_t c = 0;
        for (; c < vend; c += 4)
            acc = _mm256_fmadd_pd(_mm256_loadu_pd(w + c), _mm256_loadu_pd(x + c), acc);
        double s = hsum256d(acc);
        for (; c < cols; ++c) s += w[c] * x[c];
        y[r] = b ? s + b[r] : s;
    }
}

void matvec_t_d(const double* W, const double* yg, double* xg,
                std::size_t rows, std::size_t cols) {
    for (std::size_t c = 0; c < cols; ++c) xg[c] = 0.0;
    const std::size_t vend = cols & ~std::size_t(3);
    for (std::size_t r = 0; r < rows; ++r) {
        const double* w = W + r * cols;
        const __m256d g = _mm256_set1_pd(yg[r]);
        std::size_t c = 0;
        for (; c < vend; c += 4) {
            __m256d acc = _mm256_fmadd_pd(g, _mm256_loadu_pd(w + c), _mm256_loadu_pd(xg + c));
            _mm256_storeu_pd(xg + c, acc);
        }
        const double gs = yg[r];
        for (; c < cols; ++c) xg[c] += gs * w[c];
    }
}

void ger_acc_d(double* W, const double* y, const double* x, double alpha,
               std::size_t rows, std::size_t cols) {
    const std::size_t vend = cols & ~std::size_t(3);
    for (std::size_t r = 0; r < rows; ++r) {
        double* w = W + r * cols;
        const double a = alpha * y[r];
        const __m256d av = _mm256_set1_pd(a);
        std::size_t c = 0;
        for (; c < vend; c += 4) {
            __m256d acc = _mm256_fmadd_pd(av, _mm256_loadu_pd(x + c), _mm256_loadu_pd(w + c));
            _mm256_storeu_pd(w + c, acc);
        }
        for (; c < cols; ++c) w[c] += a * x[c];
    }
}

void axpy_d(double* y, const double* x, double alpha, std::size_t n) {
    const __m256d av = _mm256_set1_pd(alpha);
    const std::size_t vend = n & ~std::size_t(3);
    std::size_t i = 0;
    for (; i < vend; i += 4) {
        __m256d acc = _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
        _mm256_storeu_pd(y + i, acc);
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void scale_d(double* x, double alpha, std::size_t n) {
    const __m256d av = _mm256_set1_pd(alpha);
    const std::size_t vend = n & ~std::size_t(3);
    std::size_t i = 0;
    for (; i < vend; i += 4)
        _mm256_storeu_pd(x + i, _mm256_mul_pd(av, _mm256_loadu_pd(x + i)));
    for (; i < n; ++i) x[i] *= alpha;
}

double dot_d(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    const std::size_t vend = n & ~std::size_t(3);
    std::size_t i = 0;
    for (; i < vend; i += 4)
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
    double s = hsum256d(acc);
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

double sum_sq_d(const double* a, std::size_t n) { return dot_d(a, a, n); }

void adam_d(double* p, const double* g, double* m, double* v, double lr,
            double beta1, double beta2, double eps, double bc1, double bc2,
            std::size_t n) {
    const __m256d b1 = _mm256_set1_pd(beta1);
    const __m256d b2 = _mm256_set1_pd(beta2);
    const __m256d ob1 = _mm256_set1_pd(1.0 - beta1);
    const __m256d ob2 = _mm256_set1_pd(1.0 - beta2);
    const __m256d rb1 = _mm256_set1_pd(1.0 / bc1);
    const __m256d rb2 = _mm256_set1_pd(1.0 / bc2);
    const __m256d lrv = _mm256_set1_pd(lr);
    const __m256d epsv = _mm256_set1_pd(eps);
    const std::size_t vend = n & ~std::size_t(3);
    std::size_t i = 0;
    for (; i < vend; i += 4) {
        const __m256d gv = _mm256_loadu_pd(g + i);
        __m256d mv = _mm256_fmadd_pd(ob1, gv, _mm256_mul_pd(b1, _mm256_loadu_pd(m + i)));
        __m256d vv = _mm256_fmadd_pd(ob2, _mm256_mul_pd(gv, gv),
                                     _mm256_mul_pd(b2, _mm256_loadu_pd(v + i)));
        _mm256_storeu_pd(m + i, mv);
        _mm256_storeu_pd(v + i, vv);
        const __m256d mhat = _mm256_mul_pd(mv, rb1);
        const __m256d denom = _mm256_add_pd(_mm256_sqrt_pd(_mm256_mul_pd(vv, rb2)), epsv);
        const __m256d step = _mm256_div_pd(_mm256_mul_pd(lrv, mhat), denom);
        _mm256_storeu_pd(p + i, _mm256_sub_pd(_mm256_loadu_pd(p + i), step));
    }
    for (; i < n; ++i) {
        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
        p[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
    }
}

} // namespace

template <typename T> Ops<T> make_avx2_ops();

template <> Ops<float> make_avx2_ops<float>() {
    Ops<float> t{};
    t.matvec = &matvec_f;
    t.matvec_t = &matvec_t_f;
    t.ger_acc = &ger_acc_f;
    t.axpy = &axpy_f;
    t.scale = &scale_f;
    t.dot = &dot_f;
    t.sum_sq = &sum_sq_f;
    t.adam = &adam_f;
    return t;
}

template <> Ops<double> make_avx2_ops<double>() {
    Ops<double> t{};
    t.matvec = &matvec_d;
    t.matvec_t = &matvec_t_d;
    t.ger_acc = &ger_acc_d;
    t.axpy = &axpy_d;
    t.scale = &scale_d;
    t.dot = &dot_d;
    t.sum_sq = &sum_sq_d;
    t.adam = &adam_d;
    return t;
}

} // namespace sintro::kernels

#endif // x86-64
