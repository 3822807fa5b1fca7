// NEON variants for aarch64. Same contracts as the scalar reference; NEON is
// baseline on aarch64 so no runtime feature probe is needed beyond the
// architecture check.

#include "sintro/kernels.hpp"

#if defined(__aarch64__)

#include <arm_neon.h>

#include <cmath>

namespace sintro::kernels {
namespace {

// ---- float (4 lanes) ----

void matvec_f(const float* W, const float* x, const float* b, float* y,
              std::size_t rows, std::size_t cols) {
    const std::size_t vend = cols & ~std::size_t(3);
    for (std::size_t r = 0; r < rows; ++r) {
        const float* w = W + r * cols;
        float32x4_t acc = vdupq_n_f32(0.0f);
        std::size_t c = 0;
        for (; c < vend; c += 4)
            acc = vfmaq_f32(acc, vld1q_f32(w + c), vld1q_f32(x + c));
        float s = vaddvq_f32(acc);
        for (; c < cols; ++c) s += w[c] * x[c];
        y[r] = b ? s + b[r] : s;
    }
}

void matvec_t_f(const float* W, const float* yg, float* xg,
                std::size_t rows, std::size_t cols) {
    for (std::size_t c = 0; c < cols; ++c) xg[c] = 0.0f;
    const std::size_t vend = cols & ~std::size_t(3);
    for (std::size_t r = 0; r < rows; ++r) {
        const float* w = W + r * cols;
        const float32x4_t g = vdupq_n_f32(yg[r]);
        std::size_t c = 0;
        for (; c < vend; c += 4)
            vst1q_f32(xg + c, vfmaq_f32(vld1q_f32(xg + c), g, vld1q_f32(w + c)));
        const float gs = yg[r];
        for (; c < cols; ++c) xg[c] += gs * w[c];
    }
}

void ger_acc_f(float* W, const float* y, const float* x, float alpha,
               std::size_t rows, std::size_t cols) {
    const std::size_t vend = cols & ~std::size_t(3);
    for (std::size_t r = 0; r < rows; ++r) {
        float* w = W + r * cols;
        const float a = alpha * y[r];
        const float32x4_t av = vdupq_n_f32(a);
        std::size_t c = 0;
        for (; c < vend; c += 4)
            vst1q_f32(w + c, vfmaq_f32(vld1q_f32(w + c), av, vld1q_f32(x + c)));
        for (; c < cols; ++c) w[c] += a * x[c];
    }
}

void axpy_f(float* y, const float* x, float alpha, std::size_t n) {
    const float32x4_t av = vdupq_n_f32(alpha);
    const std::size_t vend = n & ~std::size_t(3);
    std::size_t i = 0;
    for (; i < vend; i += 4)
        vst1q_f32(y + i, vfmaq_f32(vld1q_f32(y + i), av, vld1q_f32(x + i)));
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void scale_f(float* x, float alpha, std::size_t n) {
    const float32x4_t av = vdupq_n_f32(alpha);
    const std::size_t vend = n & ~std::size_t(3);
    std::size_t i = 0;
    for (; i < vend; i += 4)
        vst1q_f32(x + i, vmulq_f32(av, vld1q_f32(x + i)));
    for (; i < n; ++i) x[i] *= alpha;
}

float dot_f(const float* a, const float* b, std::size_t n) {
    float32x4_t acc = vdupq_n_f32(0.0f);
    const std::size_t vend = n & ~std::size_t(3);
    std::size_t i = 0;
    for (; i < vend; i += 4)
        acc = vfmaq_f32(acc, vld1q_f32(a + i), vld1q_f32(b + i));
    float s = vaddvq_f32(acc);
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

float sum_sq_f(const float* a, std::size_t n) { return dot_f(a, a, n); }

void adam_f(float* p, const float* g, float* m, float* v, float lr,
            float beta1, float beta2, float eps, float bc1, float bc2,
            std::size_t n) {
    const float32x4_t b1 = vdupq_n_f32(beta1);
    const float32x4_t b2 = vdupq_n_f32(beta2);
    const float32x4_t ob1 = vdupq_n_f32(1.0f - beta1);
    const float32x4_t ob2 = vdupq_n_f32(1.0f - beta2);
    const float32x4_t rb1 = vdupq_n_f32(1.0f / bc1);
    const float32x4_t rb2 = vdupq_n_f32(1.0f / bc2);
    const float32x4_t lrv = vdupq_n_f32(lr);
    const float32x4_t epsv = vdupq_n_f32(eps);
    const std::size_t vend = n & ~std::size_t(3);
    std::size_t i = 0;
    for (; i < vend; i += 4) {
        const float32x4_t gv = vld1q_f32(g + i);
        float32x4_t mv = vfmaq_f32(vmulq_f32(b1, vld1q_f32(m + i)), ob1, gv);
        float32x4_t vv = vfmaq_f32(vmulq_f32(b2, vld1q_f32(v + i)), ob2, vmulq_f32(gv, gv));
        vst1q_f32(m + i, mv);
        vst1q_f32(v + i, vv);
        const float32x4_t mhat = vmulq_f32(mv, rb1);
        const float32x4_t denom = vaddq_f32(vsqrtq_f32(vmulq_f32(vv, rb2)), epsv);
        const float32x4_t step = vdivq_f32(vmulq_f32(lrv, mhat), denom);
        vst1q_f32(p + i, vsubq_f32(vld1q_f32(p + i), step));
    }
    for (; i < n; ++i) {
        m[i] = beta1 * m[i] + (1.0f - beta1) * g[i];
        v[i] = beta2 * v[i] + (1.0f - beta2) * g[i] * g[i];
        p[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
    }
}

// ---- double (2 lanes) ----

void matvec_d(const double* W, const double* x, const double* b, double* y,
              std::size_t rows, std::size_t cols) {
    const std::size_t vend = cols & ~std::size_t(1);
    for (std::size_t r = 0; r < rows; ++r) {
        const double* w = W + r * cols;
        float64x2_t acc = vdupq_n_f64(0.0);
        std::size_t c = 0;
        for (; c < vend; c += 2)
            acc = vfmaq_f64(acc, vld1q_f64(w + c), vld1q_f64(x + c));
        double s = vaddvq_f64(acc);
        for (; c < cols; ++c) s += w[c] * x[c];
        y[r] = b ? s + b[r] : s;
    }
}

void matvec_t_d(const double* W, const double* yg, double* xg,
                std::size_t rows, std::size_t cols) {
    for (std::size_t c = 0; c < cols; ++c) xg[c] = 0.0;
    const std::size_t vend = cols & ~std::size_t(1);
    for (std::size_t r = 0; r < rows; ++r) {
        const double* w = W + r * cols;
        const float64x2_t g = vdupq_n_f64(yg[r]);
        std::size_t c = 0;
        for (; c < vend; c += 2)
            vst1q_f64(xg + c, vfmaq_f64(vld1q_f64(xg + c), g, vld1q_f64(w + c)));
        const double gs = yg[r];
        for (; c < cols; ++c) xg[c] += gs * w[c];
    }
}

void ger_acc_d(double* W, const double* y, const double* x, double alpha,
               std::size_t rows, std::size_t cols) {
    const std::size_t vend = cols & ~std::size_t(1);
    for (std::size_t r = 0; r < rows; ++r) {
        double* w = W + r * cols;
        const double a = alpha * y[r];
        const float64x2_t av = vdupq_n_f64(a);
        std::size_t c = 0;
        for (; c < vend; c += 2)
            vst1q_f64(w + c, vfmaq_f64(vld1q_f64(w + c), av, vld1q_f64(x + c)));
        for (; c < cols; ++c) w[c] += a * x[c];
    }
}

void axpy_d(double* y, const double* x, double alpha, std::size_t n) {
    const float64x2_t av = vdupq_n_f64(alpha);
    const std::size_t vend = n & ~std::size_t(1);
    std::size_t i = 0;
    for (; i < vend; i += 2)
        vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), av, vld1q_f64(x + i)));
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void scale_d(double* x, double alpha, std::size_t n) {
    const float64x2_t av = vdupq_n_f64(alpha);
    const std::size_t vend = n & ~std::size_t(1);
    std::size_t i = 0;
    for (; i < vend; i += 2)
        vst1q_f64(x + i, vmulq_f64(av, vld1q_f64(x + i)));
    for (; i < n; ++i) x[i] *= alpha;
}

double dot_d(const double* a, const double* b, std::size_t n) {
    float64x2_t acc = vdupq_n_f64(0.0);
    const std::size_t vend = n & ~std::size_t(1);
    std::size_t i = 0;
    for (; i < vend; i += 2)
        acc = vfmaq_f64(acc, vld1q_f64(a + i), vld1q_f64(b + i));
    double s = vaddvq_f64(acc);
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

double sum_sq_d(const double* a, std::size_t n) { return dot_d(a, a, n); }

void adam_d(double* p, const double* g, double* m, double* v, double lr,
            double beta1, double beta2, double eps, double bc1, double bc2,
            std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
        p[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
    }
}

} // namespace

template <typename T> Ops<T> make_neon_ops();

template <> Ops<float> make_neon_ops<float>() {
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

template <> Ops<double> make_neon_ops<double>() {
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

#endif // aarch64
