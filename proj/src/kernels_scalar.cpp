#include "sintro/kernels.hpp"

#include <cmath>

namespace sintro::kernels {
namespace {

template <typename T>
void matvec_scalar(const T* W, const T* x, const T* b, T* y,
                   std::size_t rows, std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) {
        const T* w = W + r * cols;
        T acc = 0;
        for (std::size_t c = 0; c < cols; ++c) acc += w[c] * x[c];
        y[r] = b ? acc + b[r] : acc;
    }
}

template <typename T>
void matvec_t_scalar(const T* W, const T* yg, T* xg,
                     std::size_t rows, std::size_t cols) {
    for (std::size_t c = 0; c < cols; ++c) xg[c] = 0;
    for (std::size_t r = 0; r < rows; ++r) {
        const T* w = W + r * cols;
        const T g = yg[r];
        for (std::size_t c = 0; c < cols; ++c) xg[c] += g * w[c];
    }
}

template <typename T>
void ger_acc_scalar(T* W, const T* y, const T* x, T alpha,
                    std::size_t rows, std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) {
        T* w = W + r * cols;
        const T a = alpha * y[r];
        for (std::size_t c = 0; c < cols; ++c) w[c] += a * x[c];
    }
}

template <typename T>
void axpy_scalar(T* y, const T* x, T alpha, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

template <typename T>
void scale_scalar(T* x, T alpha, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

template <typename T>
T dot_scalar(const T* a, const T* b, std::size_t n) {
    T acc = 0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

template <typename T>
T sum_sq_scalar(const T* a, std::size_t n) {
    T acc = 0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * a[i];
    return acc;
}

template <typename T>
void adam_scalar(T* p, const T* g, T* m, T* v, T lr, T beta1, T beta2,
                 T eps, T bc1, T bc2, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        m[i] = beta1 * m[i] + (T(1) - beta1) * g[i];
        v[i] = beta2 * v[i] + (T(1) - beta2) * g[i] * g[i];
        const T mhat = m[i] / bc1;
        const T vhat = v[i] / bc2;
        p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
}

} // namespace

template <typename T>
Ops<T> make_scalar_ops() {
    Ops<T> t{};
    t.matvec = &matvec_scalar<T>;
    t.matvec_t = &matvec_t_scalar<T>;
    t.ger_acc = &ger_acc_scalar<T>;
    t.axpy = &axpy_scalar<T>;
    t.scale = &scale_scalar<T>;
    t.dot = &dot_scalar<T>;
    t.sum_sq = &sum_sq_scalar<T>;
    t.adam = &adam_scalar<T>;
    return t;
}

template Ops<float> make_scalar_ops<float>();
template Ops<double> make_scalar_ops<double>();

} // namespace sintro::kernels
