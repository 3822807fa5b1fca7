#pragma once

#include <cstddef>
#include <string>

// Dense-algebra inner loops used by the training engine. Every kernel has a
// scalar reference implementation plus vectorized variants (AVX2 on x86-64,
// NEON on aarch64) selected once at runtime. All matrices are row-major and
// contiguous.

namespace sintro::kernels {

enum class Backend { Scalar, Avx2, Neon };

const char* backend_name(Backend b);
bool backend_supported(Backend b);

// Backend in use for subsequent ops<T>() calls. Defaults to the widest
// supported vector ISA; the SINTRO_BACKEND environment variable
// ("scalar"/"avx2"/"neon") overrides the default at startup.
Backend active_backend();
void force_backend(Backend b); // throws Error if unsupported on this CPU

template <typename T>
struct Ops {
    // y = W x + b, W is rows x cols; b may be null (treated as zero)
    void (*matvec)(const T* W, const T* x, const T* b, T* y,
                   std::size_t rows, std::size_t cols);
    // xg = W^T yg
    void (*matvec_t)(const T* W, const T* yg, T* xg,
                     std::size_t rows, std::size_t cols);
    // W += alpha * y (outer) x, rank-1 accumulate
    void (*ger_acc)(T* W, const T* y, const T* x, T alpha,
                    std::size_t rows, std::size_t cols);
    // y += alpha * x
    void (*axpy)(T* y, const T* x, T alpha, std::size_t n);
    // x *= alpha
    void (*scale)(T* x, T alpha, std::size_t n);
    T (*dot)(const T* a, const T* b, std::size_t n);
    T (*sum_sq)(const T* a, std::size_t n);
    // Fused Adam step with precomputed bias corrections bc1 = 1-beta1^t,
    // bc2 = 1-beta2^t:
    //   m = beta1*m + (1-beta1)*g
    //   v = beta2*v + (1-beta2)*g^2
    //   p -= lr * (m/bc1) / (sqrt(v/bc2) + eps)
    void (*adam)(T* p, const T* g, T* m, T* v, T lr, T beta1, T beta2,
                 T eps, T bc1, T bc2, std::size_t n);
};

// Table for the active backend.
template <typename T> const Ops<T>& ops();
// Table for an explicit backend (equivalence tests). Throws if unsupported.
template <typename T> const Ops<T>& ops(Backend b);

extern template const Ops<float>& ops<float>();
extern template const Ops<double>& ops<double>();
extern template const Ops<float>& ops<float>(Backend);
extern template const Ops<double>& ops<double>(Backend);

} // namespace sintro::kernels
