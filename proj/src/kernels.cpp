#include "sintro/kernels.hpp"

#include "sintro/error.hpp"

#include <cstdlib>
#include <cstring>

namespace sintro::kernels {

template <typename T> Ops<T> make_scalar_ops();
#if defined(__x86_64__) || defined(_M_X64)
template <typename T> Ops<T> make_avx2_ops();
#endif
#if defined(__aarch64__)
template <typename T> Ops<T> make_neon_ops();
#endif

const char* backend_name(Backend b) {
    switch (b) {
        case Backend::Scalar: return "scalar";
        case Backend::Avx2: return "avx2";
        case Backend::Neon: return "neon";
    }
    return "?";
}

bool backend_supported(Backend b) {
    switch (b) {
        case Backend::Scalar:
            return true;
        case Backend::Avx2:
#if defined(__x86_64__) || defined(_M_X64)
            return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
            return false;
#endif
        case Backend::Neon:
#if defined(__aarch64__)
            return true;
#else
            return false;
#endif
    }
    return false;
}

namespace {

Backend pick_default() {
    if (const char* env = std::getenv("SINTRO_BACKEND")) {
        for (Backend b : {Backend::Scalar, Backend::Avx2, Backend::Neon}) {
            if (std::strcmp(env, backend_name(b)) == 0) {
                if (!backend_supported(b))
                    throw Error(std::string("SINTRO_BACKEND=") + env +
                                " is not supported on this CPU");
                return b;
            }
        }
        throw Error(std::string("unknown SINTRO_BACKEND value: ") + env);
    }
    if (backend_supported(Backend::Avx2)) return Backend::Avx2;
    if (backend_supported(Backend::Neon)) return Backend::Neon;
    return Backend::Scalar;
}

Backend& current() {
    static Backend b = pick_default();
    return b;
}

} // namespace

Backend active_backend() { return current(); }

void force_backend(Backend b) {
    if (!backend_supported(b))
        throw Error(std::string("backend not supported on this CPU: ") +
                    backend_name(b));
    current() = b;
}

template <typename T>
const Ops<T>& ops(Backend b) {
    static const Ops<T> scalar = make_scalar_ops<T>();
    switch (b) {
        case Backend::Scalar:
            return scalar;
        case Backend::Avx2: {
#if defined(__x86_64__) || defined(_M_X64)
            if (backend_supported(Backend::Avx2)) {
                static const Ops<T> avx2 = make_avx2_ops<T>();
                return avx2;
            }
#endif
            throw Error("avx2 backend not supported on this CPU");
        }
        case Backend::Neon: {
#if defined(__aarch64__)
            static const Ops<T> neon = make_neon_ops<T>();
            return neon;
#else
            throw Error("neon backend not supported on this CPU");
#endif
        }
    }
    throw Error("invalid kernel backend");
}

template <typename T>
const Ops<T>& ops() {
    return ops<T>(current());
}

template const Ops<float>& ops<float>();
template const Ops<double>& ops<double>();
template const Ops<float>& ops<float>(Backend);
template const Ops<double>& ops<double>(Backend);

} // namespace sintro::kernels
