#include "kelab/kernels.hpp"

#include <atomic>

namespace kelab::kernels {

namespace scalar {

double dot(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

double dot3(const double* a, const double* b, const double* c, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i] * c[i];
    return s;
}

void tridiagApply(const double* diag, const double* off, const double* x,
                  double* y, std::size_t n) {
    if (n == 0) return;
    if (n == 1) {
        y[0] = diag[0] * x[0];
        return;
    }
    y[0] = diag[0] * x[0] + off[0] * x[1];
    for (std::size_t i = 1; i + 1 < n; ++i)
        y[i] = off[i - 1] * x[i - 1] + diag[i] * x[i] + off[i] * x[i + 1];
    y[n - 1] = off[n - 2] * x[n - 2] + diag[n - 1] * x[n - 1];
}

void maResidualRow(const double* prev, const double* cur, const double* next,
                   const double* hpp, const MaStencil& st, double* out,
                   std::size_t n) {
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double utt = (next[i] - 2.0 * cur[i] + prev[i]) * st.inv_dt2;
        const double uss = (cur[i + 1] - 2.0 * cur[i] + cur[i - 1]) * st.inv_ds2;
        const double uts =
            (next[i + 1] - next[i - 1] - prev[i + 1] + prev[i - 1]) * st.inv_4dtds;
        out[i] = utt * uss - uts * uts - st.eps * hpp[i];
    }
}

}  // namespace scalar

namespace {

std::atomic<int> g_backend{-1};

Backend detect() {
    return avx2Available() ? Backend::Avx2 : Backend::Scalar;
}

}  // namespace

bool avx2Available() {
#if defined(__x86_64__) || defined(__i386__)
    return __builtin_cpu_supports("avx2");
#else
    return false;
#endif
}

Backend activeBackend() {
    int b = g_backend.load(std::memory_order_relaxed);
    if (b < 0) {
        b = static_cast<int>(detect());
        g_backend.store(b, std::memory_order_relaxed);
    }
    return static_cast<Backend>(b);
}

void setBackend(Backend b) {
    if (b == Backend::Avx2 && !avx2Available()) b = Backend::Scalar;
    g_backend.store(static_cast<int>(b), std::memory_order_relaxed);
}

const char* backendName(Backend b) {
    return b == Backend::Avx2 ? "avx2" : "scalar";
}

double dot(const double* a, const double* b, std::size_t n) {
    return activeBackend() == Backend::Avx2 ? avx2::dot(a, b, n) : scalar::dot(a, b, n);
}

double dot3(const double* a, const double* b, const double* c, std::size_t n) {
    return activeBackend() == Backend::Avx2 ? avx2::dot3(a, b, c, n)
                                            : scalar::dot3(a, b, c, n);
}

void tridiagApply(const double* diag, const double* off, const double* x,
                  double* y, std::size_t n) {
    if (activeBackend() == Backend::Avx2)
        avx2::tridiagApply(diag, off, x, y, n);
    else
        scalar::tridiagApply(diag, off, x, y, n);
}

void maResidualRow(const double* prev, const double* cur, const double* next,
                   const double* hpp, const MaStencil& st, double* out,
                   std::size_t n) {
    if (activeBackend() == Backend::Avx2)
        avx2::maResidualRow(prev, cur, next, hpp, st, out, n);
    else
        scalar::maResidualRow(prev, cur, next, hpp, st, out, n);
}

}  // namespace kelab::kernels
