#pragma once

#include <cstddef>

// Hot inner loops. Each kernel has a portable scalar reference and an AVX2
// variant; the dispatching entry points pick one at runtime.
namespace kelab::kernels {

enum class Backend { Scalar, Avx2 };

bool avx2Available();
Backend activeBackend();
// Forces a backend (tests, benchmarking). Requesting Avx2 on a machine
// without it falls back to Scalar.
void setBackend(Backend b);
const char* backendName(Backend b);

// sum_i a[i]*b[i]
double dot(const double* a, const double* b, std::size_t n);
// sum_i a[i]*b[i]*c[i]
double dot3(const double* a, const double* b, const double* c, std::size_t n);
// y = T x with T symmetric tridiagonal (diag[n], off[n-1]).
void tridiagApply(const double* diag, const double* off, const double* x,
                  double* y, std::size_t n);

// Monge-Ampere residual on one interior time row:
//   out[i] = Dtt u * Dss u - Dts u ^2 - eps*hpp[i],  i in [1, n-1)
// from rows prev/cur/next. out[0] and out[n-1] are left untouched.
struct MaStencil {
    double inv_dt2;
    double inv_ds2;
    double inv_4dtds;
    double eps;
};
void maResidualRow(const double* prev, const double* cur, const double* next,
                   const double* hpp, const MaStencil& st, double* out,
                   std::size_t n);

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
double dot3(const double* a, const double* b, const double* c, std::size_t n);
void tridiagApply(const double* diag, const double* off, const double* x,
                  double* y, std::size_t n);
void maResidualRow(const double* prev, const double* cur, const double* next,
                   const double* hpp, const MaStencil& st, double* out,
                   std::size_t n);
}  // namespace scalar

namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
double dot3(const double* a, const double* b, const double* c, std::size_t n);
void tridiagApply(const double* diag, const double* off, const double* x,
                  double* y, std::size_t n);
void maResidualRow(const double* prev, const double* cur, const double* next,
                   const double* hpp, const MaStencil& st, double* out,
                   std::size_t n);
}  // namespace avx2

}  // namespace kelab::kernels
