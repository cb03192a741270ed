#include "kelab/kernels.hpp"

#if defined(__x86_64__) || defined(__i386__)
#include <immintrin.h>
#define KELAB_AVX2 __attribute__((target("avx2")))
#endif

namespace kelab::kernels::avx2 {

#ifdef KELAB_AVX2

namespace {

KELAB_AVX2 inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d sh = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

}  // namespace

KELAB_AVX2 double dot(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(a + i),
                                                 _mm256_loadu_pd(b + i)));
        acc1 = _mm256_add_pd(acc1, _mm256_mul_pd(_mm256_loadu_pd(a + i + 4),
                                                 _mm256_loadu_pd(b + i + 4)));
    }
    double s = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

KELAB_AVX2 double dot3(const double* a, const double* b, const double* c,
                       std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d ab = _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        acc = _mm256_add_pd(acc, _mm256_mul_pd(ab, _mm256_loadu_pd(c + i)));
    }
    double s = hsum(acc);
    for (; i < n; ++i) s += a[i] * b[i] * c[i];
    return s;
}

KELAB_AVX2 void tridiagApply(const double* diag, const double* off,
                             const double* x, double* y, std::size_t n) {
    if (n < 6) {
        scalar::tridiagApply(diag, off, x, y, n);
        return;
    }
    y[0] = diag[0] * x[0] + off[0] * x[1];
    std::size_t i = 1;
    for (; i + 4 < n; i += 4) {
        __m256d lo = _mm256_mul_pd(_mm256_loadu_pd(off + i - 1), _mm256_loadu_pd(x + i - 1));
        __m256d mid = _mm256_mul_pd(_mm256_loadu_pd(diag + i), _mm256_loadu_pd(x + i));
        __m256d hi = _mm256_mul_pd(_mm256_loadu_pd(off + i), _mm256_loadu_pd(x + i + 1));
        _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_add_pd(lo, mid), hi));
    }
    for (; i + 1 < n; ++i)
        y[i] = off[i - 1] * x[i - 1] + diag[i] * x[i] + off[i] * x[i + 1];
    y[n - 1] = off[n - 2] * x[n - 2] + diag[n - 1] * x[n - 1];
}

KELAB_AVX2 void maResidualRow(const double* prev, const double* cur,
                              const double* next, const double* hpp,
                              const MaStencil& st, double* out, std::size_t n) {
    const __m256d two = _mm256_set1_pd(2.0);
    const __m256d idt2 = _mm256_set1_pd(st.inv_dt2);
    const __m256d ids2 = _mm256_set1_pd(st.inv_ds2);
    const __m256d i4 = _mm256_set1_pd(st.inv_4dtds);
    const __m256d eps = _mm256_set1_pd(st.eps);
    std::size_t i = 1;
    for (; i + 4 < n; i += 4) {
        __m256d c0 = _mm256_loadu_pd(cur + i);
        __m256d utt = _mm256_mul_pd(
            _mm256_add_pd(_mm256_sub_pd(_mm256_loadu_pd(next + i), _mm256_mul_pd(two, c0)),
                          _mm256_loadu_pd(prev + i)),
            idt2);
        __m256d uss = _mm256_mul_pd(
            _mm256_add_pd(_mm256_sub_pd(_mm256_loadu_pd(cur + i + 1), _mm256_mul_pd(two, c0)),
                          _mm256_loadu_pd(cur + i - 1)),
            ids2);
        __m256d uts = _mm256_mul_pd(
            _mm256_add_pd(
                _mm256_sub_pd(_mm256_sub_pd(_mm256_loadu_pd(next + i + 1),
                                            _mm256_loadu_pd(next + i - 1)),
                              _mm256_loadu_pd(prev + i + 1)),
                _mm256_loadu_pd(prev + i - 1)),
            i4);
        __m256d r = _mm256_sub_pd(_mm256_sub_pd(_mm256_mul_pd(utt, uss), _mm256_mul_pd(uts, uts)),
                                  _mm256_mul_pd(eps, _mm256_loadu_pd(hpp + i)));
        _mm256_storeu_pd(out + i, r);
    }
    for (; i + 1 < n; ++i) {
        const double utt = (next[i] - 2.0 * cur[i] + prev[i]) * st.inv_dt2;
        const double uss = (cur[i + 1] - 2.0 * cur[i] + cur[i - 1]) * st.inv_ds2;
        const double uts =
            (next[i + 1] - next[i - 1] - prev[i + 1] + prev[i - 1]) * st.inv_4dtds;
        out[i] = utt * uss - uts * uts - st.eps * hpp[i];
    }
}

#else

double dot(const double* a, const double* b, std::size_t n) { return scalar::dot(a, b, n); }
double dot3(const double* a, const double* b, const double* c, std::size_t n) {
    return scalar::dot3(a, b, c, n);
}
void tridiagApply(const double* diag, const double* off, const double* x,
                  double* y, std::size_t n) {
    scalar::tridiagApply(diag, off, x, y, n);
}
void maResidualRow(const double* prev, const double* cur, const double* next,
                   const double* hpp, const MaStencil& st, double* out,
                   std::size_t n) {
    scalar::maResidualRow(prev, cur, next, hpp, st, out, n);
}

#endif

}  // namespace kelab::kernels::avx2
