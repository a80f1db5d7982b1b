// SPDX-License-Identifier: Apache-2.0
// Built with -mavx2 -mfma; only reached after a runtime CPU check.
#include <immintrin.h>

#include "internal.hpp"

namespace crs::kernels::detail {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d shuf = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, shuf));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void sgd_pair_avx2(double* p, double* q, std::size_t n, double err, double lr, double reg) {
  const __m256d verr = _mm256_set1_pd(err);
  const __m256d vlr = _mm256_set1_pd(lr);
  const __m256d vreg = _mm256_set1_pd(reg);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d pv = _mm256_loadu_pd(p + i);
    const __m256d qv = _mm256_loadu_pd(q + i);
    // err * q - reg * p, then p + lr * (...)
    const __m256d gp = _mm256_fmsub_pd(verr, qv, _mm256_mul_pd(vreg, pv));
    const __m256d gq = _mm256_fmsub_pd(verr, pv, _mm256_mul_pd(vreg, qv));
    _mm256_storeu_pd(p + i, _mm256_fmadd_pd(vlr, gp, pv));
    _mm256_storeu_pd(q + i, _mm256_fmadd_pd(vlr, gq, qv));
  }
  for (; i < n; ++i) {
    const double pi = p[i];
    const double qi = q[i];
    p[i] = pi + lr * (err * qi - reg * pi);
    q[i] = qi + lr * (err * pi - reg * qi);
  }
}

void row_dots_avx2(const double* rows, std::size_t count, std::size_t dim, const double* v,
                   double* out) {
  for (std::size_t r = 0; r < count; ++r) out[r] = dot_avx2(rows + r * dim, v, dim);
}

}  // namespace

const Table& avx2_table() {
  static const Table t{Isa::avx2, dot_avx2, sgd_pair_avx2, row_dots_avx2};
  return t;
}

}  // namespace crs::kernels::detail
