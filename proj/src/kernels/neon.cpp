// SPDX-License-Identifier: Apache-2.0
#include <arm_neon.h>

#include "internal.hpp"

namespace crs::kernels::detail {
namespace {

double dot_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  double s = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void sgd_pair_neon(double* p, double* q, std::size_t n, double err, double lr, double reg) {
  const float64x2_t verr = vdupq_n_f64(err);
  const float64x2_t vlr = vdupq_n_f64(lr);
  const float64x2_t vreg = vdupq_n_f64(reg);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t pv = vld1q_f64(p + i);
    const float64x2_t qv = vld1q_f64(q + i);
    const float64x2_t gp = vfmsq_f64(vmulq_f64(verr, qv), vreg, pv);
    const float64x2_t gq = vfmsq_f64(vmulq_f64(verr, pv), vreg, qv);
    vst1q_f64(p + i, vfmaq_f64(pv, vlr, gp));
    vst1q_f64(q + i, vfmaq_f64(qv, vlr, gq));
  }
  for (; i < n; ++i) {
    const double pi = p[i];
    const double qi = q[i];
    p[i] = pi + lr * (err * qi - reg * pi);
    q[i] = qi + lr * (err * pi - reg * qi);
  }
}

void row_dots_neon(const double* rows, std::size_t count, std::size_t dim, const double* v,
                   double* out) {
  for (std::size_t r = 0; r < count; ++r) out[r] = dot_neon(rows + r * dim, v, dim);
}

}  // namespace

const Table& neon_table() {
  static const Table t{Isa::neon, dot_neon, sgd_pair_neon, row_dots_neon};
  return t;
}

}  // namespace crs::kernels::detail
