// SPDX-License-Identifier: Apache-2.0
#include "internal.hpp"

namespace crs::kernels::detail {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void sgd_pair_scalar(double* p, double* q, std::size_t n, double err, double lr, double reg) {
  for (std::size_t i = 0; i < n; ++i) {
    const double pi = p[i];
    const double qi = q[i];
    p[i] = pi + lr * (err * qi - reg * pi);
    q[i] = qi + lr * (err * pi - reg * qi);
  }
}

void row_dots_scalar(const double* rows, std::size_t count, std::size_t dim, const double* v,
                     double* out) {
  for (std::size_t r = 0; r < count; ++r) out[r] = dot_scalar(rows + r * dim, v, dim);
}

}  // namespace

const Table& scalar_table() {
  static const Table t{Isa::scalar, dot_scalar, sgd_pair_scalar, row_dots_scalar};
  return t;
}

}  // namespace crs::kernels::detail
