// SPDX-License-Identifier: Apache-2.0
#pragma once

// Dense double-precision kernels behind the matrix-factorization model:
// dot products, the paired SGD factor update, and row-vs-vector scoring.
// Every kernel has a scalar reference; AVX2/FMA and NEON variants are
// compiled when the toolchain allows and picked at runtime. Setting
// CRS_SIMD=scalar in the environment pins the scalar path.

#include <cstddef>
#include <span>
#include <string_view>

namespace crs::kernels {

enum class Isa { scalar, avx2, neon };

struct Table {
  Isa isa;
  double (*dot)(const double* a, const double* b, std::size_t n);
  /// p += lr * (err * q - reg * p);  q += lr * (err * p_old - reg * q)
  void (*sgd_pair)(double* p, double* q, std::size_t n, double err, double lr, double reg);
  /// out[r] = dot(rows[r * dim ...], v) for r in [0, count)
  void (*row_dots)(const double* rows, std::size_t count, std::size_t dim, const double* v, double* out);
};

std::string_view isa_name(Isa isa);

/// Compiled in and supported by this CPU.
bool available(Isa isa);

/// Throws crs::Error if `isa` is not available.
const Table& table(Isa isa);

/// Best available table, unless overridden with CRS_SIMD or set_active.
const Table& active();
void set_active(Isa isa);

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);
/// 0 when either vector has zero norm.
double cosine(std::span<const double> a, std::span<const double> b);
void sgd_pair(std::span<double> p, std::span<double> q, double err, double lr, double reg);
void row_dots(std::span<const double> rows, std::size_t dim, std::span<const double> v,
              std::span<double> out);

}  // namespace crs::kernels
