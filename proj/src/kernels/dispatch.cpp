// SPDX-License-Identifier: Apache-2.0
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <string>

#include "crs/error.hpp"
#include "internal.hpp"

namespace crs::kernels {
namespace {

bool cpu_has(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#if defined(CRS_BUILD_AVX2) && (defined(__GNUC__) || defined(__clang__))
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::neon:
#if defined(CRS_BUILD_NEON)
      return true;  // mandatory on AArch64
#else
      return false;
#endif
  }
  return false;
}

const Table* pick_default() {
  const char* env = std::getenv("CRS_SIMD");
  if (env && std::string(env) == "scalar") return &detail::scalar_table();
  if (available(Isa::avx2)) return &table(Isa::avx2);
  if (available(Isa::neon)) return &table(Isa::neon);
  return &detail::scalar_table();
}

std::atomic<const Table*>& current() {
  static std::atomic<const Table*> t{pick_default()};
  return t;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
    case Isa::neon: return "neon";
  }
  return "?";
}

bool available(Isa isa) { return cpu_has(isa); }

const Table& table(Isa isa) {
  if (!available(isa)) throw Error("kernel set not available: " + std::string(isa_name(isa)));
  switch (isa) {
#if defined(CRS_BUILD_AVX2)
    case Isa::avx2: return detail::avx2_table();
#endif
#if defined(CRS_BUILD_NEON)
    case Isa::neon: return detail::neon_table();
#endif
    default: return detail::scalar_table();
  }
}

const Table& active() { return *current().load(std::memory_order_acquire); }

void set_active(Isa isa) { current().store(&table(isa), std::memory_order_release); }

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error("dot: length mismatch");
  return active().dot(a.data(), b.data(), a.size());
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double cosine(std::span<const double> a, std::span<const double> b) {
  const double na = norm(a);
  const double nb = norm(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot(a, b) / (na * nb);
}

void sgd_pair(std::span<double> p, std::span<double> q, double err, double lr, double reg) {
  if (p.size() != q.size()) throw Error("sgd_pair: length mismatch");
  active().sgd_pair(p.data(), q.data(), p.size(), err, lr, reg);
}

void row_dots(std::span<const double> rows, std::size_t dim, std::span<const double> v,
              std::span<double> out) {
  if (v.size() != dim || rows.size() != out.size() * dim) throw Error("row_dots: shape mismatch");
  active().row_dots(rows.data(), out.size(), dim, v.data(), out.data());
}

}  // namespace crs::kernels
