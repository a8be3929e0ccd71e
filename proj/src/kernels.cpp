#include "sparse_armax/kernels.hpp"

#include <cmath>
#include <cstdlib>
#include <string>

namespace sparse_armax::kernels {
namespace {

double dot_scalar(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

void axpy_scalar(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

void symv_scalar(std::span<const double> a, std::size_t n, std::span<const double> x,
                 std::span<double> y) {
  // Column i of a symmetric matrix equals row i.
  for (std::size_t i = 0; i < n; ++i) y[i] = dot_scalar(a.subspan(i * n, n), x);
}

void ger_scalar(std::span<double> a, std::size_t rows, std::size_t cols, double alpha,
                std::span<const double> x, std::span<const double> y) {
  for (std::size_t j = 0; j < cols; ++j) {
    const double s = alpha * y[j];
    if (s == 0.0) continue;
    double* col = a.data() + j * rows;
    for (std::size_t i = 0; i < rows; ++i) col[i] += s * x[i];
  }
}

inline double signed_residual(double theta, double magnitude) {
  if (magnitude <= 0.0) return 0.0;
  return theta < 0.0 ? -magnitude : magnitude;
}

void soft_threshold_scalar(std::span<const double> theta, std::span<double> out, double gamma) {
  for (std::size_t i = 0; i < theta.size(); ++i)
    out[i] = signed_residual(theta[i], std::abs(theta[i]) - gamma);
}

void adaptive_shrink_scalar(std::span<const double> theta, std::span<double> out,
                            double scaled_lambda, double offset, double floor) {
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double mag = std::abs(theta[i]);
    const double denom = mag + offset;
    out[i] = denom <= floor ? 0.0 : signed_residual(theta[i], mag - scaled_lambda / denom);
  }
}

constexpr KernelTable kScalar{Isa::scalar,          dot_scalar,    axpy_scalar,
                              symv_scalar,          ger_scalar,    soft_threshold_scalar,
                              adaptive_shrink_scalar};

const KernelTable& pick() {
  if (const char* env = std::getenv("SPARSE_ARMAX_ISA"); env && std::string(env) == "scalar")
    return kScalar;
  if (const KernelTable* t = avx2_table()) return *t;
  return kScalar;
}

}  // namespace

const KernelTable& scalar_table() { return kScalar; }

const KernelTable* avx2_table() {
  static const bool ok = detail::cpu_has_avx2();
  return ok ? &detail::avx2_impl() : nullptr;
}

const KernelTable& active() {
  static const KernelTable& table = pick();
  return table;
}

std::string_view isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

void symmetrize(std::span<double> a, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = j + 1; i < n; ++i) {
      const double m = 0.5 * (a[i + j * n] + a[j + i * n]);
      a[i + j * n] = m;
      a[j + i * n] = m;
    }
}

}  // namespace sparse_armax::kernels
