#pragma once

// Dense inner loops of the recursive estimators.
//
// Every kernel has a portable scalar reference and, on x86-64, an AVX2/FMA
// variant.  The variant is picked once at first use from the CPU feature
// flags; setting SPARSE_ARMAX_ISA=scalar in the environment pins the scalar
// path.  Matrices are column-major and contiguous (Eigen's default layout).

#include <cstddef>
#include <span>
#include <string_view>

namespace sparse_armax::kernels {

enum class Isa { scalar, avx2 };

struct KernelTable {
  Isa isa;
  double (*dot)(std::span<const double> x, std::span<const double> y);
  // y += alpha * x
  void (*axpy)(double alpha, std::span<const double> x, std::span<double> y);
  // y = A * x for symmetric n x n A
  void (*symv)(std::span<const double> a, std::size_t n, std::span<const double> x,
               std::span<double> y);
  // A += alpha * x * y^T, A is rows x cols
  void (*ger)(std::span<double> a, std::size_t rows, std::size_t cols, double alpha,
              std::span<const double> x, std::span<const double> y);
  // out = sgn(theta) * max(|theta| - gamma, 0)
  void (*soft_threshold)(std::span<const double> theta, std::span<double> out, double gamma);
  // out = sgn(theta) * max(|theta| - scaled_lambda / (|theta| + offset), 0), with
  // entries whose |theta| + offset <= floor forced to zero.
  void (*adaptive_shrink)(std::span<const double> theta, std::span<double> out,
                          double scaled_lambda, double offset, double floor);
};

const KernelTable& scalar_table();
// nullptr when the running CPU lacks AVX2+FMA or the build targets another arch.
const KernelTable* avx2_table();
const KernelTable& active();

std::string_view isa_name(Isa isa);

inline double dot(std::span<const double> x, std::span<const double> y) {
  return active().dot(x, y);
}
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x, y);
}
inline void symv(std::span<const double> a, std::size_t n, std::span<const double> x,
                 std::span<double> y) {
  active().symv(a, n, x, y);
}
inline void ger(std::span<double> a, std::size_t rows, std::size_t cols, double alpha,
                std::span<const double> x, std::span<const double> y) {
  active().ger(a, rows, cols, alpha, x, y);
}
inline void soft_threshold(std::span<const double> theta, std::span<double> out, double gamma) {
  active().soft_threshold(theta, out, gamma);
}
inline void adaptive_shrink(std::span<const double> theta, std::span<double> out,
                            double scaled_lambda, double offset, double floor) {
  active().adaptive_shrink(theta, out, scaled_lambda, offset, floor);
}

// Averages A and A^T in place; keeps rank-one downdated gain matrices symmetric.
void symmetrize(std::span<double> a, std::size_t n);

namespace detail {
const KernelTable& avx2_impl();
bool cpu_has_avx2();
}  // namespace detail

}  // namespace sparse_armax::kernels
