#pragma once
// Dense double-precision kernels used by every inner loop (LSTM cell,
// classifier layers, embedding geometry).
//
// Two primitives have hand-vectorized variants: dot and axpy. Everything
// else (matrix-vector products, rank-1 updates) is composed from them, so a
// single dispatch decision covers the whole numeric core.

#include <cstddef>
#include <span>
#include <string_view>

namespace toxigan::kernels {

enum class Isa { scalar, avx2, neon };

struct KernelTable {
  Isa isa;
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
};

// Per-ISA tables. The SIMD getters return nullptr when the variant was not
// compiled in for this target.
const KernelTable& scalar_table();
const KernelTable* avx2_table();
const KernelTable* neon_table();

bool cpu_supports(Isa isa);
std::string_view isa_name(Isa isa);

// Active table. Chosen once from the CPU features; TOXIGAN_KERNELS
// (scalar|avx2|neon|auto) overrides the choice when the request is supported.
const KernelTable& active();

// Forces a table for the rest of the process (tests, benchmarks). Throws
// DomainError if the ISA is not available.
void select(Isa isa);

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}

// y = A x (+ y when accumulate). A is rows x cols, row-major.
inline void gemv(const double* a, std::size_t rows, std::size_t cols, const double* x,
                 double* y, bool accumulate = false) {
  const auto& k = active();
  for (std::size_t r = 0; r < rows; ++r) {
    const double v = k.dot(a + r * cols, x, cols);
    y[r] = accumulate ? y[r] + v : v;
  }
}

// y += A^T x
inline void gemv_t(const double* a, std::size_t rows, std::size_t cols, const double* x,
                   double* y) {
  const auto& k = active();
  for (std::size_t r = 0; r < rows; ++r) {
    if (x[r] != 0.0) k.axpy(x[r], a + r * cols, y, cols);
  }
}

// A += alpha * u v^T
inline void ger(double alpha, const double* u, std::size_t rows, const double* v,
                std::size_t cols, double* a) {
  const auto& k = active();
  for (std::size_t r = 0; r < rows; ++r) {
    const double s = alpha * u[r];
    if (s != 0.0) k.axpy(s, v, a + r * cols, cols);
  }
}

}  // namespace toxigan::kernels
