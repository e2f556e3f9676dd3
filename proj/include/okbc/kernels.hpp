#pragma once

// Dense double-precision inner loops used across the library. Every kernel
// has a scalar reference implementation; AVX2 (x86-64) and NEON (aarch64)
// variants are compiled when available and selected once at startup from
// CPU feature detection. `OKBC_ISA=scalar|avx2|neon` overrides the choice.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace okbc::kernels {

enum class Isa { scalar, avx2, neon };

std::string_view isa_name(Isa isa) noexcept;

struct KernelTable {
  double (*dot)(const double* a, const double* b, std::size_t n);
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  void (*scale)(double alpha, double* x, std::size_t n);
  // out[r] = dot(query, rows + r * dim) for r in [0, n_rows)
  void (*dot_rows)(const double* query, const double* rows, std::size_t n_rows,
                   std::size_t dim, double* out);
};

const KernelTable& scalar_table() noexcept;
#if defined(OKBC_HAVE_AVX2)
const KernelTable& avx2_table() noexcept;
#endif
#if defined(OKBC_HAVE_NEON)
const KernelTable& neon_table() noexcept;
#endif

// ISAs compiled in AND supported by the running CPU; scalar always first.
std::vector<Isa> available_isas();
Isa active_isa() noexcept;
// Tests use this to run the same computation under each variant.
void set_active_isa(Isa isa);
const KernelTable& table_for(Isa isa);
const KernelTable& active() noexcept;

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}

inline void scale(double alpha, std::span<double> x) {
  active().scale(alpha, x.data(), x.size());
}

inline void dot_rows(std::span<const double> query, std::span<const double> rows,
                     std::span<double> out) {
  active().dot_rows(query.data(), rows.data(), out.size(), query.size(), out.data());
}

double norm2(std::span<const double> x);

// Scales x to unit L2 norm. Returns the original norm; leaves x untouched
// when the norm is below `eps`.
double normalize(std::span<double> x, double eps = 1e-12);

}  // namespace okbc::kernels
