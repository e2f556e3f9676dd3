#include "okbc/kernels.hpp"

namespace okbc::kernels {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scale_scalar(double alpha, double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

void dot_rows_scalar(const double* q, const double* rows, std::size_t n_rows, std::size_t dim,
                     double* out) {
  for (std::size_t r = 0; r < n_rows; ++r) out[r] = dot_scalar(q, rows + r * dim, dim);
}

}  // namespace

const KernelTable& scalar_table() noexcept {
  static const KernelTable table{dot_scalar, axpy_scalar, scale_scalar, dot_rows_scalar};
  return table;
}

}  // namespace okbc::kernels
