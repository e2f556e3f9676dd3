#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"
#include "okbc/kernels.hpp"

using namespace okbc;

namespace {

struct IsaGuard {
  kernels::Isa saved = kernels::active_isa();
  ~IsaGuard() { kernels::set_active_isa(saved); }
};

std::vector<double> random_vec(std::size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

}  // namespace

TEST_CASE("scalar kernels on hand values") {
  const auto& t = kernels::scalar_table();
  const double a[] = {1, 2, 3}, b[] = {4, -5, 6};
  CHECK(t.dot(a, b, 3) == 12.0);
  double y[] = {1, 1, 1};
  t.axpy(2.0, a, y, 3);
  CHECK(y[0] == 3.0);
  CHECK(y[2] == 7.0);
  t.scale(0.5, y, 3);
  CHECK(y[1] == 2.5);
  double out[2];
  const double rows[] = {1, 0, 0, 0, 1, 0};
  t.dot_rows(a, rows, 2, 3, out);
  CHECK(out[0] == 1.0);
  CHECK(out[1] == 2.0);
}

TEST_CASE("every available ISA matches the scalar reference") {
  IsaGuard guard;
  Rng rng(11);
  const auto& ref = kernels::scalar_table();
  for (auto isa : kernels::available_isas()) {
    CAPTURE(kernels::isa_name(isa));
    const auto& t = kernels::table_for(isa);
    for (std::size_t n = 0; n <= 67; ++n) {
      const auto a = random_vec(n, rng), b = random_vec(n, rng);
      const double expect = ref.dot(a.data(), b.data(), n);
      CHECK(std::abs(t.dot(a.data(), b.data(), n) - expect) <= 1e-12 * (1.0 + std::abs(expect)));

      auto y1 = b, y2 = b;
      ref.axpy(0.37, a.data(), y1.data(), n);
      t.axpy(0.37, a.data(), y2.data(), n);
      for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(y1[i] - y2[i]) <= 1e-15);

      auto s1 = a, s2 = a;
      ref.scale(-1.7, s1.data(), n);
      t.scale(-1.7, s2.data(), n);
      CHECK(s1 == s2);
    }
    const std::size_t dim = 13, n_rows = 9;
    const auto q = random_vec(dim, rng), m = random_vec(dim * n_rows, rng);
    std::vector<double> o1(n_rows), o2(n_rows);
    ref.dot_rows(q.data(), m.data(), n_rows, dim, o1.data());
    t.dot_rows(q.data(), m.data(), n_rows, dim, o2.data());
    for (std::size_t r = 0; r < n_rows; ++r) CHECK(std::abs(o1[r] - o2[r]) <= 1e-12);

    kernels::set_active_isa(isa);
    CHECK(kernels::active_isa() == isa);
  }
}

TEST_CASE("normalize returns the norm and leaves tiny vectors alone") {
  std::vector<double> v{3, 4};
  CHECK(kernels::normalize(v) == doctest::Approx(5.0));
  CHECK(v[0] == doctest::Approx(0.6));
  CHECK(kernels::norm2(v) == doctest::Approx(1.0));
  std::vector<double> z{1e-14, 0};
  kernels::normalize(z);
  CHECK(z[0] == 1e-14);
}
