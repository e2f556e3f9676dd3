#include <atomic>
#include <cmath>
#include <cstdlib>
#include <string>

#include "okbc/error.hpp"
#include "okbc/kernels.hpp"

namespace okbc::kernels {
namespace {

bool cpu_supports(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
#if defined(OKBC_HAVE_AVX2)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::neon:
#if defined(OKBC_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

Isa detect() noexcept {
  if (const char* forced = std::getenv("OKBC_ISA")) {
    const std::string name(forced);
    for (Isa isa : {Isa::scalar, Isa::avx2, Isa::neon}) {
      if (name == isa_name(isa) && cpu_supports(isa)) return isa;
    }
  }
  if (cpu_supports(Isa::avx2)) return Isa::avx2;
  if (cpu_supports(Isa::neon)) return Isa::neon;
  return Isa::scalar;
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> table{&table_for(detect())};
  return table;
}

std::atomic<Isa>& current_isa() {
  static std::atomic<Isa> isa{detect()};
  return isa;
}

}  // namespace

std::string_view isa_name(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
    case Isa::neon: return "neon";
  }
  return "unknown";
}

std::vector<Isa> available_isas() {
  std::vector<Isa> out;
  for (Isa isa : {Isa::scalar, Isa::avx2, Isa::neon}) {
    if (cpu_supports(isa)) out.push_back(isa);
  }
  return out;
}

const KernelTable& table_for(Isa isa) {
  if (!cpu_supports(isa)) {
    throw Error(Errc::invalid_config, "kernel ISA not available: " + std::string(isa_name(isa)));
  }
  switch (isa) {
#if defined(OKBC_HAVE_AVX2)
    case Isa::avx2: return avx2_table();
#endif
#if defined(OKBC_HAVE_NEON)
    case Isa::neon: return neon_table();
#endif
    default: return scalar_table();
  }
}

Isa active_isa() noexcept { return current_isa().load(std::memory_order_relaxed); }

void set_active_isa(Isa isa) {
  const KernelTable& table = table_for(isa);
  current().store(&table, std::memory_order_relaxed);
  current_isa().store(isa, std::memory_order_relaxed);
}

const KernelTable& active() noexcept { return *current().load(std::memory_order_relaxed); }

double norm2(std::span<const double> x) { return std::sqrt(dot(x, x)); }

double normalize(std::span<double> x, double eps) {
  const double n = norm2(x);
  if (n >= eps) scale(1.0 / n, x);
  return n;
}

}  // namespace okbc::kernels
