#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace hsdla {

enum class KernelKind : int {
  HermitianRankK = 0,
  HermitianRank2K,
  GeneralProduct,
  HermitianProduct,
  TriangularProduct,
  Cholesky,
  RowScale,
};

inline constexpr int kKernelKindCount = 7;

std::string_view kernel_kind_name(KernelKind kind);

/// Real floating-point operation counts per kernel kind, using the usual
/// complex BLAS conventions (4kn^2 for zherk, 8kn^2 for zher2k, ...).
class FlopLedger {
 public:
  void add(KernelKind kind, std::uint64_t flops) { counts_[static_cast<int>(kind)] += flops; }
  std::uint64_t operator[](KernelKind kind) const { return counts_[static_cast<int>(kind)]; }
  std::uint64_t total() const;
  void merge(const FlopLedger& other);

  bool operator==(const FlopLedger&) const = default;

 private:
  std::array<std::uint64_t, kKernelKindCount> counts_{};
};

// Closed-form counts shared by the kernels and the predictor.
constexpr std::uint64_t herk_flops(std::uint64_t k, std::uint64_t n) { return 4 * k * n * n; }
constexpr std::uint64_t her2k_flops(std::uint64_t k, std::uint64_t n) { return 8 * k * n * n; }
constexpr std::uint64_t gemm_flops(std::uint64_t m, std::uint64_t n, std::uint64_t k) { return 8 * m * n * k; }
constexpr std::uint64_t hemm_flops(std::uint64_t n, std::uint64_t m) { return 8 * n * n * m; }
constexpr std::uint64_t trmm_flops(std::uint64_t n, std::uint64_t m) { return 4 * n * n * m; }
/// (4/3) n^3, truncated to an integer.
constexpr std::uint64_t potrf_flops(std::uint64_t n) { return 4 * n * n * n / 3; }
constexpr std::uint64_t row_scale_flops(std::uint64_t m, std::uint64_t n) { return 2 * m * n; }

}  // namespace hsdla
