#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string_view>

#include "hsdla/flop_ledger.hpp"
#include "hsdla/matrix.hpp"

namespace hsdla {

enum class BackendKind { Reference, Optimized };

std::string_view backend_name(BackendKind kind);
BackendKind parse_backend(std::string_view name);

/// Raw level-3 kernels. Implementations do no argument checking; call them
/// through the checked free functions below. Every "lower" argument is read
/// and written in its lower triangle only.
class KernelBackend {
 public:
  virtual ~KernelBackend() = default;

  virtual BackendKind kind() const = 0;
  virtual int thread_count() const = 0;

  /// lower(c) += a^H a, a is k x n.
  virtual void herk(ConstMatrixView a, MatrixView c) const = 0;
  /// lower(c) += x^H b + b^H x, x and b are k x n.
  virtual void her2k(ConstMatrixView x, ConstMatrixView b, MatrixView c) const = 0;
  /// c = alpha op(a) b + beta c, op = identity or conjugate transpose.
  virtual void gemm(bool conj_transpose_a, Complex alpha, ConstMatrixView a, ConstMatrixView b, Complex beta,
                    MatrixView c) const = 0;
  /// x = alpha t a + beta x, t Hermitian (lower stored).
  virtual void hemm(Complex alpha, ConstMatrixView t, ConstMatrixView a, Complex beta, MatrixView x) const = 0;
  /// y = op(c) a, c lower triangular. y must not alias a.
  virtual void trmm(bool conj_transpose_c, ConstMatrixView c, ConstMatrixView a, MatrixView y) const = 0;
  /// In-place lower Cholesky t = c c^H. Returns the zero-based pivot index on
  /// failure, in which case t is left partially overwritten.
  virtual std::optional<Index> potrf(MatrixView t) const = 0;
};

bool optimized_backend_available();

/// threads < 1 is a configuration error, as is Optimized when the library was
/// built without BLAS.
std::unique_ptr<KernelBackend> make_backend(BackendKind kind, int threads = 1);

/// Lower-triangle accumulator for a Hermitian N x N result. The strict upper
/// triangle is unspecified until mirror_to_full.
struct HermitianAccumulator {
  ComplexDense matrix;

  HermitianAccumulator() = default;
  explicit HermitianAccumulator(Index n) : matrix(n, n) {}
  Index size() const { return matrix.rows(); }
  MatrixView view() { return matrix.view(); }
  ConstMatrixView view() const { return matrix.view(); }
};

// Checked kernels with FLOP accounting.

void hermitian_rank_k_update(const KernelBackend& backend, MatrixView c, ConstMatrixView a, FlopLedger& ledger);

void hermitian_rank_2k_update(const KernelBackend& backend, MatrixView c, ConstMatrixView x, ConstMatrixView b,
                              FlopLedger& ledger);

void general_product(const KernelBackend& backend, MatrixView c, ConstMatrixView a, ConstMatrixView b,
                     bool conj_transpose_a, Complex alpha, Complex beta, FlopLedger& ledger);

void hermitian_product(const KernelBackend& backend, MatrixView x, ConstMatrixView t, ConstMatrixView a,
                       bool accumulate, Complex alpha, FlopLedger& ledger);

void triangular_product(const KernelBackend& backend, MatrixView y, ConstMatrixView c, ConstMatrixView a,
                        bool conj_transpose_c, FlopLedger& ledger);

struct CholeskyOutcome {
  /// Lower-triangular factor with zeroed strict upper triangle; empty when the
  /// input is not HPD.
  std::optional<ComplexDense> factor;
  Index failed_pivot = 0;

  bool success() const { return factor.has_value(); }
};

/// Factors a scratch copy of t; t is never modified. NaN/Inf in the lower
/// triangle raises ContractViolation. FLOPs are charged on success only.
CholeskyOutcome cholesky_factor(const KernelBackend& backend, ConstMatrixView t, FlopLedger& ledger);

/// Multiplies row i of b by d[i].
void scale_rows(MatrixView b, std::span<const double> d, FlopLedger& ledger);

/// Copies the conjugate of the strict lower triangle into the strict upper
/// one and zeroes the imaginary part of the diagonal.
ComplexDense mirror_to_full(HermitianAccumulator acc);
void mirror_lower_in_place(MatrixView c);

}  // namespace hsdla
