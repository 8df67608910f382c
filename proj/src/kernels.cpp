#include "hsdla/kernels.hpp"

#include <cmath>
#include <numeric>

#include "backends.hpp"

namespace hsdla {
namespace {

std::string shape(ConstMatrixView v) { return shape_string(v.rows, v.cols); }

[[noreturn]] void mismatch(const char* op, const std::string& detail) {
  throw ContractViolation(std::string(op) + ": shape mismatch, " + detail);
}

bool finite(Complex z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

}  // namespace

std::string_view kernel_kind_name(KernelKind kind) {
  switch (kind) {
    case KernelKind::HermitianRankK: return "hermitian_rank_k";
    case KernelKind::HermitianRank2K: return "hermitian_rank_2k";
    case KernelKind::GeneralProduct: return "general_product";
    case KernelKind::HermitianProduct: return "hermitian_product";
    case KernelKind::TriangularProduct: return "triangular_product";
    case KernelKind::Cholesky: return "cholesky";
    case KernelKind::RowScale: return "row_scale";
  }
  return "unknown";
}

std::uint64_t FlopLedger::total() const { return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0}); }

void FlopLedger::merge(const FlopLedger& other) {
  for (int k = 0; k < kKernelKindCount; ++k) counts_[k] += other.counts_[k];
}

std::string_view backend_name(BackendKind kind) {
  return kind == BackendKind::Reference ? "reference" : "optimized";
}

BackendKind parse_backend(std::string_view name) {
  if (name == "reference") return BackendKind::Reference;
  if (name == "optimized") return BackendKind::Optimized;
  throw ConfigurationError("unknown backend '" + std::string(name) + "' (expected reference|optimized)");
}

bool optimized_backend_available() {
#ifdef HSDLA_HAVE_BLAS
  return true;
#else
  return false;
#endif
}

std::unique_ptr<KernelBackend> make_backend(BackendKind kind, int threads) {
  if (threads < 1) throw ConfigurationError("thread count must be >= 1, got " + std::to_string(threads));
  if (kind == BackendKind::Reference) return detail::make_reference_backend(threads);
#ifdef HSDLA_HAVE_BLAS
  return detail::make_blas_backend(threads);
#else
  throw ConfigurationError("optimized backend requested but the library was built without BLAS");
#endif
}

void hermitian_rank_k_update(const KernelBackend& backend, MatrixView c, ConstMatrixView a, FlopLedger& ledger) {
  if (c.rows != c.cols || a.cols != c.rows) {
    mismatch("hermitian_rank_k_update", "C " + shape(c) + ", A " + shape(a));
  }
  backend.herk(a, c);
  ledger.add(KernelKind::HermitianRankK, herk_flops(a.rows, a.cols));
}

void hermitian_rank_2k_update(const KernelBackend& backend, MatrixView c, ConstMatrixView x, ConstMatrixView b,
                              FlopLedger& ledger) {
  if (c.rows != c.cols || x.rows != b.rows || x.cols != b.cols || x.cols != c.rows) {
    mismatch("hermitian_rank_2k_update", "C " + shape(c) + ", X " + shape(x) + ", B " + shape(b));
  }
  backend.her2k(x, b, c);
  ledger.add(KernelKind::HermitianRank2K, her2k_flops(x.rows, x.cols));
}

void general_product(const KernelBackend& backend, MatrixView c, ConstMatrixView a, ConstMatrixView b,
                     bool conj_transpose_a, Complex alpha, Complex beta, FlopLedger& ledger) {
  const Index op_rows = conj_transpose_a ? a.cols : a.rows;
  const Index depth = conj_transpose_a ? a.rows : a.cols;
  if (op_rows != c.rows || depth != b.rows || b.cols != c.cols) {
    mismatch("general_product", "C " + shape(c) + ", op(A) from " + shape(a) + (conj_transpose_a ? "^H" : "") +
                                    ", B " + shape(b));
  }
  backend.gemm(conj_transpose_a, alpha, a, b, beta, c);
  ledger.add(KernelKind::GeneralProduct, gemm_flops(c.rows, c.cols, depth));
}

void hermitian_product(const KernelBackend& backend, MatrixView x, ConstMatrixView t, ConstMatrixView a,
                       bool accumulate, Complex alpha, FlopLedger& ledger) {
  if (t.rows != t.cols || a.rows != t.rows || x.rows != a.rows || x.cols != a.cols) {
    mismatch("hermitian_product", "X " + shape(x) + ", T " + shape(t) + ", A " + shape(a));
  }
  backend.hemm(alpha, t, a, accumulate ? Complex{1.0} : Complex{}, x);
  ledger.add(KernelKind::HermitianProduct, hemm_flops(t.rows, a.cols));
}

void triangular_product(const KernelBackend& backend, MatrixView y, ConstMatrixView c, ConstMatrixView a,
                        bool conj_transpose_c, FlopLedger& ledger) {
  if (c.rows != c.cols || a.rows != c.rows || y.rows != a.rows || y.cols != a.cols) {
    mismatch("triangular_product", "Y " + shape(y) + ", C " + shape(c) + ", A " + shape(a));
  }
  backend.trmm(conj_transpose_c, c, a, y);
  ledger.add(KernelKind::TriangularProduct, trmm_flops(c.rows, a.cols));
}

CholeskyOutcome cholesky_factor(const KernelBackend& backend, ConstMatrixView t, FlopLedger& ledger) {
  if (t.rows != t.cols) mismatch("cholesky_factor", "T " + shape(t) + " is not square");
  const Index n = t.rows;
  ComplexDense scratch(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = j; i < n; ++i) {
      if (!finite(t(i, j))) {
        throw ContractViolation("cholesky_factor: non-finite entry at (" + std::to_string(i) + "," +
                                std::to_string(j) + ")");
      }
      scratch(i, j) = t(i, j);
    }
  CholeskyOutcome outcome;
  if (const auto pivot = backend.potrf(scratch.view())) {
    outcome.failed_pivot = *pivot;
    return outcome;
  }
  for (Index j = 1; j < n; ++j)
    for (Index i = 0; i < j; ++i) scratch(i, j) = Complex{};
  ledger.add(KernelKind::Cholesky, potrf_flops(n));
  outcome.factor = std::move(scratch);
  return outcome;
}

void scale_rows(MatrixView b, std::span<const double> d, FlopLedger& ledger) {
  if (d.size() != b.rows) {
    throw ContractViolation("scale_rows: " + std::to_string(d.size()) + " factors for " + shape(b));
  }
  for (Index j = 0; j < b.cols; ++j) {
    Complex* col = b.column(j);
    for (Index i = 0; i < b.rows; ++i) col[i] *= d[i];
  }
  ledger.add(KernelKind::RowScale, row_scale_flops(b.rows, b.cols));
}

void mirror_lower_in_place(MatrixView c) {
  for (Index j = 0; j < c.cols; ++j) {
    c(j, j) = c(j, j).real();
    for (Index i = j + 1; i < c.rows; ++i) c(j, i) = std::conj(c(i, j));
  }
}

ComplexDense mirror_to_full(HermitianAccumulator acc) {
  mirror_lower_in_place(acc.view());
  return std::move(acc.matrix);
}

}  // namespace hsdla
