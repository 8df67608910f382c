// Kernel backend delegating to a tuned BLAS/LAPACK (OpenBLAS when available).

#include <cblas.h>

#include <algorithm>
#include <mutex>

#include "backends.hpp"

extern "C" {
void zpotrf_(const char* uplo, const int* n, void* a, const int* lda, int* info);
#ifdef HSDLA_HAVE_OPENBLAS_THREADS
void openblas_set_num_threads(int num_threads);
#endif
}

namespace hsdla::detail {
namespace {

int blas_int(Index v) { return static_cast<int>(v); }
int blas_ld(Index ld) { return std::max(1, static_cast<int>(ld)); }

class BlasBackend final : public KernelBackend {
 public:
  explicit BlasBackend(int threads) : threads_(threads) {
#ifdef HSDLA_HAVE_OPENBLAS_THREADS
    static std::mutex mutex;
    std::lock_guard lock(mutex);
    openblas_set_num_threads(threads);
#endif
  }

  BackendKind kind() const override { return BackendKind::Optimized; }
  int thread_count() const override { return threads_; }

  void herk(ConstMatrixView a, MatrixView c) const override {
    if (a.rows == 0 || c.rows == 0) return;
    cblas_zherk(CblasColMajor, CblasLower, CblasConjTrans, blas_int(c.rows), blas_int(a.rows), 1.0, a.data,
                blas_ld(a.ld), 1.0, c.data, blas_ld(c.ld));
  }

  void her2k(ConstMatrixView x, ConstMatrixView b, MatrixView c) const override {
    if (x.rows == 0 || c.rows == 0) return;
    const Complex one = 1.0;
    cblas_zher2k(CblasColMajor, CblasLower, CblasConjTrans, blas_int(c.rows), blas_int(x.rows), &one, x.data,
                 blas_ld(x.ld), b.data, blas_ld(b.ld), 1.0, c.data, blas_ld(c.ld));
  }

  void gemm(bool conj_transpose_a, Complex alpha, ConstMatrixView a, ConstMatrixView b, Complex beta,
            MatrixView c) const override {
    if (c.rows == 0 || c.cols == 0) return;
    const Index depth = conj_transpose_a ? a.rows : a.cols;
    if (depth == 0) {
      for (Index j = 0; j < c.cols; ++j)
        for (Index i = 0; i < c.rows; ++i) c(i, j) = beta == Complex{} ? Complex{} : beta * c(i, j);
      return;
    }
    cblas_zgemm(CblasColMajor, conj_transpose_a ? CblasConjTrans : CblasNoTrans, CblasNoTrans, blas_int(c.rows),
                blas_int(c.cols), blas_int(depth), &alpha, a.data, blas_ld(a.ld), b.data, blas_ld(b.ld), &beta,
                c.data, blas_ld(c.ld));
  }

  void hemm(Complex alpha, ConstMatrixView t, ConstMatrixView a, Complex beta, MatrixView x) const override {
    if (x.rows == 0 || x.cols == 0) return;
    cblas_zhemm(CblasColMajor, CblasLeft, CblasLower, blas_int(x.rows), blas_int(x.cols), &alpha, t.data,
                blas_ld(t.ld), a.data, blas_ld(a.ld), &beta, x.data, blas_ld(x.ld));
  }

  void trmm(bool conj_transpose_c, ConstMatrixView c, ConstMatrixView a, MatrixView y) const override {
    if (y.rows == 0 || y.cols == 0) return;
    copy_matrix(a, y);
    const Complex one = 1.0;
    cblas_ztrmm(CblasColMajor, CblasLeft, CblasLower, conj_transpose_c ? CblasConjTrans : CblasNoTrans,
                CblasNonUnit, blas_int(y.rows), blas_int(y.cols), &one, c.data, blas_ld(c.ld), y.data,
                blas_ld(y.ld));
  }

  std::optional<Index> potrf(MatrixView t) const override {
    if (t.rows == 0) return std::nullopt;
    const int n = blas_int(t.rows);
    const int lda = blas_ld(t.ld);
    int info = 0;
    zpotrf_("L", &n, t.data, &lda, &info);
    if (info < 0) throw ContractViolation("zpotrf rejected argument " + std::to_string(-info));
    if (info > 0) return static_cast<Index>(info - 1);
    return std::nullopt;
  }

 private:
  int threads_;
};

}  // namespace

std::unique_ptr<KernelBackend> make_blas_backend(int threads) { return std::make_unique<BlasBackend>(threads); }

}  // namespace hsdla::detail
