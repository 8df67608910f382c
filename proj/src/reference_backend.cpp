// Portable blocked kernels. Correctness first; the conj-dot tile is the only
// part written with performance in mind since herk/her2k/gemm^H dominate.

#include <algorithm>
#include <cmath>
#include <thread>
#include <vector>

#include "backends.hpp"

namespace hsdla::detail {
namespace {

constexpr Index kBlockCols = 64;
constexpr Index kBlockDepth = 256;

template <class Fn>
void parallel_blocks(Index nblocks, int threads, Fn&& fn) {
  if (threads <= 1 || nblocks <= 1) {
    for (Index b = 0; b < nblocks; ++b) fn(b);
    return;
  }
  const int workers = static_cast<int>(std::min<Index>(threads, nblocks));
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (Index b = w; b < nblocks; b += workers) fn(b);
    });
  }
  for (auto& t : pool) t.join();
}

// acc[0..7] += (conj(xa).ya, conj(xb).ya, conj(xa).yb, conj(xb).yb) over depth k,
// interleaved (re, im) pairs.
inline void conj_dot_2x2(const double* xa, const double* xb, const double* ya, const double* yb, Index k,
                         double* acc) {
  double r00 = 0, i00 = 0, r10 = 0, i10 = 0, r01 = 0, i01 = 0, r11 = 0, i11 = 0;
  for (Index p = 0; p < 2 * k; p += 2) {
    const double ar = xa[p], ai = xa[p + 1];
    const double br = xb[p], bi = xb[p + 1];
    const double cr = ya[p], ci = ya[p + 1];
    const double dr = yb[p], di = yb[p + 1];
    r00 += ar * cr + ai * ci;
    i00 += ar * ci - ai * cr;
    r10 += br * cr + bi * ci;
    i10 += br * ci - bi * cr;
    r01 += ar * dr + ai * di;
    i01 += ar * di - ai * dr;
    r11 += br * dr + bi * di;
    i11 += br * di - bi * dr;
  }
  acc[0] += r00;
  acc[1] += i00;
  acc[2] += r10;
  acc[3] += i10;
  acc[4] += r01;
  acc[5] += i01;
  acc[6] += r11;
  acc[7] += i11;
}

inline Complex conj_dot(const Complex* x, const Complex* y, Index k) {
  const double* xp = reinterpret_cast<const double*>(x);
  const double* yp = reinterpret_cast<const double*>(y);
  double re = 0, im = 0;
  for (Index p = 0; p < 2 * k; p += 2) {
    re += xp[p] * yp[p] + xp[p + 1] * yp[p + 1];
    im += xp[p] * yp[p + 1] - xp[p + 1] * yp[p];
  }
  return {re, im};
}

// c(i, j) += alpha * sum_k conj(x(k, i)) y(k, j) for the column block
// [j0, j1); rows restricted to i >= j when lower_only.
void conj_dot_columns(ConstMatrixView x, ConstMatrixView y, MatrixView c, Complex alpha, bool lower_only, Index j0,
                      Index j1) {
  const Index depth = x.rows;
  for (Index k0 = 0; k0 < depth; k0 += kBlockDepth) {
    const Index kb = std::min(kBlockDepth, depth - k0);
    for (Index i0 = lower_only ? (j0 / kBlockCols) * kBlockCols : 0; i0 < c.rows; i0 += kBlockCols) {
      const Index i1 = std::min(c.rows, i0 + kBlockCols);
      Index j = j0;
      for (; j + 1 < j1; j += 2) {
        const double* ya = reinterpret_cast<const double*>(y.column(j) + k0);
        const double* yb = reinterpret_cast<const double*>(y.column(j + 1) + k0);
        Index i = lower_only ? std::max(i0, j) : i0;
        for (; i + 1 < i1; i += 2) {
          double acc[8] = {0, 0, 0, 0, 0, 0, 0, 0};
          conj_dot_2x2(reinterpret_cast<const double*>(x.column(i) + k0),
                       reinterpret_cast<const double*>(x.column(i + 1) + k0), ya, yb, kb, acc);
          c(i, j) += alpha * Complex(acc[0], acc[1]);
          c(i + 1, j) += alpha * Complex(acc[2], acc[3]);
          if (!lower_only || i >= j + 1) c(i, j + 1) += alpha * Complex(acc[4], acc[5]);
          c(i + 1, j + 1) += alpha * Complex(acc[6], acc[7]);
        }
        for (; i < i1; ++i) {
          c(i, j) += alpha * conj_dot(x.column(i) + k0, y.column(j) + k0, kb);
          if (!lower_only || i >= j + 1) c(i, j + 1) += alpha * conj_dot(x.column(i) + k0, y.column(j + 1) + k0, kb);
        }
      }
      for (; j < j1; ++j) {
        for (Index i = lower_only ? std::max(i0, j) : i0; i < i1; ++i) {
          c(i, j) += alpha * conj_dot(x.column(i) + k0, y.column(j) + k0, kb);
        }
      }
    }
  }
}

void scale_columns(MatrixView c, Complex beta, Index j0, Index j1) {
  for (Index j = j0; j < j1; ++j) {
    Complex* col = c.column(j);
    if (beta == Complex{}) {
      std::fill(col, col + c.rows, Complex{});
    } else if (beta != Complex{1.0}) {
      for (Index i = 0; i < c.rows; ++i) col[i] *= beta;
    }
  }
}

class ReferenceBackend final : public KernelBackend {
 public:
  explicit ReferenceBackend(int threads) : threads_(threads) {}

  BackendKind kind() const override { return BackendKind::Reference; }
  int thread_count() const override { return threads_; }

  void herk(ConstMatrixView a, MatrixView c) const override {
    if (a.rows == 0) return;
    parallel_blocks(column_blocks(c.cols), threads_, [&](Index b) {
      const auto [j0, j1] = block_range(b, c.cols);
      conj_dot_columns(a, a, c, 1.0, true, j0, j1);
    });
  }

  void her2k(ConstMatrixView x, ConstMatrixView b, MatrixView c) const override {
    if (x.rows == 0) return;
    parallel_blocks(column_blocks(c.cols), threads_, [&](Index blk) {
      const auto [j0, j1] = block_range(blk, c.cols);
      conj_dot_columns(x, b, c, 1.0, true, j0, j1);
      conj_dot_columns(b, x, c, 1.0, true, j0, j1);
    });
  }

  void gemm(bool conj_transpose_a, Complex alpha, ConstMatrixView a, ConstMatrixView b, Complex beta,
            MatrixView c) const override {
    parallel_blocks(column_blocks(c.cols), threads_, [&](Index blk) {
      const auto [j0, j1] = block_range(blk, c.cols);
      scale_columns(c, beta, j0, j1);
      if (alpha == Complex{}) return;
      if (conj_transpose_a) {
        if (a.rows > 0) conj_dot_columns(a, b, c, alpha, false, j0, j1);
      } else {
        for (Index j = j0; j < j1; ++j) {
          Complex* cj = c.column(j);
          for (Index k = 0; k < a.cols; ++k) {
            const Complex s = alpha * b(k, j);
            const Complex* ak = a.column(k);
            for (Index i = 0; i < c.rows; ++i) cj[i] += ak[i] * s;
          }
        }
      }
    });
  }

  void hemm(Complex alpha, ConstMatrixView t, ConstMatrixView a, Complex beta, MatrixView x) const override {
    const Index n = t.rows;
    ComplexDense full(n, n);
    for (Index j = 0; j < n; ++j)
      for (Index i = j; i < n; ++i) {
        full(i, j) = t(i, j);
        full(j, i) = std::conj(t(i, j));
      }
    for (Index i = 0; i < n; ++i) full(i, i) = t(i, i).real();
    gemm(false, alpha, full.view(), a, beta, x);
  }

  void trmm(bool conj_transpose_c, ConstMatrixView c, ConstMatrixView a, MatrixView y) const override {
    const Index n = c.rows;
    for (Index j = 0; j < a.cols; ++j) {
      Complex* yj = y.column(j);
      const Complex* aj = a.column(j);
      if (conj_transpose_c) {
        for (Index i = 0; i < n; ++i) yj[i] = conj_dot(c.column(i) + i, aj + i, n - i);
      } else {
        std::fill(yj, yj + n, Complex{});
        for (Index k = 0; k < n; ++k) {
          const Complex s = aj[k];
          const Complex* ck = c.column(k);
          for (Index i = k; i < n; ++i) yj[i] += ck[i] * s;
        }
      }
    }
  }

  std::optional<Index> potrf(MatrixView t) const override {
    const Index n = t.rows;
    for (Index j = 0; j < n; ++j) {
      double d = t(j, j).real();
      for (Index k = 0; k < j; ++k) d -= std::norm(t(j, k));
      if (!(d > 0.0)) return j;
      const double ljj = std::sqrt(d);
      t(j, j) = ljj;
      for (Index i = j + 1; i < n; ++i) {
        Complex s = t(i, j);
        for (Index k = 0; k < j; ++k) s -= t(i, k) * std::conj(t(j, k));
        t(i, j) = s / ljj;
      }
    }
    return std::nullopt;
  }

 private:
  static Index column_blocks(Index cols) { return (cols + kBlockCols - 1) / kBlockCols; }
  static std::pair<Index, Index> block_range(Index b, Index cols) {
    return {b * kBlockCols, std::min(cols, (b + 1) * kBlockCols)};
  }

  int threads_;
};

}  // namespace

std::unique_ptr<KernelBackend> make_reference_backend(int threads) {
  return std::make_unique<ReferenceBackend>(threads);
}

}  // namespace hsdla::detail
