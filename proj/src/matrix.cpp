#include "hsdla/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

namespace hsdla {

std::string shape_string(Index rows, Index cols) {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

MatrixView MatrixView::block(Index row0, Index col0, Index nrows, Index ncols) const {
  if (row0 + nrows > rows || col0 + ncols > cols) {
    throw ContractViolation("block " + shape_string(nrows, ncols) + " at (" + std::to_string(row0) +
                            "," + std::to_string(col0) + ") exceeds " + shape_string(rows, cols));
  }
  return {data + row0 + col0 * ld, nrows, ncols, ld};
}

ConstMatrixView ConstMatrixView::block(Index row0, Index col0, Index nrows, Index ncols) const {
  if (row0 + nrows > rows || col0 + ncols > cols) {
    throw ContractViolation("block " + shape_string(nrows, ncols) + " at (" + std::to_string(row0) +
                            "," + std::to_string(col0) + ") exceeds " + shape_string(rows, cols));
  }
  return {data + row0 + col0 * ld, nrows, ncols, ld};
}

ComplexDense::ComplexDense(Index rows, Index cols) : ComplexDense(rows, cols, rows) {}

ComplexDense::ComplexDense(Index rows, Index cols, Index leading_dimension)
    : rows_(rows), cols_(cols), ld_(std::max<Index>(leading_dimension, 1)) {
  if (leading_dimension < rows) {
    throw ContractViolation("leading dimension " + std::to_string(leading_dimension) +
                            " smaller than row count " + std::to_string(rows));
  }
  data_.assign(ld_ * cols_, Complex{});
}

ComplexDense ComplexDense::identity(Index n) {
  ComplexDense m(n, n);
  for (Index i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

ComplexDense ComplexDense::from_view(ConstMatrixView v) {
  ComplexDense m(v.rows, v.cols);
  copy_matrix(v, m.view());
  return m;
}

void ComplexDense::fill(Complex value) { std::fill(data_.begin(), data_.end(), value); }

bool ComplexDense::all_finite() const {
  for (Index j = 0; j < cols_; ++j)
    for (Index i = 0; i < rows_; ++i) {
      const Complex z = (*this)(i, j);
      if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
    }
  return true;
}

bool exactly_equal(ConstMatrixView a, ConstMatrixView b) {
  if (a.rows != b.rows || a.cols != b.cols) return false;
  for (Index j = 0; j < a.cols; ++j)
    for (Index i = 0; i < a.rows; ++i)
      if (a(i, j) != b(i, j)) return false;
  return true;
}

void copy_matrix(ConstMatrixView src, MatrixView dst) {
  if (src.rows != dst.rows || src.cols != dst.cols) {
    throw ContractViolation("copy from " + shape_string(src.rows, src.cols) + " into " +
                            shape_string(dst.rows, dst.cols));
  }
  if (src.rows == 0) return;
  for (Index j = 0; j < src.cols; ++j) {
    // memmove: compaction copies rows upwards within the same buffer
    std::memmove(static_cast<void*>(dst.column(j)), static_cast<const void*>(src.column(j)),
                 src.rows * sizeof(Complex));
  }
}

double frobenius_norm(ConstMatrixView a) {
  double sum = 0.0;
  for (Index j = 0; j < a.cols; ++j)
    for (Index i = 0; i < a.rows; ++i) sum += std::norm(a(i, j));
  return std::sqrt(sum);
}

ComplexDense conjugate_transpose(ConstMatrixView a) {
  ComplexDense out(a.cols, a.rows);
  for (Index j = 0; j < a.cols; ++j)
    for (Index i = 0; i < a.rows; ++i) out(j, i) = std::conj(a(i, j));
  return out;
}

AtomBlockLayout::AtomBlockLayout(std::vector<Index> heights)
    : AtomBlockLayout(heights, heights.size() *
                                   (heights.empty() ? 0 : *std::max_element(heights.begin(), heights.end()))) {}

AtomBlockLayout::AtomBlockLayout(std::vector<Index> heights, Index capacity_rows)
    : heights_(std::move(heights)), capacity_(capacity_rows) {
  offsets_.resize(heights_.size() + 1, 0);
  for (Index a = 0; a < heights_.size(); ++a) {
    if (heights_[a] == 0) throw ContractViolation("atom block " + std::to_string(a) + " has zero height");
    offsets_[a + 1] = offsets_[a] + heights_[a];
  }
  if (offsets_.back() > capacity_) {
    throw ContractViolation("stacked height " + std::to_string(offsets_.back()) + " exceeds capacity " +
                            std::to_string(capacity_));
  }
}

AtomBlockLayout AtomBlockLayout::uniform(Index atom_count, Index height) {
  return AtomBlockLayout(std::vector<Index>(atom_count, height));
}

Index AtomBlockLayout::max_height() const {
  return heights_.empty() ? 0 : *std::max_element(heights_.begin(), heights_.end());
}

}  // namespace hsdla
