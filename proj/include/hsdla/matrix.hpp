#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hsdla {

using Complex = std::complex<double>;
using Index = std::size_t;

/// Raised when an operation is called with arguments that break its contract
/// (shape mismatches, out-of-range indices, NaN inputs, ...).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Raised for inconsistent run or build configuration.
class ConfigurationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string shape_string(Index rows, Index cols);

/// Non-owning mutable view of a column-major complex matrix.
/// Element (i, j) lives at data[i + j * ld].
struct MatrixView {
  Complex* data = nullptr;
  Index rows = 0;
  Index cols = 0;
  Index ld = 0;

  Complex& operator()(Index i, Index j) const { return data[i + j * ld]; }
  Complex* column(Index j) const { return data + j * ld; }
  MatrixView block(Index row0, Index col0, Index nrows, Index ncols) const;
  MatrixView top_rows(Index nrows) const { return block(0, 0, nrows, cols); }
  bool empty() const { return rows == 0 || cols == 0; }
};

/// Non-owning read-only view of a column-major complex matrix.
struct ConstMatrixView {
  const Complex* data = nullptr;
  Index rows = 0;
  Index cols = 0;
  Index ld = 0;

  ConstMatrixView() = default;
  ConstMatrixView(const Complex* d, Index r, Index c, Index l) : data(d), rows(r), cols(c), ld(l) {}
  ConstMatrixView(const MatrixView& v) : data(v.data), rows(v.rows), cols(v.cols), ld(v.ld) {}

  const Complex& operator()(Index i, Index j) const { return data[i + j * ld]; }
  const Complex* column(Index j) const { return data + j * ld; }
  ConstMatrixView block(Index row0, Index col0, Index nrows, Index ncols) const;
  ConstMatrixView top_rows(Index nrows) const { return block(0, 0, nrows, cols); }
  bool empty() const { return rows == 0 || cols == 0; }
};

/// Owning column-major complex double matrix with an explicit leading
/// dimension. Storage is value-initialized (zero).
class ComplexDense {
 public:
  ComplexDense() = default;
  ComplexDense(Index rows, Index cols);
  ComplexDense(Index rows, Index cols, Index leading_dimension);

  static ComplexDense identity(Index n);
  static ComplexDense from_view(ConstMatrixView v);

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  Index leading_dimension() const { return ld_; }
  bool empty() const { return rows_ == 0 || cols_ == 0; }

  Complex& operator()(Index i, Index j) { return data_[i + j * ld_]; }
  const Complex& operator()(Index i, Index j) const { return data_[i + j * ld_]; }

  Complex* data() { return data_.data(); }
  const Complex* data() const { return data_.data(); }
  std::size_t storage_size() const { return data_.size(); }
  std::size_t storage_bytes() const { return data_.size() * sizeof(Complex); }

  MatrixView view() { return {data_.data(), rows_, cols_, ld_}; }
  ConstMatrixView view() const { return {data_.data(), rows_, cols_, ld_}; }
  MatrixView block(Index row0, Index col0, Index nrows, Index ncols) {
    return view().block(row0, col0, nrows, ncols);
  }
  ConstMatrixView block(Index row0, Index col0, Index nrows, Index ncols) const {
    return view().block(row0, col0, nrows, ncols);
  }

  void fill(Complex value);
  void set_zero() { fill(Complex{}); }
  bool all_finite() const;

 private:
  Index rows_ = 0;
  Index cols_ = 0;
  Index ld_ = 0;
  std::vector<Complex> data_;
};

/// Element-wise equality over the logical rows x cols region (padding ignored).
bool exactly_equal(ConstMatrixView a, ConstMatrixView b);

/// Copies src into dst; shapes must match. Overlapping views are allowed when
/// dst starts at or above src in the same column (row compaction).
void copy_matrix(ConstMatrixView src, MatrixView dst);

/// Frobenius norm over the logical region.
double frobenius_norm(ConstMatrixView a);

ComplexDense conjugate_transpose(ConstMatrixView a);

/// Row-block layout of per-atom matrices stacked on top of each other.
/// Block a occupies rows [offset(a), offset(a) + height(a)). The allocated
/// height (capacity) may exceed the used height.
class AtomBlockLayout {
 public:
  AtomBlockLayout() = default;
  /// Capacity defaults to atom_count * max(height).
  explicit AtomBlockLayout(std::vector<Index> heights);
  AtomBlockLayout(std::vector<Index> heights, Index capacity_rows);

  static AtomBlockLayout uniform(Index atom_count, Index height);

  Index atom_count() const { return heights_.size(); }
  Index height(Index atom) const { return heights_.at(atom); }
  Index offset(Index atom) const { return offsets_.at(atom); }
  const std::vector<Index>& heights() const { return heights_; }
  const std::vector<Index>& offsets() const { return offsets_; }
  Index total_rows() const { return offsets_.empty() ? 0 : offsets_.back(); }
  Index capacity_rows() const { return capacity_; }
  Index max_height() const;

  bool operator==(const AtomBlockLayout&) const = default;

 private:
  std::vector<Index> heights_;
  std::vector<Index> offsets_;  // size atom_count + 1
  Index capacity_ = 0;
};

}  // namespace hsdla
