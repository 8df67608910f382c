#include "hsdla/builder.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>

namespace hsdla {
namespace {

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

/// Tracks bytes held by the large buffers of one build.
class MemoryTracker {
 public:
  void allocate(std::uint64_t bytes) {
    current_ += bytes;
    peak_ = std::max(peak_, current_);
  }
  void release(std::uint64_t bytes) { current_ -= std::min(current_, bytes); }
  std::uint64_t peak() const { return peak_; }

 private:
  std::uint64_t current_ = 0;
  std::uint64_t peak_ = 0;
};

std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b) {
  std::uint64_t r = 0;
  if (__builtin_mul_overflow(a, b, &r)) throw MemoryOverflowError("memory estimate overflows 64-bit byte count");
  return r;
}

std::uint64_t checked_add(std::uint64_t a, std::uint64_t b) {
  std::uint64_t r = 0;
  if (__builtin_add_overflow(a, b, &r)) throw MemoryOverflowError("memory estimate overflows 64-bit byte count");
  return r;
}

double hermitian_residual_of(ConstMatrixView t) {
  double diff = 0.0;
  double norm = 0.0;
  for (Index j = 0; j < t.cols; ++j)
    for (Index i = 0; i < t.rows; ++i) {
      diff += std::norm(t(i, j) - std::conj(t(j, i)));
      norm += std::norm(t(i, j));
    }
  return norm == 0.0 ? std::sqrt(diff) : std::sqrt(diff / norm);
}

void require_basis_view(const char* op, ConstMatrixView m, Index min_rows, Index basis_size) {
  if (m.rows < min_rows || m.cols != basis_size) {
    throw ContractViolation(std::string(op) + ": stack buffer " + shape_string(m.rows, m.cols) + " cannot hold " +
                            shape_string(min_rows, basis_size));
  }
}

}  // namespace

StackedCoefficients StackedCoefficients::zeros(AtomBlockLayout layout, Index basis_size) {
  StackedCoefficients c;
  const Index cap = layout.capacity_rows();
  c.a_star = ComplexDense(cap, basis_size);
  c.b_star = ComplexDense(cap, basis_size);
  c.udot_norms.assign(layout.total_rows(), 1.0);
  c.layout = std::move(layout);
  return c;
}

ConstMatrixView StackedCoefficients::a_block(Index atom) const {
  return a_star.block(layout.offset(atom), 0, layout.height(atom), basis_size());
}
ConstMatrixView StackedCoefficients::b_block(Index atom) const {
  return b_star.block(layout.offset(atom), 0, layout.height(atom), basis_size());
}
MatrixView StackedCoefficients::a_block(Index atom) {
  return a_star.block(layout.offset(atom), 0, layout.height(atom), basis_size());
}
MatrixView StackedCoefficients::b_block(Index atom) {
  return b_star.block(layout.offset(atom), 0, layout.height(atom), basis_size());
}

void StackedCoefficients::validate() const {
  const Index cap = layout.capacity_rows();
  if (a_star.rows() != cap || b_star.rows() != cap) {
    throw ContractViolation("coefficient stacks have " + std::to_string(a_star.rows()) + "/" +
                            std::to_string(b_star.rows()) + " rows, layout capacity is " + std::to_string(cap));
  }
  if (a_star.cols() != b_star.cols()) {
    throw ContractViolation("A* and B* disagree on the basis size: " + shape_string(a_star.rows(), a_star.cols()) +
                            " vs " + shape_string(b_star.rows(), b_star.cols()));
  }
  if (udot_norms.size() != layout.total_rows()) {
    throw ContractViolation("expected " + std::to_string(layout.total_rows()) + " udot norms, got " +
                            std::to_string(udot_norms.size()));
  }
}

TMatrixSet TMatrixSet::zeros(const AtomBlockLayout& layout) {
  TMatrixSet set;
  for (Index a = 0; a < layout.atom_count(); ++a) {
    const Index n = layout.height(a);
    set.atoms.push_back({ComplexDense(n, n), ComplexDense(n, n), ComplexDense(n, n), 0, 0});
  }
  return set;
}

std::vector<Index> TMatrixSet::sizes() const {
  std::vector<Index> out;
  out.reserve(atoms.size());
  for (const auto& t : atoms) out.push_back(t.size());
  return out;
}

void TMatrixSet::validate(const AtomBlockLayout& layout) const {
  if (atoms.size() != layout.atom_count()) {
    throw ContractViolation("T-matrix set has " + std::to_string(atoms.size()) + " atoms, layout has " +
                            std::to_string(layout.atom_count()));
  }
  for (Index a = 0; a < atoms.size(); ++a) {
    const auto& t = atoms[a];
    const Index n = t.size();
    for (const ComplexDense* m : {&t.aa, &t.ab, &t.bb}) {
      if (m->rows() != n || m->cols() != n) {
        throw ContractViolation("atom " + std::to_string(a) + ": T blocks are not all square " +
                                shape_string(n, n));
      }
    }
    if (n > layout.height(a)) {
      throw ContractViolation("atom " + std::to_string(a) + ": T size " + std::to_string(n) +
                              " exceeds coefficient block height " + std::to_string(layout.height(a)));
    }
  }
}

double TMatrixSet::hermitian_residual() const {
  double worst = 0.0;
  for (const auto& t : atoms) {
    worst = std::max(worst, hermitian_residual_of(t.aa.view()));
    worst = std::max(worst, hermitian_residual_of(t.bb.view()));
  }
  return worst;
}

HermitianAccumulator build_S(const KernelBackend& backend, StackedCoefficients& coeffs, FlopLedger& ledger) {
  coeffs.validate();
  const Index rows = coeffs.layout.total_rows();
  HermitianAccumulator s(coeffs.basis_size());
  hermitian_rank_k_update(backend, s.view(), coeffs.a_star.view().top_rows(rows), ledger);
  MatrixView b = coeffs.b_star.view().top_rows(rows);
  scale_rows(b, coeffs.udot_norms, ledger);
  hermitian_rank_k_update(backend, s.view(), b, ledger);
  return s;
}

void build_H_ABBA_BB(const KernelBackend& backend, StackedCoefficients& coeffs, const TMatrixSet& tmats,
                     HermitianAccumulator& h, MatrixView z_stack, FlopLedger& ledger) {
  coeffs.validate();
  tmats.validate(coeffs.layout);
  const Index ng = coeffs.basis_size();
  if (h.size() != ng) {
    throw ContractViolation("build_H_ABBA_BB: H is " + shape_string(h.size(), h.size()) + ", basis size " +
                            std::to_string(ng));
  }
  const auto sizes = tmats.sizes();
  const Index compact_rows = std::accumulate(sizes.begin(), sizes.end(), Index{0});
  require_basis_view("build_H_ABBA_BB", z_stack, compact_rows, ng);

  const Index max_t = sizes.empty() ? 0 : *std::max_element(sizes.begin(), sizes.end());
  ComplexDense scratch(max_t, ng);
  Index packed = 0;
  for (Index a = 0; a < coeffs.atom_count(); ++a) {
    const auto& t = tmats.atoms[a];
    const Index n = t.size();
    const Index offset = coeffs.layout.offset(a);
    ConstMatrixView a_a = coeffs.a_star.view().block(offset, 0, n, ng);
    MatrixView b_a = coeffs.b_star.view().block(offset, 0, n, ng);
    MatrixView z_a = scratch.view().top_rows(n);
    // Z_a = T_BA A_a + 1/2 T_BB B_a with T_BA = T_AB^H
    general_product(backend, z_a, t.ab.view(), a_a, true, 1.0, 0.0, ledger);
    hermitian_product(backend, z_a, t.bb.view(), b_a, true, 0.5, ledger);
    copy_matrix(z_a, z_stack.block(packed, 0, n, ng));
    copy_matrix(b_a, coeffs.b_star.view().block(packed, 0, n, ng));
    packed += n;
  }
  hermitian_rank_2k_update(backend, h.view(), z_stack.top_rows(packed), coeffs.b_star.view().top_rows(packed),
                           ledger);
}

void build_H_AA(const KernelBackend& backend, StackedCoefficients& coeffs, const TMatrixSet& tmats,
                HermitianAccumulator& h, const BuildConfig& config, MatrixView xy_stack, FlopLedger& ledger,
                BuildReport& report) {
  coeffs.validate();
  tmats.validate(coeffs.layout);
  const Index ng = coeffs.basis_size();
  if (h.size() != ng) {
    throw ContractViolation("build_H_AA: H is " + shape_string(h.size(), h.size()) + ", basis size " +
                            std::to_string(ng));
  }
  const auto sizes = tmats.sizes();
  const Index compact_rows = std::accumulate(sizes.begin(), sizes.end(), Index{0});
  require_basis_view("build_H_AA", xy_stack, compact_rows, ng);

  Index top = 0;                   // X_nonHPD rows in xy_stack, A_nonHPD rows in A*
  Index bottom = xy_stack.rows;    // Y_HPD occupies [bottom, xy_stack.rows)
  report.hpd_mask.assign(coeffs.atom_count(), false);
  report.hpd_atom_count = 0;
  report.non_hpd_atom_count = 0;

  for (Index a = 0; a < coeffs.atom_count(); ++a) {
    const auto& t = tmats.atoms[a];
    const Index n = t.size();
    ConstMatrixView a_a = coeffs.a_star.view().block(coeffs.layout.offset(a), 0, n, ng);
    std::optional<ComplexDense> factor;
    if (!config.force_general_path) factor = cholesky_factor(backend, t.aa.view(), ledger).factor;
    if (factor) {
      triangular_product(backend, xy_stack.block(bottom - n, 0, n, ng), factor->view(), a_a, true, ledger);
      bottom -= n;
      report.hpd_mask[a] = true;
      ++report.hpd_atom_count;
    } else {
      hermitian_product(backend, xy_stack.block(top, 0, n, ng), t.aa.view(), a_a, false, 1.0, ledger);
      copy_matrix(a_a, coeffs.a_star.view().block(top, 0, n, ng));
      top += n;
      ++report.non_hpd_atom_count;
    }
    if (top > bottom) throw std::logic_error("build_H_AA: X and Y stacks collided");
  }

  if (top > 0) {
    general_product(backend, h.view(), coeffs.a_star.view().top_rows(top), xy_stack.top_rows(top), true, 1.0, 1.0,
                    ledger);
  }
  if (bottom < xy_stack.rows) {
    hermitian_rank_k_update(backend, h.view(), xy_stack.block(bottom, 0, xy_stack.rows - bottom, ng), ledger);
  }
}

BuildResult build_all(StackedCoefficients coeffs, const TMatrixSet& tmats, const BuildConfig& config,
                      const RegenerateFn& regenerate) {
  if (config.thread_count < 1) throw ConfigurationError("thread_count must be >= 1");
  if (!config.backup && !regenerate) {
    throw ConfigurationError("backup disabled but no regeneration callback was supplied");
  }
  coeffs.validate();
  tmats.validate(coeffs.layout);
  const auto backend = make_backend(config.backend, config.thread_count);

  BuildReport report;
  report.thread_count = config.thread_count;
  report.backend = config.backend;
  const Index ng = coeffs.basis_size();
  const Index atoms = coeffs.atom_count();
  report.predicted_bytes = atoms == 0 || ng == 0 ? 0 : estimate_memory(atoms, coeffs.layout.max_height(), ng, config.backup);

  MemoryTracker memory;
  const std::uint64_t stack_bytes = coeffs.a_star.storage_bytes() + coeffs.b_star.storage_bytes();
  const std::uint64_t square_bytes = std::uint64_t{ng} * ng * sizeof(Complex);
  memory.allocate(stack_bytes);

  Stopwatch setup_clock;
  ComplexDense a_backup, b_backup;
  if (config.backup) {
    a_backup = coeffs.a_star;
    b_backup = coeffs.b_star;
    memory.allocate(stack_bytes);
  }
  HermitianAccumulator h(ng);
  memory.allocate(square_bytes);
  report.timings.setup += setup_clock.seconds();

  Stopwatch abba_clock;
  build_H_ABBA_BB(*backend, coeffs, tmats, h, coeffs.a_star.view(), report.ledger);
  report.timings.h_abba_bb = abba_clock.seconds();

  Stopwatch restore_clock;
  if (config.backup) {
    coeffs.a_star = std::move(a_backup);
    coeffs.b_star = std::move(b_backup);
    memory.release(stack_bytes);
  } else {
    regenerate(coeffs);
    coeffs.validate();
  }
  report.timings.setup += restore_clock.seconds();

  Stopwatch s_clock;
  memory.allocate(square_bytes);
  HermitianAccumulator s = build_S(*backend, coeffs, report.ledger);
  report.timings.s = s_clock.seconds();

  // B* is dead after S; its storage holds the X/Y stacks.
  Stopwatch aa_clock;
  build_H_AA(*backend, coeffs, tmats, h, config, coeffs.b_star.view(), report.ledger, report);
  report.timings.h_aa = aa_clock.seconds();

  Stopwatch mirror_clock;
  BuildResult result;
  result.h = mirror_to_full(std::move(h));
  result.s = mirror_to_full(std::move(s));
  report.timings.setup += mirror_clock.seconds();
  report.peak_observed_bytes = memory.peak();
  result.report = std::move(report);
  return result;
}

std::uint64_t estimate_memory(std::uint64_t atoms, std::uint64_t harmonics, std::uint64_t basis_size, bool backup) {
  if (atoms < 1 || harmonics < 1 || basis_size < 1) {
    throw ContractViolation("estimate_memory: all counts must be >= 1");
  }
  const std::uint64_t stacks = checked_mul(checked_mul(checked_mul(32, atoms), harmonics), basis_size);
  const std::uint64_t square = checked_mul(basis_size, basis_size);
  const std::uint64_t squares = checked_mul(32, square);
  std::uint64_t total = checked_add(stacks, squares);
  if (backup) {
    const std::uint64_t half = checked_mul(16, square);
    if (stacks > half) total = checked_add(total, stacks - half);
  }
  return total;
}

FlopLedger predict_flops(const std::vector<Index>& coeff_heights, const std::vector<Index>& t_sizes,
                         Index basis_size, const std::vector<bool>& hpd_mask) {
  if (coeff_heights.size() != t_sizes.size() || hpd_mask.size() != t_sizes.size()) {
    throw ContractViolation("predict_flops: per-atom lists disagree in length");
  }
  const std::uint64_t ng = basis_size;
  const std::uint64_t rows = std::accumulate(coeff_heights.begin(), coeff_heights.end(), std::uint64_t{0});
  FlopLedger ledger;
  // S
  ledger.add(KernelKind::HermitianRankK, 2 * herk_flops(rows, ng));
  ledger.add(KernelKind::RowScale, row_scale_flops(rows, ng));
  // H_AB+BA + H_BB
  std::uint64_t packed = 0;
  for (const Index t : t_sizes) {
    ledger.add(KernelKind::GeneralProduct, gemm_flops(t, ng, t));
    ledger.add(KernelKind::HermitianProduct, hemm_flops(t, ng));
    packed += t;
  }
  ledger.add(KernelKind::HermitianRank2K, her2k_flops(packed, ng));
  // H_AA
  std::uint64_t hpd_rows = 0, general_rows = 0;
  for (Index a = 0; a < t_sizes.size(); ++a) {
    const std::uint64_t t = t_sizes[a];
    if (hpd_mask[a]) {
      ledger.add(KernelKind::Cholesky, potrf_flops(t));
      ledger.add(KernelKind::TriangularProduct, trmm_flops(t, ng));
      hpd_rows += t;
    } else {
      ledger.add(KernelKind::HermitianProduct, hemm_flops(t, ng));
      general_rows += t;
    }
  }
  ledger.add(KernelKind::GeneralProduct, gemm_flops(ng, ng, general_rows));
  ledger.add(KernelKind::HermitianRankK, herk_flops(hpd_rows, ng));
  return ledger;
}

FlopLedger predict_flops(const std::vector<Index>& block_heights, Index basis_size, const std::vector<bool>& hpd_mask) {
  return predict_flops(block_heights, block_heights, basis_size, hpd_mask);
}

std::uint64_t predict_large_update_flops(const std::vector<Index>& coeff_heights, const std::vector<Index>& t_sizes,
                                         Index basis_size, const std::vector<bool>& hpd_mask) {
  const std::uint64_t ng = basis_size;
  const std::uint64_t rows = std::accumulate(coeff_heights.begin(), coeff_heights.end(), std::uint64_t{0});
  std::uint64_t packed = 0, hpd_rows = 0, general_rows = 0;
  for (Index a = 0; a < t_sizes.size(); ++a) {
    packed += t_sizes[a];
    (hpd_mask.at(a) ? hpd_rows : general_rows) += t_sizes[a];
  }
  return 2 * herk_flops(rows, ng) + her2k_flops(packed, ng) + gemm_flops(ng, ng, general_rows) +
         herk_flops(hpd_rows, ng);
}

double large_update_fraction(const std::vector<Index>& block_heights, Index basis_size,
                             const std::vector<bool>& hpd_mask) {
  const auto total = predict_flops(block_heights, basis_size, hpd_mask).total();
  if (total == 0) return 0.0;
  const auto large = predict_large_update_flops(block_heights, block_heights, basis_size, hpd_mask);
  return static_cast<double>(large) / static_cast<double>(total);
}

std::vector<bool> alternating_mask(Index atoms) {
  std::vector<bool> mask(atoms);
  for (Index a = 0; a < atoms; ++a) mask[a] = a % 2 == 0;
  return mask;
}

}  // namespace hsdla
