#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "hsdla/flop_ledger.hpp"
#include "hsdla/kernels.hpp"
#include "hsdla/matrix.hpp"

namespace hsdla {

/// Per-atom matching coefficients A_a, B_a stacked vertically into A*, B*
/// (capacity_rows x N_G, leading dimension capacity_rows).
struct StackedCoefficients {
  ComplexDense a_star;
  ComplexDense b_star;
  AtomBlockLayout layout;
  /// ||udot_{l,a}|| for every used row, aligned with A*/B* rows.
  std::vector<double> udot_norms;

  /// Zero-filled stacks for the given layout.
  static StackedCoefficients zeros(AtomBlockLayout layout, Index basis_size);

  Index basis_size() const { return a_star.cols(); }
  Index atom_count() const { return layout.atom_count(); }
  ConstMatrixView a_block(Index atom) const;
  ConstMatrixView b_block(Index atom) const;
  MatrixView a_block(Index atom);
  MatrixView b_block(Index atom);

  /// Throws ContractViolation on inconsistent shapes.
  void validate() const;
};

/// T^[AA], T^[AB], T^[BB] for one atom; T^[BA] is (T^[AB])^H and never stored.
/// Matrices are size x size with size <= the atom's coefficient block height;
/// they act on the first `size` rows of A_a and B_a.
struct AtomTMatrices {
  ComplexDense aa;
  ComplexDense ab;
  ComplexDense bb;
  int l_sph = 0;
  int l_nonsph = 0;

  Index size() const { return aa.rows(); }
};

struct TMatrixSet {
  std::vector<AtomTMatrices> atoms;

  static TMatrixSet zeros(const AtomBlockLayout& layout);

  Index atom_count() const { return atoms.size(); }
  std::vector<Index> sizes() const;
  /// Shapes must agree with the layout (size <= block height).
  void validate(const AtomBlockLayout& layout) const;
  /// max relative Hermitian residual ||T - T^H||_F / ||T||_F over T^[AA], T^[BB].
  double hermitian_residual() const;
};

struct BuildConfig {
  /// Keep copies of A*/B* (true) or re-create them through a callback (false).
  bool backup = true;
  /// Send every atom through the non-HPD route of the H_AA update.
  bool force_general_path = false;
  int thread_count = 1;
  BackendKind backend = BackendKind::Reference;
};

struct PhaseTimings {
  double setup = 0.0;
  double h_abba_bb = 0.0;
  double s = 0.0;
  double h_aa = 0.0;
};

struct BuildReport {
  FlopLedger ledger;
  PhaseTimings timings;
  Index hpd_atom_count = 0;
  Index non_hpd_atom_count = 0;
  std::vector<bool> hpd_mask;
  std::uint64_t predicted_bytes = 0;
  std::uint64_t peak_observed_bytes = 0;
  int thread_count = 1;
  BackendKind backend = BackendKind::Reference;
};

/// Refills A*, B* (and udot norms) of a coefficient set in place.
using RegenerateFn = std::function<void(StackedCoefficients&)>;

/// lower(S) = sum_a A_a^H A_a + B_a^H Udot_a^2 B_a with two rank-k updates.
/// B* is scaled in place by the udot norms.
HermitianAccumulator build_S(const KernelBackend& backend, StackedCoefficients& coeffs, FlopLedger& ledger);

/// lower(H) += sum_a A_a^H T_AB B_a + B_a^H T_BA A_a + B_a^H T_BB B_a.
///
/// Per atom Z_a = T_AB^H A_a + 1/2 T_BB B_a is formed in a small scratch and
/// stored compacted into `z_stack` (rows sum(T sizes)); the used rows of B*
/// are compacted in place to line up with Z*. A single rank-2k update then
/// adds Z*^H B* + B*^H Z*. `z_stack` may alias coeffs.a_star: block a is
/// written only at or above the rows it was read from.
void build_H_ABBA_BB(const KernelBackend& backend, StackedCoefficients& coeffs, const TMatrixSet& tmats,
                     HermitianAccumulator& h, MatrixView z_stack, FlopLedger& ledger);

/// lower(H) += sum_a A_a^H T_AA A_a (lower part exact; the strict upper part
/// receives garbage from the general product and must be mirrored).
///
/// Atoms whose T_AA factors as C C^H contribute Y_a = C^H A_a, stacked from
/// the bottom of `xy_stack`; the others contribute X_a = T_AA A_a stacked
/// from the top, with the matching A_a compacted to the top of A*. One
/// general product and one rank-k update finish the job. HPD statistics land
/// in `report`.
void build_H_AA(const KernelBackend& backend, StackedCoefficients& coeffs, const TMatrixSet& tmats,
                HermitianAccumulator& h, const BuildConfig& config, MatrixView xy_stack, FlopLedger& ledger,
                BuildReport& report);

struct BuildResult {
  ComplexDense h;
  ComplexDense s;
  BuildReport report;
};

/// Full assembly in the fixed order H_ABBA_BB, S, H_AA. `coeffs` is consumed.
/// With backup == false the caller must supply `regenerate`, which is invoked
/// once to re-create A*/B* before S is built.
BuildResult build_all(StackedCoefficients coeffs, const TMatrixSet& tmats, const BuildConfig& config,
                      const RegenerateFn& regenerate = {});

class MemoryOverflowError : public std::overflow_error {
 public:
  using std::overflow_error::overflow_error;
};

/// Bytes held by the large buffers (A*, B*, optional backups, H, S).
std::uint64_t estimate_memory(std::uint64_t atoms, std::uint64_t harmonics, std::uint64_t basis_size, bool backup);

/// Closed-form FLOP ledger of build_all. `coeff_heights` are the A*/B* block
/// heights, `t_sizes` the T-matrix sizes (defaults to the same).
FlopLedger predict_flops(const std::vector<Index>& coeff_heights, const std::vector<Index>& t_sizes,
                         Index basis_size, const std::vector<bool>& hpd_mask);
FlopLedger predict_flops(const std::vector<Index>& block_heights, Index basis_size, const std::vector<bool>& hpd_mask);

/// FLOPs spent in the large stacked updates (rank-k of S twice, rank-2k,
/// general product and rank-k of H_AA).
std::uint64_t predict_large_update_flops(const std::vector<Index>& coeff_heights, const std::vector<Index>& t_sizes,
                                         Index basis_size, const std::vector<bool>& hpd_mask);
double large_update_fraction(const std::vector<Index>& block_heights, Index basis_size,
                             const std::vector<bool>& hpd_mask);

/// Alternating half-HPD mask (atoms 0, 2, 4, ... HPD).
std::vector<bool> alternating_mask(Index atoms);

}  // namespace hsdla
