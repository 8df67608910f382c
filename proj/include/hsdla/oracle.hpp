#pragma once

#include <vector>

#include "hsdla/builder.hpp"
#include "hsdla/matrix.hpp"
#include "hsdla/special_functions.hpp"

namespace hsdla {

enum class LoopOrder { AtomOuter, EntryOuter };

/// Entrywise overlap: S[t',t] = sum_a sum_L conj(A) A + conj(B) B ||udot||^2.
/// Full matrix.
ComplexDense naive_S(const StackedCoefficients& coeffs, LoopOrder order = LoopOrder::AtomOuter);

/// Entrywise Hamiltonian with T_BA = T_AB^H, full T matrices. Full matrix.
ComplexDense naive_H(const StackedCoefficients& coeffs, const TMatrixSet& tmats);

/// Legendre-reduced inputs for the A part of the overlap.
struct ReducedOverlapInputs {
  int l_sph = 0;
  /// f[a][l][t]
  std::vector<std::vector<std::vector<double>>> f;
  /// wronskian[a][l]
  std::vector<std::vector<double>> wronskian;
  std::vector<Vec3> positions;
  std::vector<Vec3> k_vectors;
  double omega = 1.0;
};

/// M[t',t] = 4 pi / Omega sum_a e^{i (K_t - K_t') x_a}
///           sum_l f_{l,a,t'} f_{l,a,t} / W^2 (2l+1) P_l(Khat_t . Khat_t').
ComplexDense reduced_S_AA(const ReducedOverlapInputs& inputs);

enum class Triangle { Lower, Full };

/// ||X - Y||_F / max(||Y||_F, tiny) over the selected triangle.
double compare_matrices(ConstMatrixView x, ConstMatrixView y, Triangle triangle = Triangle::Full);

/// ||M - M^H||_F / max(||M||_F, tiny).
double hermitian_residual(ConstMatrixView m);

}  // namespace hsdla
