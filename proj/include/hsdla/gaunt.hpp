#pragma once

#include <vector>

#include "hsdla/matrix.hpp"

namespace hsdla {

/// Table of G(L', L, L'') = \int conj(Y_L') Y_L Y_L'' dOmega for
/// l', l <= l_max and l'' <= l_max_pp, built by Gauss-Legendre quadrature in
/// cos(theta) and the trapezoid rule in phi.

class GauntTable {
 public:
  GauntTable(int l_max, int l_max_pp);

  int l_max() const { return l_max_; }
  int l_max_pp() const { return l_max_pp_; }
  /// Throws ContractViolation for (l, m) outside the table.
  Complex operator()(int lp, int mp, int l, int m, int lpp, int mpp) const;

 private:
  int l_max_;
  int l_max_pp_;
  Index n_lm_;

  std::vector<Complex> values_;
};

/// Single coefficient without a cached table.
Complex gaunt(int lp, int mp, int l, int m, int lpp, int mpp);

/// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

}  // namespace hsdla
