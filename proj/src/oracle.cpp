#include "hsdla/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hsdla {
namespace {

constexpr double kTiny = std::numeric_limits<double>::min();

// Frobenius accumulation with a running scale, safe against underflow.
struct ScaledSum {
  double scale = 0.0;
  double sum = 1.0;

  void add(Complex z) {
    for (const double v : {z.real(), z.imag()}) {
      const double a = std::abs(v);
      if (a == 0.0) continue;
      if (a > scale) {
        sum = 1.0 + sum * (scale / a) * (scale / a);
        scale = a;
      } else {
        sum += (a / scale) * (a / scale);
      }
    }
  }
  double norm() const { return scale == 0.0 ? 0.0 : scale * std::sqrt(sum); }
};

double ratio(const ScaledSum& diff, const ScaledSum& ref) { return diff.norm() / std::max(ref.norm(), kTiny); }

}  // namespace

ComplexDense naive_S(const StackedCoefficients& coeffs, LoopOrder order) {
  coeffs.validate();
  const Index ng = coeffs.basis_size();
  const auto& layout = coeffs.layout;
  ComplexDense s(ng, ng);
  auto term = [&](Index row, Index tp, Index t) {
    const double u = coeffs.udot_norms[row];
    return std::conj(coeffs.a_star(row, tp)) * coeffs.a_star(row, t) +
           std::conj(coeffs.b_star(row, tp)) * coeffs.b_star(row, t) * (u * u);
  };
  if (order == LoopOrder::AtomOuter) {
    for (Index a = 0; a < layout.atom_count(); ++a)
      for (Index l = 0; l < layout.height(a); ++l) {
        const Index row = layout.offset(a) + l;
        for (Index tp = 0; tp < ng; ++tp)
          for (Index t = 0; t < ng; ++t) s(tp, t) += term(row, tp, t);
      }
  } else {
    for (Index t = 0; t < ng; ++t)
      for (Index tp = 0; tp < ng; ++tp) {
        Complex sum{};
        for (Index a = layout.atom_count(); a-- > 0;)
          for (Index l = layout.height(a); l-- > 0;) sum += term(layout.offset(a) + l, tp, t);
        s(tp, t) = sum;
      }
  }
  return s;
}

ComplexDense naive_H(const StackedCoefficients& coeffs, const TMatrixSet& tmats) {
  coeffs.validate();
  tmats.validate(coeffs.layout);
  const Index ng = coeffs.basis_size();
  ComplexDense h(ng, ng);
  std::vector<Complex> va, vb;
  for (Index a = 0; a < coeffs.atom_count(); ++a) {
    const auto& tm = tmats.atoms[a];
    const Index n = tm.size();
    const Index off = coeffs.layout.offset(a);
    const ComplexDense& taa = tm.aa;
    const ComplexDense& tbb = tm.bb;
    va.assign(n, {});
    vb.assign(n, {});
    for (Index t = 0; t < ng; ++t) {
      // va = T_AA A_t + T_AB B_t,  vb = T_BA A_t + T_BB B_t
      for (Index lp = 0; lp < n; ++lp) {
        Complex sa{}, sb{};
        for (Index l = 0; l < n; ++l) {
          const Complex at = coeffs.a_star(off + l, t);
          const Complex bt = coeffs.b_star(off + l, t);
          sa += taa(lp, l) * at + tm.ab(lp, l) * bt;
          sb += std::conj(tm.ab(l, lp)) * at + tbb(lp, l) * bt;
        }
        va[lp] = sa;
        vb[lp] = sb;
      }
      for (Index tp = 0; tp < ng; ++tp) {
        Complex sum{};
        for (Index lp = 0; lp < n; ++lp) {
          sum += std::conj(coeffs.a_star(off + lp, tp)) * va[lp] + std::conj(coeffs.b_star(off + lp, tp)) * vb[lp];
        }
        h(tp, t) += sum;
      }
    }
  }
  return h;
}

ComplexDense reduced_S_AA(const ReducedOverlapInputs& in) {
  if (!(in.omega > 0.0)) throw ContractViolation("reduced_S_AA: cell volume must be positive");
  const Index atoms = in.positions.size();
  const Index ng = in.k_vectors.size();
  if (in.f.size() != atoms || in.wronskian.size() != atoms) {
    throw ContractViolation("reduced_S_AA: per-atom inputs disagree in length");
  }
  for (Index a = 0; a < atoms; ++a) {
    if (in.f[a].size() != static_cast<Index>(in.l_sph + 1) || in.wronskian[a].size() != in.f[a].size()) {
      throw ContractViolation("reduced_S_AA: atom " + std::to_string(a) + " needs l_sph + 1 entries");
    }
    for (int l = 0; l <= in.l_sph; ++l) {
      if (in.f[a][l].size() != ng) throw ContractViolation("reduced_S_AA: f has the wrong basis size");
      if (in.wronskian[a][l] == 0.0) {
        throw ContractViolation("reduced_S_AA: zero Wronskian at atom " + std::to_string(a) + ", l " +
                                std::to_string(l));
      }
    }
  }
  std::vector<Vec3> khat(ng);
  std::vector<bool> zero(ng);
  for (Index t = 0; t < ng; ++t) {
    const double k = norm(in.k_vectors[t]);
    zero[t] = k == 0.0;
    for (int c = 0; c < 3; ++c) khat[t][c] = zero[t] ? 0.0 : in.k_vectors[t][c] / k;
  }
  ComplexDense m(ng, ng);
  const double pref = 4.0 * kPi / in.omega;
  for (Index t = 0; t < ng; ++t)
    for (Index tp = 0; tp < ng; ++tp) {
      const double cosine = (zero[t] || zero[tp]) ? 1.0 : dot(khat[t], khat[tp]);
      const auto p = legendre_all(in.l_sph, std::clamp(cosine, -1.0, 1.0));
      Vec3 dk{};
      for (int c = 0; c < 3; ++c) dk[c] = in.k_vectors[t][c] - in.k_vectors[tp][c];
      Complex sum{};
      for (Index a = 0; a < atoms; ++a) {
        double radial = 0.0;
        for (int l = 0; l <= in.l_sph; ++l) {
          const double w = in.wronskian[a][l];
          radial += in.f[a][l][tp] * in.f[a][l][t] / (w * w) * (2 * l + 1) * p[l];
        }
        sum += std::polar(radial, dot(dk, in.positions[a]));
      }
      m(tp, t) = pref * sum;
    }
  return m;
}

double compare_matrices(ConstMatrixView x, ConstMatrixView y, Triangle triangle) {
  if (x.rows != y.rows || x.cols != y.cols) {
    throw ContractViolation("compare_matrices: shape mismatch " + shape_string(x.rows, x.cols) + " vs " +
                            shape_string(y.rows, y.cols));
  }
  ScaledSum diff, ref;
  for (Index j = 0; j < x.cols; ++j)
    for (Index i = triangle == Triangle::Lower ? j : 0; i < x.rows; ++i) {
      diff.add(x(i, j) - y(i, j));
      ref.add(y(i, j));
    }
  return ratio(diff, ref);
}

double hermitian_residual(ConstMatrixView m) {
  if (m.rows != m.cols) throw ContractViolation("hermitian_residual: matrix is not square");
  ScaledSum diff, ref;
  for (Index j = 0; j < m.cols; ++j)
    for (Index i = 0; i < m.rows; ++i) {
      diff.add(m(i, j) - std::conj(m(j, i)));
      ref.add(m(i, j));
    }
  return ratio(diff, ref);
}

}  // namespace hsdla
