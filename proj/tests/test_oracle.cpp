#include <cmath>
#include <limits>

#include "hsdla/oracle.hpp"
#include "hsdla/setup.hpp"
#include "test_util.hpp"

using namespace hsdla;
using namespace testutil;

TEST_CASE("naive_S examples") {
  StackedCoefficients c = StackedCoefficients::zeros(AtomBlockLayout({1}), 2);
  c.a_star(0, 0) = Complex(1.0, 2.0);
  c.a_star(0, 1) = Complex(0.0, -1.0);
  c.b_star(0, 0) = 3.0;
  c.udot_norms[0] = 0.5;
  const ComplexDense s = naive_S(c);
  CHECK(s.rows() == 2);
  CHECK(std::abs(s(0, 0) - Complex(5.0 + 2.25)) < 1e-15);
  CHECK(std::abs(s(0, 1) - std::conj(Complex(1.0, 2.0)) * Complex(0.0, -1.0)) < 1e-15);
  CHECK(std::abs(s(1, 0) - std::conj(s(0, 1))) < 1e-15);
  CHECK(std::abs(s(1, 1) - 1.0) < 1e-15);
}

TEST_CASE("naive_H examples") {
  const AtomBlockLayout layout({4, 1});
  const StackedCoefficients c = random_coefficients(3, layout, 5);
  TMatrixSet t = TMatrixSet::zeros(layout);
  CHECK(frobenius_norm(naive_H(c, t).view()) == 0.0);

  for (auto& a : t.atoms)
    for (Index i = 0; i < a.size(); ++i) a.aa(i, i) = 1.0;
  StackedCoefficients aonly = c;
  aonly.b_star.set_zero();
  CHECK(compare_matrices(naive_H(c, t).view(), naive_S(aonly).view()) <= 1e-15);

  TMatrixSet tb = TMatrixSet::zeros(layout);
  for (auto& a : tb.atoms)
    for (Index i = 0; i < a.size(); ++i) a.bb(i, i) = 1.0;
  StackedCoefficients bonly = c;
  bonly.a_star.set_zero();
  bonly.udot_norms.assign(bonly.udot_norms.size(), 1.0);
  CHECK(compare_matrices(naive_H(c, tb).view(), naive_S(bonly).view()) <= 1e-15);

  // T smaller than the block: only the leading row acts
  TMatrixSet small = TMatrixSet::zeros(AtomBlockLayout({1, 1}));
  small.atoms[0].aa(0, 0) = 2.0;
  const ComplexDense h = naive_H(c, small);
  for (Index j = 0; j < 5; ++j)
    for (Index i = 0; i < 5; ++i)
      CHECK(std::abs(h(i, j) - 2.0 * std::conj(c.a_star(0, i)) * c.a_star(0, j)) < 1e-14);
}

TEST_CASE("naive_S is independent of the loop order") {
  for (int trial = 0; trial < 5; ++trial) {
    const AtomBlockLayout layout({9, 4, 16, 1});
    const StackedCoefficients c = random_coefficients(100 + trial, layout, 17);
    const ComplexDense a = naive_S(c, LoopOrder::AtomOuter);
    const ComplexDense b = naive_S(c, LoopOrder::EntryOuter);
    CHECK(compare_matrices(a.view(), b.view()) <= 1e-13);
    CHECK(hermitian_residual(a.view()) <= 1e-15);
  }
}

TEST_CASE("naive_H is Hermitian for Hermitian T") {
  const AtomBlockLayout layout({9, 16});
  const StackedCoefficients c = random_coefficients(4, layout, 12);
  const TMatrixSet t = synth_T(4, layout, {2, 3}, 0.5);
  CHECK(t.hermitian_residual() <= 1e-15);
  CHECK(hermitian_residual(naive_H(c, t).view()) <= 1e-13);
}

TEST_CASE("compare_matrices") {
  const ComplexDense y = random_matrix(6, 6, 1);
  CHECK(compare_matrices(y.view(), y.view()) == 0.0);
  ComplexDense x = y;
  for (Index j = 0; j < 6; ++j)
    for (Index i = 0; i < 6; ++i) x(i, j) += 1e-13;
  const double expect = 1e-13 * 6.0 / frobenius_norm(y.view());
  CHECK(std::abs(compare_matrices(x.view(), y.view()) - expect) <= 1e-3 * expect);

  ComplexDense zero(3, 3), tiny(3, 3);
  CHECK(compare_matrices(zero.view(), zero.view()) == 0.0);
  tiny(0, 0) = 1e-300;
  const double r = compare_matrices(tiny.view(), zero.view());
  CHECK(std::isfinite(r));
  CHECK(r == doctest::Approx(1e-300 / std::numeric_limits<double>::min()));

  ComplexDense upper = y;
  upper(0, 5) += 1.0;
  CHECK(compare_matrices(upper.view(), y.view(), Triangle::Lower) == 0.0);
  CHECK(compare_matrices(upper.view(), y.view(), Triangle::Full) > 0.0);
  CHECK_THROWS_AS(compare_matrices(y.view(), zero.view()), ContractViolation);
}

TEST_CASE("hermitian_residual") {
  const ComplexDense h = random_hermitian(7, 3);
  CHECK(hermitian_residual(h.view()) == 0.0);
  const ComplexDense g = random_matrix(7, 7, 3);
  CHECK(hermitian_residual(g.view()) > 0.1);
  CHECK(hermitian_residual(ComplexDense(2, 2).view()) == 0.0);
}

TEST_CASE("reduced_S_AA single atom single K is rank one") {
  ReducedOverlapInputs in;
  in.l_sph = 2;
  in.positions = {{0.3, -0.2, 0.1}};
  in.k_vectors = {{0.0, 0.0, 1.0}, {0.0, 0.0, 2.0}};
  in.omega = 50.0;
  in.f = {{{1.0, 0.5}, {0.0, 0.0}, {0.0, 0.0}}};
  in.wronskian = {{2.0, 1.0, 1.0}};
  const ComplexDense m = reduced_S_AA(in);
  // only l = 0 survives: 4 pi / Omega * f f' / W^2
  const double pref = 4.0 * kPi / 50.0 / 4.0;
  CHECK(std::abs(m(0, 0) - pref) < 1e-14);
  CHECK(std::abs(std::abs(m(0, 1)) - pref * 0.5) < 1e-14);
  CHECK(std::abs(m(1, 1) - pref * 0.25) < 1e-14);
  CHECK(std::abs(m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0)) < 1e-14);
}

TEST_CASE("reduced_S_AA rejects bad inputs") {
  ReducedOverlapInputs in;
  in.l_sph = 0;
  in.positions = {{0.0, 0.0, 0.0}};
  in.k_vectors = {{1.0, 0.0, 0.0}};
  in.f = {{{1.0}}};
  in.wronskian = {{0.0}};
  CHECK_THROWS_AS(reduced_S_AA(in), ContractViolation);
  in.wronskian = {{1.0}};
  in.omega = 0.0;
  CHECK_THROWS_AS(reduced_S_AA(in), ContractViolation);
  in.omega = 1.0;
  in.f = {{{1.0, 2.0}}};
  CHECK_THROWS_AS(reduced_S_AA(in), ContractViolation);
}

TEST_CASE("reduced_S_AA equals the unreduced A part of the overlap") {
  SynthOptions o;
  o.seed = 17;
  o.atoms = 2;
  o.l_sph = {4};
  o.l_nonsph = {2};
  o.target_basis_size = 10;
  const SystemSpec spec = synth_system(o);
  StackedCoefficients c = compute_AB(spec);
  c.b_star.set_zero();
  const ComplexDense unreduced = naive_S(c);
  const ComplexDense reduced = reduced_S_AA(reduced_overlap_inputs(spec));
  CHECK(compare_matrices(reduced.view(), unreduced.view()) <= 1e-12);
}
