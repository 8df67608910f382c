#include "test_util.hpp"

using namespace hsdla;
using namespace testutil;

namespace {

ComplexDense herk_oracle(ConstMatrixView a) { return dense_product(a, a, true); }

ComplexDense lower_triangular(Index n, std::uint64_t seed) {
  ComplexDense c = random_matrix(n, n, seed);
  for (Index j = 1; j < n; ++j)
    for (Index i = 0; i < j; ++i) c(i, j) = {};
  return c;
}

}  // namespace

TEST_CASE("backend factory") {
  CHECK(make_backend(BackendKind::Reference)->kind() == BackendKind::Reference);
  CHECK(make_backend(BackendKind::Reference, 3)->thread_count() == 3);
  CHECK_THROWS_AS(make_backend(BackendKind::Reference, 0), ConfigurationError);
  CHECK(parse_backend("optimized") == BackendKind::Optimized);
  CHECK_THROWS_AS(parse_backend("fast"), ConfigurationError);
  if (!optimized_backend_available()) CHECK_THROWS_AS(make_backend(BackendKind::Optimized), ConfigurationError);
}

TEST_CASE("hermitian_rank_k_update") {
  for (const auto kind : backends()) {
    CAPTURE(backend_name(kind));
    const auto be = make_backend(kind);
    FlopLedger ledger;

    HermitianAccumulator c(2);
    ComplexDense a(1, 2);
    a(0, 0) = 1.0;
    a(0, 1) = {0.0, 1.0};
    hermitian_rank_k_update(*be, c.view(), a.view(), ledger);
    CHECK(c.matrix(0, 0) == Complex(1.0));
    CHECK(c.matrix(1, 0) == Complex(0.0, -1.0));
    CHECK(c.matrix(1, 1) == Complex(1.0));
    CHECK(ledger[KernelKind::HermitianRankK] == 4 * 1 * 2 * 2);

    const ComplexDense before = c.matrix;
    hermitian_rank_k_update(*be, c.view(), ComplexDense(3, 2).view(), ledger);
    CHECK(exactly_equal(c.view(), before.view()));

    const ComplexDense big = random_matrix(98, 64, 1);
    HermitianAccumulator d(64);
    hermitian_rank_k_update(*be, d.view(), big.view(), ledger);
    const ComplexDense ref = herk_oracle(big.view());
    double worst = 0.0;
    for (Index j = 0; j < 64; ++j)
      for (Index i = j; i < 64; ++i) worst = std::max(worst, std::abs(d.matrix(i, j) - ref(i, j)));
    const double an = frobenius_norm(big.view());
    CHECK(worst <= 1e-12 * an * an);

    CHECK_THROWS_AS(hermitian_rank_k_update(*be, d.view(), random_matrix(3, 5, 1).view(), ledger),
                    ContractViolation);
  }
}

TEST_CASE("hermitian_rank_k_update never reads the strict upper triangle of C") {
  for (const auto kind : backends()) {
    CAPTURE(backend_name(kind));
    const auto be = make_backend(kind);
    FlopLedger ledger;
    const ComplexDense a = random_matrix(7, 9, 21);
    HermitianAccumulator clean(9), poisoned(9);
    poison_upper(poisoned.view());
    hermitian_rank_k_update(*be, clean.view(), a.view(), ledger);
    hermitian_rank_k_update(*be, poisoned.view(), a.view(), ledger);
    for (Index j = 0; j < 9; ++j)
      for (Index i = j; i < 9; ++i) CHECK(poisoned.matrix(i, j) == clean.matrix(i, j));
  }
}

TEST_CASE("hermitian_rank_2k_update") {
  for (const auto kind : backends()) {
    CAPTURE(backend_name(kind));
    const auto be = make_backend(kind);
    FlopLedger ledger;
    const ComplexDense x = random_matrix(12, 8, 3);
    const ComplexDense b = random_matrix(12, 8, 4);

    HermitianAccumulator same(8), twice(8);
    hermitian_rank_2k_update(*be, same.view(), x.view(), x.view(), ledger);
    hermitian_rank_k_update(*be, twice.view(), x.view(), ledger);
    hermitian_rank_k_update(*be, twice.view(), x.view(), ledger);
    CHECK(rel_diff_lower(same.view(), twice.view()) <= 1e-14);

    HermitianAccumulator zero(8);
    hermitian_rank_2k_update(*be, zero.view(), ComplexDense(12, 8).view(), b.view(), ledger);
    CHECK(frobenius_norm(zero.view()) == 0.0);

    FlopLedger l2;
    HermitianAccumulator c(8);
    poison_upper(c.view());
    hermitian_rank_2k_update(*be, c.view(), x.view(), b.view(), l2);
    const ComplexDense xb = dense_product(x.view(), b.view(), true);
    const ComplexDense bx = dense_product(b.view(), x.view(), true);
    ComplexDense ref(8, 8);
    for (Index j = 0; j < 8; ++j)
      for (Index i = 0; i < 8; ++i) ref(i, j) = xb(i, j) + bx(i, j);
    CHECK(rel_diff_lower(c.view(), ref.view()) <= 1e-12);
    CHECK(l2[KernelKind::HermitianRank2K] == 8 * 12 * 64);
    CHECK_THROWS_AS(hermitian_rank_2k_update(*be, c.view(), x.view(), random_matrix(11, 8, 1).view(), l2),
                    ContractViolation);
  }
}

TEST_CASE("general_product") {
  for (const auto kind : backends()) {
    CAPTURE(backend_name(kind));
    const auto be = make_backend(kind);
    FlopLedger ledger;
    const ComplexDense b = random_matrix(3, 5, 6);
    ComplexDense c = random_matrix(3, 5, 7);
    general_product(*be, c.view(), ComplexDense::identity(3).view(), b.view(), false, 1.0, 0.0, ledger);
    CHECK(rel_diff(c.view(), b.view()) <= 1e-15);

    const ComplexDense keep = c;
    general_product(*be, c.view(), random_matrix(3, 3, 1).view(), b.view(), false, 0.0, 1.0, ledger);
    CHECK(exactly_equal(c.view(), keep.view()));

    const ComplexDense a = random_matrix(4, 3, 5);
    ComplexDense out(4, 5);
    FlopLedger l2;
    general_product(*be, out.view(), a.view(), b.view(), false, 1.0, 0.0, l2);
    CHECK(rel_diff(out.view(), dense_product(a.view(), b.view()).view()) <= 1e-13);
    CHECK(l2[KernelKind::GeneralProduct] == 8 * 4 * 5 * 3);

    // conj-transposed A, complex alpha/beta, padded leading dimensions
    const ComplexDense ah = random_matrix(6, 4, 8, 9);
    const ComplexDense bh = random_matrix(6, 5, 9, 7);
    ComplexDense ch = random_matrix(4, 5, 10, 6);
    const ComplexDense ch0 = ch;
    const Complex alpha{0.5, -1.0}, beta{2.0, 0.25};
    general_product(*be, ch.view(), ah.view(), bh.view(), true, alpha, beta, l2);
    const ComplexDense p = dense_product(ah.view(), bh.view(), true);
    ComplexDense ref(4, 5);
    for (Index j = 0; j < 5; ++j)
      for (Index i = 0; i < 4; ++i) ref(i, j) = alpha * p(i, j) + beta * ch0(i, j);
    CHECK(rel_diff(ch.view(), ref.view()) <= 1e-13);
    CHECK_THROWS_AS(general_product(*be, out.view(), a.view(), b.view(), true, 1.0, 0.0, l2), ContractViolation);
  }
}

TEST_CASE("hermitian_product reads only the lower triangle of T") {
  for (const auto kind : backends()) {
    CAPTURE(backend_name(kind));
    const auto be = make_backend(kind);
    FlopLedger ledger;
    const ComplexDense a = random_matrix(5, 7, 12);
    ComplexDense x(5, 7);
    hermitian_product(*be, x.view(), ComplexDense::identity(5).view(), a.view(), false, 1.0, ledger);
    CHECK(rel_diff(x.view(), a.view()) <= 1e-15);

    ComplexDense d(3, 3);
    d(0, 0) = 2.0;
    d(1, 1) = -1.0;
    d(2, 2) = 0.5;
    const ComplexDense col = random_matrix(3, 1, 2);
    ComplexDense y(3, 1);
    hermitian_product(*be, y.view(), d.view(), col.view(), false, 1.0, ledger);
    for (Index i = 0; i < 3; ++i) CHECK(std::abs(y(i, 0) - d(i, i) * col(i, 0)) <= 1e-15);

    const ComplexDense t = random_hermitian(5, 9);
    ComplexDense tp = t;
    poison_upper(tp.view());
    ComplexDense acc = random_matrix(5, 7, 13);
    const ComplexDense acc0 = acc;
    FlopLedger l2;
    hermitian_product(*be, acc.view(), tp.view(), a.view(), true, Complex(0.5, 0.0), l2);
    const ComplexDense ta = dense_product(t.view(), a.view());
    ComplexDense ref(5, 7);
    for (Index j = 0; j < 7; ++j)
      for (Index i = 0; i < 5; ++i) ref(i, j) = 0.5 * ta(i, j) + acc0(i, j);
    CHECK(rel_diff(acc.view(), ref.view()) <= 1e-13);
    CHECK(l2[KernelKind::HermitianProduct] == 8 * 25 * 7);
    CHECK_THROWS_AS(hermitian_product(*be, acc.view(), t.view(), random_matrix(4, 7, 1).view(), false, 1.0, l2),
                    ContractViolation);
  }
}

TEST_CASE("triangular_product ignores the strict upper triangle") {
  for (const auto kind : backends()) {
    CAPTURE(backend_name(kind));
    const auto be = make_backend(kind);
    FlopLedger ledger;
    const ComplexDense a = random_matrix(6, 4, 14);
    ComplexDense y(6, 4);
    triangular_product(*be, y.view(), ComplexDense::identity(6).view(), a.view(), true, ledger);
    CHECK(rel_diff(y.view(), a.view()) <= 1e-15);

    ComplexDense c1(1, 1);
    c1(0, 0) = {2.0, 3.0};
    const ComplexDense row = random_matrix(1, 3, 4);
    ComplexDense y1(1, 3);
    triangular_product(*be, y1.view(), c1.view(), row.view(), true, ledger);
    for (Index j = 0; j < 3; ++j) CHECK(std::abs(y1(0, j) - std::conj(c1(0, 0)) * row(0, j)) <= 1e-15);

    const ComplexDense c = lower_triangular(6, 2);
    ComplexDense cp = c;
    poison_upper(cp.view());
    for (const bool conj : {false, true}) {
      FlopLedger l2;
      ComplexDense out(6, 4);
      triangular_product(*be, out.view(), cp.view(), a.view(), conj, l2);
      const ComplexDense ref = dense_product(c.view(), a.view(), conj);
      CHECK(rel_diff(out.view(), ref.view()) <= 1e-13);
      CHECK(l2[KernelKind::TriangularProduct] == 4 * 36 * 4);
    }
    CHECK_THROWS_AS(triangular_product(*be, y.view(), c.view(), random_matrix(5, 4, 1).view(), true, ledger),
                    ContractViolation);
  }
}

TEST_CASE("cholesky_factor") {
  for (const auto kind : backends()) {
    CAPTURE(backend_name(kind));
    const auto be = make_backend(kind);
    FlopLedger ledger;
    const auto id = cholesky_factor(*be, ComplexDense::identity(4).view(), ledger);
    REQUIRE(id.success());
    CHECK(exactly_equal(id.factor->view(), ComplexDense::identity(4).view()));
    CHECK(ledger[KernelKind::Cholesky] == 4 * 64 / 3);

    ComplexDense neg(1, 1);
    neg(0, 0) = -1.0;
    FlopLedger none;
    const auto bad = cholesky_factor(*be, neg.view(), none);
    CHECK_FALSE(bad.success());
    CHECK(bad.failed_pivot == 0);
    CHECK(none.total() == 0);

    const ComplexDense g = random_matrix(5, 5, 11);
    const ComplexDense t = dense_product(g.view(), conjugate_transpose(g.view()).view());
    ComplexDense tp = t;
    poison_upper(tp.view());
    const ComplexDense tp_copy = tp;
    const auto ok = cholesky_factor(*be, tp.view(), ledger);
    REQUIRE(ok.success());
    for (Index j = 1; j < 5; ++j)
      for (Index i = 0; i < j; ++i) CHECK((*ok.factor)(i, j) == Complex{});
    const ComplexDense rec = dense_product(ok.factor->view(), conjugate_transpose(ok.factor->view()).view());
    CHECK(rel_diff(rec.view(), t.view()) <= 1e-13);
    for (Index j = 0; j < 5; ++j)
      for (Index i = j; i < 5; ++i) CHECK(tp(i, j) == tp_copy(i, j));

    ComplexDense nan = ComplexDense::identity(3);
    nan(2, 1) = {std::nan(""), 0.0};
    CHECK_THROWS_AS(cholesky_factor(*be, nan.view(), ledger), ContractViolation);
  }
}

TEST_CASE("cholesky_factor leaves T intact on failure and reports the pivot") {
  for (const auto kind : backends()) {
    CAPTURE(backend_name(kind));
    const auto be = make_backend(kind);
    FlopLedger ledger;
    ComplexDense t = random_hermitian(6, 5);
    for (Index i = 0; i < 6; ++i) t(i, i) = 10.0;
    t(3, 3) = -0.5;
    const ComplexDense copy = t;
    const auto r = cholesky_factor(*be, t.view(), ledger);
    CHECK_FALSE(r.success());
    CHECK(r.failed_pivot <= 3);
    CHECK(exactly_equal(t.view(), copy.view()));
  }
}

TEST_CASE("cholesky_factor is stable under small Hermitian perturbations") {
  for (const auto kind : backends()) {
    CAPTURE(backend_name(kind));
    const auto be = make_backend(kind);
    FlopLedger ledger;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const Index n = 8;
      // T = Q diag(lambda) Q^H with lambda_min = 1 via T = G G^H / n + I
      const ComplexDense g = random_matrix(n, n, 100 + seed);
      ComplexDense t = dense_product(g.view(), conjugate_transpose(g.view()).view());
      for (Index j = 0; j < n; ++j)
        for (Index i = 0; i < n; ++i) t(i, j) = t(i, j) / double(n) + (i == j ? 1.0 : 0.0);
      const ComplexDense e = random_hermitian(n, 200 + seed);
      const double scale = 1e-3 / frobenius_norm(e.view());
      for (Index j = 0; j < n; ++j)
        for (Index i = 0; i < n; ++i) t(i, j) += scale * e(i, j);
      CHECK(cholesky_factor(*be, t.view(), ledger).success());

      ComplexDense negdiag = t;
      negdiag(seed % n, seed % n) = -0.1;
      CHECK_FALSE(cholesky_factor(*be, negdiag.view(), ledger).success());
    }
  }
}

TEST_CASE("scale_rows") {
  FlopLedger ledger;
  ComplexDense b = random_matrix(4, 3, 4);
  const ComplexDense b0 = b;
  const std::vector<double> ones(4, 1.0), zeros(4, 0.0), d{2.0, 0.5, 1.0, 3.0};
  scale_rows(b.view(), ones, ledger);
  CHECK(exactly_equal(b.view(), b0.view()));
  scale_rows(b.view(), d, ledger);
  for (Index j = 0; j < 3; ++j)
    for (Index i = 0; i < 4; ++i) CHECK(b(i, j) == b0(i, j) * d[i]);
  scale_rows(b.view(), zeros, ledger);
  CHECK(frobenius_norm(b.view()) == 0.0);
  CHECK(ledger[KernelKind::RowScale] == 3 * 2 * 4 * 3);
  CHECK_THROWS_AS(scale_rows(b.view(), std::vector<double>(3, 1.0), ledger), ContractViolation);
}

TEST_CASE("mirror_to_full") {
  HermitianAccumulator one(1);
  one.matrix(0, 0) = 3.0;
  CHECK(mirror_to_full(one)(0, 0) == Complex(3.0));

  HermitianAccumulator two(2);
  two.matrix(0, 0) = {1.0, 1e-17};
  two.matrix(1, 0) = {2.0, -1.0};
  two.matrix(1, 1) = 4.0;
  two.matrix(0, 1) = {std::nan(""), 0.0};
  const ComplexDense full = mirror_to_full(two);
  CHECK(full(0, 0) == Complex(1.0, 0.0));
  CHECK(full(0, 1) == Complex(2.0, 1.0));
  CHECK(full(1, 0) == Complex(2.0, -1.0));
  CHECK(exactly_equal(full.view(), conjugate_transpose(full.view()).view()));
}

TEST_CASE("ledger totals follow the closed-form annotations") {
  for (const auto kind : backends()) {
    const auto be = make_backend(kind);
    FlopLedger ledger;
    const Index k = 10, n = 6;
    HermitianAccumulator c(n);
    const ComplexDense a = random_matrix(k, n, 1), b = random_matrix(k, n, 2);
    hermitian_rank_k_update(*be, c.view(), a.view(), ledger);
    hermitian_rank_2k_update(*be, c.view(), a.view(), b.view(), ledger);
    ComplexDense g(n, n);
    general_product(*be, g.view(), a.view(), b.view(), true, 1.0, 0.0, ledger);
    ComplexDense x(k, n);
    hermitian_product(*be, x.view(), ComplexDense::identity(k).view(), a.view(), false, 1.0, ledger);
    cholesky_factor(*be, ComplexDense::identity(k).view(), ledger);
    triangular_product(*be, x.view(), ComplexDense::identity(k).view(), a.view(), true, ledger);
    ComplexDense bs = b;
    scale_rows(bs.view(), std::vector<double>(k, 2.0), ledger);
    const std::uint64_t expect = 4 * k * n * n + 8 * k * n * n + 8 * n * n * k + 8 * k * k * n +
                                 (4 * k * k * k) / 3 + 4 * k * k * n + 2 * k * n;
    CHECK(ledger.total() == expect);
    FlopLedger merged;
    merged.merge(ledger);
    merged.merge(ledger);
    CHECK(merged.total() == 2 * expect);
  }
}

TEST_CASE("reference kernels are bitwise independent of the thread count") {
  const auto one = make_backend(BackendKind::Reference, 1);
  const auto many = make_backend(BackendKind::Reference, 3);
  FlopLedger ledger;
  const ComplexDense a = random_matrix(40, 150, 31), b = random_matrix(40, 150, 32);
  HermitianAccumulator c1(150), c3(150);
  hermitian_rank_2k_update(*one, c1.view(), a.view(), b.view(), ledger);
  hermitian_rank_2k_update(*many, c3.view(), a.view(), b.view(), ledger);
  hermitian_rank_k_update(*one, c1.view(), a.view(), ledger);
  hermitian_rank_k_update(*many, c3.view(), a.view(), ledger);
  CHECK(exactly_equal(c1.view(), c3.view()));
  ComplexDense g1(150, 150), g3(150, 150);
  general_product(*one, g1.view(), a.view(), b.view(), true, 1.0, 0.0, ledger);
  general_product(*many, g3.view(), a.view(), b.view(), true, 1.0, 0.0, ledger);
  CHECK(exactly_equal(g1.view(), g3.view()));
}

TEST_CASE("random kernel sweep matches triple loops on both backends") {
  for (const auto kind : backends()) {
    CAPTURE(backend_name(kind));
    const auto be = make_backend(kind, 2);
    FlopLedger ledger;
    Rng rng(77);
    for (int trial = 0; trial < 25; ++trial) {
      const Index m = 1 + rng.index(32), n = 1 + rng.index(32);
      const ComplexDense a = random_matrix(m, n, 1000 + trial), b = random_matrix(m, n, 2000 + trial);
      HermitianAccumulator c(n);
      hermitian_rank_2k_update(*be, c.view(), a.view(), b.view(), ledger);
      hermitian_rank_k_update(*be, c.view(), a.view(), ledger);
      const ComplexDense ab = dense_product(a.view(), b.view(), true);
      const ComplexDense aa = dense_product(a.view(), a.view(), true);
      ComplexDense ref(n, n);
      for (Index j = 0; j < n; ++j)
        for (Index i = 0; i < n; ++i) ref(i, j) = ab(i, j) + std::conj(ab(j, i)) + aa(i, j);
      CHECK(rel_diff_lower(c.view(), ref.view()) <= 1e-12);
    }
  }
}
