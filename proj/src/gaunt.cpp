#include "hsdla/gaunt.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

#include "hsdla/special_functions.hpp"

namespace hsdla {

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  if (n < 1) throw ContractViolation("gauss_legendre: need at least one node");
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    nodes[i] = x;
    nodes[n - 1 - i] = -x;
    weights[i] = weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
}

GauntTable::GauntTable(int l_max, int l_max_pp)
    : l_max_(l_max),
      l_max_pp_(l_max_pp),
      n_lm_(static_cast<Index>(l_max + 1) * (l_max + 1)) {
  if (l_max < 0 || l_max_pp < 0) throw ContractViolation("GauntTable: negative l_max");
  const int l_all = std::max(l_max, l_max_pp);
  const int degree = 2 * l_max + l_max_pp;
  const int n_theta = std::max(2 * l_all + 1, degree / 2 + 2);
  const int n_phi = std::max(4 * l_all + 1, degree + 1);

  std::vector<double> x, w;
  gauss_legendre(n_theta, x, w);

  // Y_lm(theta, phi) = Theta_lm(cos theta) e^{i m phi}; sample Theta at phi = 0.
  std::vector<std::vector<double>> theta(n_theta);
  for (int k = 0; k < n_theta; ++k) {
    const double st = std::sqrt(std::max(0.0, 1.0 - x[k] * x[k]));
    const auto y = spherical_harmonics_all(l_all, {st, 0.0, x[k]});
    theta[k].resize(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) theta[k][i] = y[i].real();
  }
  // Trapezoid in phi of e^{i q phi}; exact (2 pi or 0) because |q| < n_phi.
  auto phi_integral = [&](int q) {
    Complex sum{};
    for (int p = 0; p < n_phi; ++p) sum += std::polar(1.0, q * 2.0 * kPi * p / n_phi);
    return sum * (2.0 * kPi / n_phi);
  };
  const Complex phi_zero = phi_integral(0);

  values_.assign(n_lm_ * n_lm_ * static_cast<Index>(l_max_pp + 1), Complex{});
  for (int lp = 0; lp <= l_max; ++lp)
    for (int mp = -lp; mp <= lp; ++mp)
      for (int l = 0; l <= l_max; ++l)
        for (int m = -l; m <= l; ++m) {
          const int mpp = mp - m;
          for (int lpp = std::abs(mpp); lpp <= l_max_pp; ++lpp) {
            double sum = 0.0;
            for (int k = 0; k < n_theta; ++k) {
              sum += w[k] * theta[k][lm_index(lp, mp)] * theta[k][lm_index(l, m)] * theta[k][lm_index(lpp, mpp)];
            }
            values_[(lm_index(lp, mp) * n_lm_ + lm_index(l, m)) * (l_max_pp + 1) + lpp] = sum * phi_zero;
          }
        }
}

Complex GauntTable::operator()(int lp, int mp, int l, int m, int lpp, int mpp) const {
  auto check = [](int ll, int mm, int lim) {
    if (ll < 0 || ll > lim || mm < -ll || mm > ll) {
      throw ContractViolation("GauntTable: (l, m) = (" + std::to_string(ll) + ", " + std::to_string(mm) +
                              ") outside table with l_max " + std::to_string(lim));
    }
  };
  check(lp, mp, l_max_);
  check(l, m, l_max_);
  check(lpp, mpp, l_max_pp_);
  if (mpp != mp - m) return {};
  return values_[(lm_index(lp, mp) * n_lm_ + lm_index(l, m)) * (l_max_pp_ + 1) + lpp];
}

Complex gaunt(int lp, int mp, int l, int m, int lpp, int mpp) {
  static std::mutex mutex;
  static std::map<std::pair<int, int>, GauntTable> cache;
  const auto key = std::make_pair(std::max({lp, l, 0}), std::max(lpp, 0));
  std::lock_guard lock(mutex);
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, GauntTable(key.first, key.second)).first;
  return it->second(lp, mp, l, m, lpp, mpp);
}

}  // namespace hsdla
