#include "hsdla/special_functions.hpp"

#include <algorithm>
#include <cmath>

namespace hsdla {
namespace {

// Taylor series of j_l about 0, accurate while x < (l + 1) / 2.
double bessel_series(int l, double x) {
  double lead = 1.0;
  for (int k = 1; k <= l; ++k) lead *= x / (2 * k + 1);
  const double h = -0.5 * x * x;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 200; ++k) {
    term *= h / (k * (2.0 * l + 2.0 * k + 1.0));
    sum += term;
    if (std::abs(term) < 1e-17 * std::abs(sum)) break;
  }
  return lead * sum;
}

// Downward recurrence from well above l_max, normalised against j_0 or j_1.
void bessel_downward(int l_max, double x, std::vector<double>& j) {
  const int start = l_max + 25 + static_cast<int>(x);
  double upper = 0.0;
  double current = 1e-300;
  for (int l = start; l > l_max; --l) {
    const double lower = (2 * l + 1) / x * current - upper;
    upper = current;
    current = lower;
    if (std::abs(current) > 1e250) {
      current *= 1e-250;
      upper *= 1e-250;
    }
  }
  j[l_max] = current;
  if (l_max >= 1) j[l_max - 1] = (2 * l_max + 1) / x * current - upper;
  for (int l = l_max - 1; l >= 1; --l) {
    j[l - 1] = (2 * l + 1) / x * j[l] - j[l + 1];
    if (std::abs(j[l - 1]) > 1e250) {
      for (int k = l - 1; k <= l_max; ++k) j[k] *= 1e-250;
    }
  }
  const double j0 = std::sin(x) / x;
  const double j1 = std::sin(x) / (x * x) - std::cos(x) / x;
  const double scale = (std::abs(j0) >= std::abs(j1) || l_max == 0) ? j0 / j[0] : j1 / j[1];
  for (auto& v : j) v *= scale;
}

}  // namespace

double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

std::vector<double> legendre_all(int l_max, double x) {
  if (l_max < 0) throw ContractViolation("legendre_all: negative l_max");
  if (std::abs(x) > 1.0 + 1e-12 || !std::isfinite(x)) {
    throw ContractViolation("legendre_all: argument " + std::to_string(x) + " outside [-1, 1]");
  }
  x = std::clamp(x, -1.0, 1.0);
  std::vector<double> p(static_cast<std::size_t>(l_max) + 1);
  p[0] = 1.0;
  if (l_max >= 1) p[1] = x;
  for (int l = 1; l < l_max; ++l) p[l + 1] = ((2 * l + 1) * x * p[l] - l * p[l - 1]) / (l + 1);
  return p;
}

BesselValues spherical_bessel_all(int l_max, double x) {
  if (l_max < 0) throw ContractViolation("spherical_bessel_all: negative l_max");
  if (!(x >= 0.0) || !std::isfinite(x)) {
    throw ContractViolation("spherical_bessel_all: argument must be finite and >= 0");
  }
  const int top = l_max + 1;  // one extra order for the derivatives
  std::vector<double> j(static_cast<std::size_t>(top) + 1, 0.0);
  if (x == 0.0) {
    j[0] = 1.0;
  } else if (x > top) {
    j[0] = std::sin(x) / x;
    j[1] = std::sin(x) / (x * x) - std::cos(x) / x;
    for (int l = 1; l < top; ++l) j[l + 1] = (2 * l + 1) / x * j[l] - j[l - 1];
  } else {
    if (x >= 0.5) bessel_downward(top, x, j);
    for (int l = 0; l <= top; ++l)
      if (x < 0.5 * (l + 1)) j[l] = bessel_series(l, x);
  }
  BesselValues out;
  out.j.assign(j.begin(), j.begin() + l_max + 1);
  out.dj.resize(static_cast<std::size_t>(l_max) + 1);
  out.dj[0] = -j[1];
  for (int l = 1; l <= l_max; ++l) out.dj[l] = (l * j[l - 1] - (l + 1) * j[l + 1]) / (2 * l + 1);
  return out;
}

std::vector<Complex> spherical_harmonics_all(int l_max, const Vec3& direction) {
  if (l_max < 0) throw ContractViolation("spherical_harmonics: negative l");
  const double len = norm(direction);
  if (!(std::abs(len - 1.0) <= 1e-10)) {
    throw ContractViolation("spherical_harmonics: direction has length " + std::to_string(len));
  }
  const double ct = std::clamp(direction[2] / len, -1.0, 1.0);
  const double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
  const double phi = (direction[0] == 0.0 && direction[1] == 0.0) ? 0.0 : std::atan2(direction[1], direction[0]);

  const std::size_t n = static_cast<std::size_t>(l_max + 1) * static_cast<std::size_t>(l_max + 1);
  std::vector<Complex> y(n);
  std::vector<double> theta(n);  // normalised associated Legendre part, m >= 0
  theta[lm_index(0, 0)] = 1.0 / std::sqrt(4.0 * kPi);
  for (int m = 1; m <= l_max; ++m) {
    theta[lm_index(m, m)] = -std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * st * theta[lm_index(m - 1, m - 1)];
  }
  for (int m = 0; m < l_max; ++m) theta[lm_index(m + 1, m)] = std::sqrt(2.0 * m + 3.0) * ct * theta[lm_index(m, m)];
  for (int m = 0; m <= l_max; ++m) {
    for (int l = m + 2; l <= l_max; ++l) {
      const double a = std::sqrt((4.0 * l * l - 1.0) / (double(l) * l - double(m) * m));
      const double b = std::sqrt((double(l - 1) * (l - 1) - double(m) * m) / (4.0 * (l - 1) * (l - 1) - 1.0));
      theta[lm_index(l, m)] = a * (ct * theta[lm_index(l - 1, m)] - b * theta[lm_index(l - 2, m)]);
    }
  }
  for (int l = 0; l <= l_max; ++l) {
    for (int m = 0; m <= l; ++m) {
      const Complex v = theta[lm_index(l, m)] * std::polar(1.0, m * phi);
      y[lm_index(l, m)] = v;
      if (m > 0) y[lm_index(l, -m)] = (m % 2 == 0 ? 1.0 : -1.0) * std::conj(v);
    }
  }
  return y;
}

Complex spherical_harmonic(int l, int m, const Vec3& direction) {
  if (l < 0 || m < -l || m > l) {
    throw ContractViolation("spherical_harmonic: invalid (l, m) = (" + std::to_string(l) + ", " + std::to_string(m) +
                            ")");
  }
  return spherical_harmonics_all(l, direction)[lm_index(l, m)];
}

}  // namespace hsdla
