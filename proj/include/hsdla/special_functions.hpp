#pragma once

#include <array>
#include <complex>
#include <vector>

#include "hsdla/matrix.hpp"

namespace hsdla {

using Vec3 = std::array<double, 3>;

inline constexpr double kPi = 3.14159265358979323846;

double dot(const Vec3& a, const Vec3& b);
double norm(const Vec3& a);

/// P_0(x) .. P_lmax(x); x is clamped to [-1, 1] when within 1e-12 of it.
std::vector<double> legendre_all(int l_max, double x);

struct BesselValues {
  std::vector<double> j;
  std::vector<double> dj;  // derivative with respect to x
};

/// j_0(x) .. j_lmax(x) and their derivatives, x >= 0.
BesselValues spherical_bessel_all(int l_max, double x);

/// Condon-Shortley spherical harmonic Y_lm at a unit direction.
Complex spherical_harmonic(int l, int m, const Vec3& direction);

/// Y_lm for all l <= l_max at one direction, indexed l*l + l + m.
std::vector<Complex> spherical_harmonics_all(int l_max, const Vec3& direction);

inline constexpr Index lm_index(int l, int m) { return static_cast<Index>(l * l + l + m); }

}  // namespace hsdla
