#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "hsdla/builder.hpp"
#include "hsdla/oracle.hpp"
#include "hsdla/special_functions.hpp"

namespace hsdla {

/// Seeded generator with a platform-independent mapping to [0, 1).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  Complex complex_uniform(double scale = 1.0) { return {uniform(-scale, scale), uniform(-scale, scale)}; }
  /// Uniform index in [0, n).
  std::uint64_t index(std::uint64_t n) { return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)); }
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[index(i)]);
  }

 private:
  std::mt19937_64 engine_;
};

using Mat3 = std::array<double, 9>;  // row major

Vec3 apply(const Mat3& r, const Vec3& v);

struct RadialChannel {
  double u = 0.0;
  double u_prime = 0.0;
  double udot = 0.0;
  double udot_prime = 0.0;
  double energy = 0.0;
  double udot_norm = 0.0;

  double wronskian() const { return udot * u_prime - u * udot_prime; }
};

inline constexpr double kMinWronskian = 1e-8;

/// radial[a][l] for l <= l_sph of atom a.
struct RadialBoundaryData {
  std::vector<std::vector<RadialChannel>> channels;

  /// Throws ContractViolation when |W| < kMinWronskian or a norm is negative.
  void validate() const;
};

struct SystemSpec {
  std::vector<Vec3> positions;
  std::vector<Mat3> rotations;
  std::vector<double> mt_radius;
  std::vector<int> l_sph;
  std::vector<int> l_nonsph;
  std::vector<Vec3> k_vectors;
  Vec3 k_point{};
  double omega = 0.0;
  double cell_length = 0.0;
  RadialBoundaryData radial;

  Index atom_count() const { return positions.size(); }
  Index basis_size() const { return k_vectors.size(); }
  AtomBlockLayout layout() const;
  /// Throws ContractViolation on broken invariants.
  void validate() const;
};

std::string system_to_json(const SystemSpec& spec);
/// Throws std::invalid_argument on malformed documents.
SystemSpec system_from_json(const std::string& text);

/// Matching coefficients A*, B* with rows grouped per atom, (l_sph + 1)^2 each.
StackedCoefficients compute_AB(const SystemSpec& spec);

/// Regeneration callback re-running compute_AB.
RegenerateFn make_regenerator(SystemSpec spec);

/// Legendre-reduced overlap inputs derived from the same boundary data.
ReducedOverlapInputs reduced_overlap_inputs(const SystemSpec& spec);

/// Radial integrals for l', l <= l_nonsph and L'' = (l'', m''), l'' <= l_nonsph.
struct AtomRadialIntegrals {
  int l_nonsph = 0;
  std::vector<Complex> uu, dd, ud, du;  // dd: udot udot, ud: u udot, du: udot u

  Index lpp_count() const { return static_cast<Index>(l_nonsph + 1) * (l_nonsph + 1); }
  Index index(int lp, int l, int lpp, int mpp) const {
    return (static_cast<Index>(lp) * (l_nonsph + 1) + l) * lpp_count() + lm_index(lpp, mpp);
  }
  static AtomRadialIntegrals zeros(int l_nonsph);
};

/// Random integrals satisfying the symmetries that make T_AA, T_BB Hermitian
/// and the summed part of T_BA equal to that of T_AB^H.
std::vector<AtomRadialIntegrals> synth_radial_integrals(std::uint64_t seed, const SystemSpec& spec,
                                                        double scale = 0.1);

/// The T^[BB] diagonal is E_l * ||udot||^kBbNormPower.
inline constexpr int kBbNormPower = 1;

struct AssembledAtomT {
  ComplexDense aa, ab, ba, bb;
  int l_sph = 0;
  int l_nonsph = 0;
};

struct AssembledT {
  std::vector<AssembledAtomT> atoms;

  /// T_AB' = (T_AB + T_BA^H) / 2, so that the builder's T_BA = T_AB'^H holds.
  TMatrixSet to_tmatrix_set() const;
};

/// Gaunt sum plus the diagonal terms, per atom. Throws ContractViolation when
/// the integrals break the required symmetry by more than 1e-12.
AssembledT assemble_T(const SystemSpec& spec, const std::vector<AtomRadialIntegrals>& integrals);

struct SynthOptions {
  std::uint64_t seed = 0;
  Index atoms = 1;
  /// Cycled over atoms.
  std::vector<int> l_sph{8};
  std::vector<int> l_nonsph{6};
  double basis_factor = 50.0;
  /// Overrides basis_factor when nonzero.
  Index target_basis_size = 0;
  double volume_per_atom = 100.0;
  double mt_radius = 1.8;
};

/// Throws ConfigurationError on infeasible options.
SystemSpec synth_system(const SynthOptions& options);

/// Synthetic T matrices acting on the full block height of each atom. Dense
/// block (l_nonsph + 1)^2, diagonal tail. round(hpd_fraction * N_A) atoms
/// get an HPD T_AA, the rest an indefinite one.
TMatrixSet synth_T(std::uint64_t seed, const AtomBlockLayout& layout, const std::vector<int>& l_nonsph,
                   double hpd_fraction);

/// Uniform complex entries in the unit square, udot norms in [0.5, 2]
/// constant per (l, atom) row group.
StackedCoefficients random_coefficients(std::uint64_t seed, const AtomBlockLayout& layout, Index basis_size);

}  // namespace hsdla
