#include "hsdla/setup.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "hsdla/gaunt.hpp"
#include "json.hpp"

namespace hsdla {
namespace {

using Json = nlohmann::ordered_json;

constexpr double kSymmetryTolerance = 1e-12;

Vec3 unit_or_z(const Vec3& v) {
  const double n = norm(v);
  if (n == 0.0) return {0.0, 0.0, 1.0};
  return {v[0] / n, v[1] / n, v[2] / n};
}

int cycled(const std::vector<int>& values, Index a) {
  if (values.empty()) throw ConfigurationError("empty per-atom cutoff list");
  return values[a % values.size()];
}

Mat3 random_rotation(Rng& rng) {
  // unit quaternion from three uniforms
  const double u1 = rng.uniform(), u2 = rng.uniform(), u3 = rng.uniform();
  const double q0 = std::sqrt(1 - u1) * std::sin(2 * kPi * u2);
  const double q1 = std::sqrt(1 - u1) * std::cos(2 * kPi * u2);
  const double q2 = std::sqrt(u1) * std::sin(2 * kPi * u3);
  const double q3 = std::sqrt(u1) * std::cos(2 * kPi * u3);
  return {1 - 2 * (q2 * q2 + q3 * q3), 2 * (q1 * q2 - q0 * q3),     2 * (q1 * q3 + q0 * q2),
          2 * (q1 * q2 + q0 * q3),     1 - 2 * (q1 * q1 + q3 * q3), 2 * (q2 * q3 - q0 * q1),
          2 * (q1 * q3 - q0 * q2),     2 * (q2 * q3 + q0 * q1),     1 - 2 * (q1 * q1 + q2 * q2)};
}

// s(X)_{l',l;(l'',m'')} = (-1)^m'' conj(X_{l,l';(l'',-m'')})
Complex partner(const AtomRadialIntegrals& r, const std::vector<Complex>& x, int lp, int l, int lpp, int mpp) {
  const double sign = (mpp % 2 == 0) ? 1.0 : -1.0;
  return sign * std::conj(x[r.index(l, lp, lpp, -mpp)]);
}

void fill_hermitian_block(ComplexDense& m, Index d, Rng& rng, double scale) {
  for (Index j = 0; j < d; ++j) {
    m(j, j) = rng.uniform(-scale, scale);
    for (Index i = j + 1; i < d; ++i) {
      m(i, j) = rng.complex_uniform(scale);
      m(j, i) = std::conj(m(i, j));
    }
  }
}

// G^H G / d for a random d x d G with entries in the given square.
ComplexDense gram_block(Index d, Rng& rng, double scale) {
  ComplexDense g(d, d);
  for (Index j = 0; j < d; ++j)
    for (Index i = 0; i < d; ++i) g(i, j) = rng.complex_uniform(scale);
  ComplexDense out(d, d);
  for (Index j = 0; j < d; ++j)
    for (Index i = j; i < d; ++i) {
      Complex s{};
      for (Index k = 0; k < d; ++k) s += std::conj(g(k, i)) * g(k, j);
      s /= static_cast<double>(d);
      out(i, j) = i == j ? Complex(s.real()) : s;
      out(j, i) = std::conj(out(i, j));
    }
  return out;
}

Json vec_json(const Vec3& v) { return Json::array({v[0], v[1], v[2]}); }
Vec3 json_vec(const Json& j) {
  if (!j.is_array() || j.size() != 3) throw std::invalid_argument("expected a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace

Vec3 apply(const Mat3& r, const Vec3& v) {
  return {r[0] * v[0] + r[1] * v[1] + r[2] * v[2], r[3] * v[0] + r[4] * v[1] + r[5] * v[2],
          r[6] * v[0] + r[7] * v[1] + r[8] * v[2]};
}

void RadialBoundaryData::validate() const {
  for (Index a = 0; a < channels.size(); ++a)
    for (Index l = 0; l < channels[a].size(); ++l) {
      const auto& c = channels[a][l];
      if (!(std::abs(c.wronskian()) >= kMinWronskian)) {
        throw ContractViolation("atom " + std::to_string(a) + ", l " + std::to_string(l) + ": Wronskian " +
                                std::to_string(c.wronskian()) + " below threshold");
      }
      if (!(c.udot_norm >= 0.0)) throw ContractViolation("negative udot norm at atom " + std::to_string(a));
    }
}

AtomBlockLayout SystemSpec::layout() const {
  std::vector<Index> heights;
  for (const int l : l_sph) heights.push_back(static_cast<Index>(l + 1) * (l + 1));
  return AtomBlockLayout(heights);
}

void SystemSpec::validate() const {
  const Index n = positions.size();
  if (n < 1) throw ContractViolation("system has no atoms");
  if (rotations.size() != n || mt_radius.size() != n || l_sph.size() != n || l_nonsph.size() != n ||
      radial.channels.size() != n) {
    throw ContractViolation("per-atom system fields disagree in length");
  }
  if (k_vectors.empty()) throw ContractViolation("system has no basis functions");
  if (!(omega > 0.0)) throw ContractViolation("cell volume must be positive");
  for (Index a = 0; a < n; ++a) {
    if (l_sph[a] < 0 || l_nonsph[a] < 0 || l_nonsph[a] > l_sph[a]) {
      throw ContractViolation("atom " + std::to_string(a) + ": need 0 <= l_nonsph <= l_sph");
    }
    if (!(mt_radius[a] > 0.0)) throw ContractViolation("atom " + std::to_string(a) + ": MT radius must be positive");
    if (radial.channels[a].size() != static_cast<Index>(l_sph[a] + 1)) {
      throw ContractViolation("atom " + std::to_string(a) + ": radial data must cover l = 0..l_sph");
    }
    const Mat3& r = rotations[a];
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double s = 0.0;
        for (int k = 0; k < 3; ++k) s += r[3 * k + i] * r[3 * k + j];
        if (std::abs(s - (i == j ? 1.0 : 0.0)) > 1e-12) {
          throw ContractViolation("atom " + std::to_string(a) + ": rotation is not orthogonal");
        }
      }
    const double det = r[0] * (r[4] * r[8] - r[5] * r[7]) - r[1] * (r[3] * r[8] - r[5] * r[6]) +
                       r[2] * (r[3] * r[7] - r[4] * r[6]);
    if (std::abs(std::abs(det) - 1.0) > 1e-12) {
      throw ContractViolation("atom " + std::to_string(a) + ": rotation determinant is not +-1");
    }
  }
  radial.validate();
}

std::string system_to_json(const SystemSpec& spec) {
  Json j;
  j["N_A"] = spec.atom_count();
  j["N_G"] = spec.basis_size();
  j["omega"] = spec.omega;
  j["cell_length"] = spec.cell_length;
  j["k_point"] = vec_json(spec.k_point);
  Json atoms = Json::array();
  for (Index a = 0; a < spec.atom_count(); ++a) {
    Json atom;
    atom["position"] = vec_json(spec.positions[a]);
    atom["rotation"] = spec.rotations[a];
    atom["mt_radius"] = spec.mt_radius[a];
    atom["l_sph"] = spec.l_sph[a];
    atom["l_nonsph"] = spec.l_nonsph[a];
    Json radial = Json::array();
    for (const auto& c : spec.radial.channels[a]) {
      radial.push_back({{"u", c.u},
                        {"u_prime", c.u_prime},
                        {"udot", c.udot},
                        {"udot_prime", c.udot_prime},
                        {"E_l", c.energy},
                        {"udot_norm", c.udot_norm}});
    }
    atom["radial"] = std::move(radial);
    atoms.push_back(std::move(atom));
  }
  j["atoms"] = std::move(atoms);
  Json ks = Json::array();
  for (const auto& k : spec.k_vectors) ks.push_back(vec_json(k));
  j["K_vectors"] = std::move(ks);
  return j.dump(1);
}

SystemSpec system_from_json(const std::string& text) {
  SystemSpec spec;
  try {
    const Json j = Json::parse(text);
    spec.omega = j.at("omega").get<double>();
    spec.cell_length = j.at("cell_length").get<double>();
    spec.k_point = json_vec(j.at("k_point"));
    for (const auto& atom : j.at("atoms")) {
      spec.positions.push_back(json_vec(atom.at("position")));
      spec.rotations.push_back(atom.at("rotation").get<Mat3>());
      spec.mt_radius.push_back(atom.at("mt_radius").get<double>());
      spec.l_sph.push_back(atom.at("l_sph").get<int>());
      spec.l_nonsph.push_back(atom.at("l_nonsph").get<int>());
      std::vector<RadialChannel> channels;
      for (const auto& c : atom.at("radial")) {
        channels.push_back({c.at("u").get<double>(), c.at("u_prime").get<double>(), c.at("udot").get<double>(),
                            c.at("udot_prime").get<double>(), c.at("E_l").get<double>(),
                            c.at("udot_norm").get<double>()});
      }
      spec.radial.channels.push_back(std::move(channels));
    }
    for (const auto& k : j.at("K_vectors")) spec.k_vectors.push_back(json_vec(k));
    if (j.contains("N_A") && j["N_A"].get<Index>() != spec.atom_count()) {
      throw std::invalid_argument("N_A does not match the atom list");
    }
    if (j.contains("N_G") && j["N_G"].get<Index>() != spec.basis_size()) {
      throw std::invalid_argument("N_G does not match the K-vector list");
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("system JSON: ") + e.what());
  }
  return spec;
}

StackedCoefficients compute_AB(const SystemSpec& spec) {
  spec.validate();
  const Index ng = spec.basis_size();
  StackedCoefficients c = StackedCoefficients::zeros(spec.layout(), ng);
  for (Index a = 0; a < spec.atom_count(); ++a) {
    const int lmax = spec.l_sph[a];
    const Index off = c.layout.offset(a);
    for (int l = 0; l <= lmax; ++l)
      for (int m = -l; m <= l; ++m) c.udot_norms[off + lm_index(l, m)] = spec.radial.channels[a][l].udot_norm;
  }
  const double root_omega = std::sqrt(spec.omega);
  for (Index t = 0; t < ng; ++t) {
    const Vec3& kv = spec.k_vectors[t];
    const double k = norm(kv);
    const Vec3 khat = unit_or_z(kv);
    for (Index a = 0; a < spec.atom_count(); ++a) {
      const int lmax = spec.l_sph[a];
      const Index off = c.layout.offset(a);
      const auto y = spherical_harmonics_all(lmax, unit_or_z(apply(spec.rotations[a], khat)));
      const auto bessel = spherical_bessel_all(lmax, spec.mt_radius[a] * k);
      const Complex phase = std::polar(1.0, dot(kv, spec.positions[a]));
      Complex il{1.0, 0.0};
      for (int l = 0; l <= lmax; ++l, il *= Complex(0.0, 1.0)) {
        const auto& ch = spec.radial.channels[a][l];
        const Complex pref = 4.0 * kPi / (root_omega * ch.wronskian()) * il * phase;
        const double fa = ch.udot * k * bessel.dj[l] - ch.udot_prime * bessel.j[l];
        const double fb = -ch.u * k * bessel.dj[l] + ch.u_prime * bessel.j[l];
        for (int m = -l; m <= l; ++m) {
          const Complex p = pref * std::conj(y[lm_index(l, m)]);
          c.a_star(off + lm_index(l, m), t) = p * fa;
          c.b_star(off + lm_index(l, m), t) = p * fb;
        }
      }
    }
  }
  return c;
}

RegenerateFn make_regenerator(SystemSpec spec) {
  return [spec = std::move(spec)](StackedCoefficients& coeffs) {
    StackedCoefficients fresh = compute_AB(spec);
    if (!(fresh.layout == coeffs.layout) || fresh.basis_size() != coeffs.basis_size()) {
      throw ContractViolation("regenerated coefficients do not match the original layout");
    }
    coeffs = std::move(fresh);
  };
}

ReducedOverlapInputs reduced_overlap_inputs(const SystemSpec& spec) {
  spec.validate();
  const int lmax = *std::max_element(spec.l_sph.begin(), spec.l_sph.end());
  if (std::any_of(spec.l_sph.begin(), spec.l_sph.end(), [&](int l) { return l != lmax; })) {
    throw ContractViolation("reduced overlap inputs need one l_sph for all atoms");
  }
  ReducedOverlapInputs in;
  in.l_sph = lmax;
  in.positions = spec.positions;
  in.k_vectors = spec.k_vectors;
  in.omega = spec.omega;
  const Index ng = spec.basis_size();
  in.f.assign(spec.atom_count(), std::vector<std::vector<double>>(lmax + 1, std::vector<double>(ng)));
  in.wronskian.assign(spec.atom_count(), std::vector<double>(lmax + 1));
  for (Index a = 0; a < spec.atom_count(); ++a)
    for (int l = 0; l <= lmax; ++l) in.wronskian[a][l] = spec.radial.channels[a][l].wronskian();
  for (Index t = 0; t < ng; ++t) {
    const double k = norm(spec.k_vectors[t]);
    for (Index a = 0; a < spec.atom_count(); ++a) {
      const auto bessel = spherical_bessel_all(lmax, spec.mt_radius[a] * k);
      for (int l = 0; l <= lmax; ++l) {
        const auto& ch = spec.radial.channels[a][l];
        in.f[a][l][t] = ch.udot * k * bessel.dj[l] - ch.udot_prime * bessel.j[l];
      }
    }
  }
  return in;
}

AtomRadialIntegrals AtomRadialIntegrals::zeros(int l_nonsph) {
  AtomRadialIntegrals r;
  r.l_nonsph = l_nonsph;
  const Index n = static_cast<Index>(l_nonsph + 1) * (l_nonsph + 1) * r.lpp_count();
  r.uu.assign(n, {});
  r.dd.assign(n, {});
  r.ud.assign(n, {});
  r.du.assign(n, {});
  return r;
}

std::vector<AtomRadialIntegrals> synth_radial_integrals(std::uint64_t seed, const SystemSpec& spec, double scale) {
  Rng rng(seed);
  std::vector<AtomRadialIntegrals> out;
  for (Index a = 0; a < spec.atom_count(); ++a) {
    const int ln = spec.l_nonsph[a];
    AtomRadialIntegrals r = AtomRadialIntegrals::zeros(ln);
    for (auto* v : {&r.uu, &r.dd, &r.ud})
      for (auto& x : *v) x = rng.complex_uniform(scale);
    // Project uu and dd onto the Hermitian-compatible subspace, tie du to ud.
    AtomRadialIntegrals raw = r;
    for (int lp = 0; lp <= ln; ++lp)
      for (int l = 0; l <= ln; ++l)
        for (int lpp = 0; lpp <= ln; ++lpp)
          for (int mpp = -lpp; mpp <= lpp; ++mpp) {
            const Index i = r.index(lp, l, lpp, mpp);
            r.uu[i] = 0.5 * (raw.uu[i] + partner(raw, raw.uu, lp, l, lpp, mpp));
            r.dd[i] = 0.5 * (raw.dd[i] + partner(raw, raw.dd, lp, l, lpp, mpp));
            r.du[i] = partner(raw, raw.ud, lp, l, lpp, mpp);
          }
    out.push_back(std::move(r));
  }
  return out;
}

TMatrixSet AssembledT::to_tmatrix_set() const {
  TMatrixSet set;
  for (const auto& t : atoms) {
    AtomTMatrices m{t.aa, t.ab, t.bb, t.l_sph, t.l_nonsph};
    const Index n = t.ab.rows();
    for (Index j = 0; j < n; ++j)
      for (Index i = 0; i < n; ++i) m.ab(i, j) = 0.5 * (t.ab(i, j) + std::conj(t.ba(j, i)));
    set.atoms.push_back(std::move(m));
  }
  return set;
}

AssembledT assemble_T(const SystemSpec& spec, const std::vector<AtomRadialIntegrals>& integrals) {
  spec.validate();
  if (integrals.size() != spec.atom_count()) throw ContractViolation("assemble_T: one integral set per atom");
  AssembledT out;
  for (Index a = 0; a < spec.atom_count(); ++a) {
    const int ls = spec.l_sph[a];
    const int ln = spec.l_nonsph[a];
    const auto& r = integrals[a];
    const Index size = static_cast<Index>(r.lpp_count()) * (ln + 1) * (ln + 1);
    if (r.l_nonsph != ln || r.uu.size() != size || r.dd.size() != size || r.ud.size() != size ||
        r.du.size() != size) {
      throw ContractViolation("assemble_T: atom " + std::to_string(a) + " integrals have the wrong shape");
    }
    for (int lp = 0; lp <= ln; ++lp)
      for (int l = 0; l <= ln; ++l)
        for (int lpp = 0; lpp <= ln; ++lpp)
          for (int mpp = -lpp; mpp <= lpp; ++mpp) {
            const Index i = r.index(lp, l, lpp, mpp);
            const double bad = std::max({std::abs(r.uu[i] - partner(r, r.uu, lp, l, lpp, mpp)),
                                         std::abs(r.dd[i] - partner(r, r.dd, lp, l, lpp, mpp)),
                                         std::abs(r.du[i] - partner(r, r.ud, lp, l, lpp, mpp))});
            if (bad > kSymmetryTolerance) {
              throw ContractViolation("assemble_T: atom " + std::to_string(a) +
                                      " radial integrals break the Hermitian symmetry by " + std::to_string(bad));
            }
          }

    const Index n = static_cast<Index>(ls + 1) * (ls + 1);
    AssembledAtomT t{ComplexDense(n, n), ComplexDense(n, n), ComplexDense(n, n), ComplexDense(n, n), ls, ln};
    const GauntTable g(ln, ln);
    for (int lp = 0; lp <= ln; ++lp)
      for (int mp = -lp; mp <= lp; ++mp)
        for (int l = 0; l <= ln; ++l)
          for (int m = -l; m <= l; ++m) {
            Complex saa{}, sbb{}, sab{}, sba{};
            for (int lpp = 0; lpp <= ln; ++lpp) {
              const int mpp = mp - m;
              if (std::abs(mpp) > lpp) continue;
              const Complex gc = g(lp, mp, l, m, lpp, mpp);
              const Index i = r.index(lp, l, lpp, mpp);
              saa += r.uu[i] * gc;
              sbb += r.dd[i] * gc;
              sab += r.ud[i] * gc;
              sba += r.du[i] * gc;
            }
            const Index row = lm_index(lp, mp), col = lm_index(l, m);
            t.aa(row, col) = saa;
            t.bb(row, col) = sbb;
            t.ab(row, col) = sab;
            t.ba(row, col) = sba;
          }
    for (int l = 0; l <= ls; ++l) {
      const auto& ch = spec.radial.channels[a][l];
      for (int m = -l; m <= l; ++m) {
        const Index d = lm_index(l, m);
        t.aa(d, d) += ch.energy;
        t.bb(d, d) += ch.energy * std::pow(ch.udot_norm, kBbNormPower);
        t.ab(d, d) += 1.0;
      }
    }
    out.atoms.push_back(std::move(t));
  }
  return out;
}

SystemSpec synth_system(const SynthOptions& o) {
  if (o.atoms < 1) throw ConfigurationError("need at least one atom");
  if (o.target_basis_size == 0 && !(o.basis_factor >= 50.0 && o.basis_factor <= 80.0)) {
    throw ConfigurationError("basis factor must lie in [50, 80], got " + std::to_string(o.basis_factor));
  }
  if (!(o.volume_per_atom > 0.0) || !(o.mt_radius > 0.0)) {
    throw ConfigurationError("volume per atom and MT radius must be positive");
  }
  SystemSpec spec;
  for (Index a = 0; a < o.atoms; ++a) {
    const int ls = cycled(o.l_sph, a), ln = cycled(o.l_nonsph, a);
    if (ls < 0 || ln < 0) throw ConfigurationError("cutoffs must be non-negative");
    if (ln > ls) {
      throw ConfigurationError("l_nonsph " + std::to_string(ln) + " exceeds l_sph " + std::to_string(ls) +
                               " at atom " + std::to_string(a));
    }
    spec.l_sph.push_back(ls);
    spec.l_nonsph.push_back(ln);
  }
  const double target = o.target_basis_size ? static_cast<double>(o.target_basis_size)
                                            : std::round(o.basis_factor * static_cast<double>(o.atoms));
  if (target > 2.0e6) throw ConfigurationError("requested basis is too large for the generator");

  Rng rng(o.seed);
  spec.omega = o.volume_per_atom * static_cast<double>(o.atoms);
  spec.cell_length = std::cbrt(spec.omega);
  const double alat = spec.cell_length;

  // Random positions, rejecting overlaps with periodic images.
  const double min_distance = 2.0 * o.mt_radius + 0.1;
  if (min_distance >= alat && o.atoms > 1) throw ConfigurationError("muffin-tin spheres would overlap");
  for (Index a = 0; a < o.atoms; ++a) {
    Vec3 x{};
    bool placed = false;
    for (int attempt = 0; attempt < 100000 && !placed; ++attempt) {
      for (auto& v : x) v = rng.uniform(0.0, alat);
      placed = true;
      for (const auto& y : spec.positions) {
        Vec3 d{};
        for (int c = 0; c < 3; ++c) d[c] = std::remainder(x[c] - y[c], alat);
        if (norm(d) < min_distance) {
          placed = false;
          break;
        }
      }
    }
    if (!placed) throw ConfigurationError("cannot place non-overlapping muffin-tin spheres");
    spec.positions.push_back(x);
    spec.rotations.push_back(random_rotation(rng));
    spec.mt_radius.push_back(o.mt_radius);
    std::vector<RadialChannel> channels;
    for (int l = 0; l <= spec.l_sph[a]; ++l) {
      RadialChannel ch;
      ch.u = rng.uniform(0.5, 1.5);
      ch.u_prime = rng.uniform(-1.0, 1.0);
      ch.udot = rng.uniform(0.2, 0.8);
      const double w = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.5, 1.5);
      ch.udot_prime = (ch.udot * ch.u_prime - w) / ch.u;
      ch.energy = rng.uniform(-1.0, 1.0);
      ch.udot_norm = rng.uniform(0.5, 2.0);
      channels.push_back(ch);
    }
    spec.radial.channels.push_back(std::move(channels));
  }

  const double b = 2.0 * kPi / alat;
  for (auto& c : spec.k_point) c = rng.uniform(-0.5, 0.5) * b;

  // Smallest |K| first; take every K up to the shell that reaches the target.
  const double kmax_guess = std::cbrt(6.0 * kPi * kPi * target / spec.omega);
  const int nmax = static_cast<int>(std::ceil(kmax_guess * 1.5 / b)) + 2;
  struct Candidate {
    double k;
    Vec3 v;
  };
  std::vector<Candidate> cand;
  for (int i = -nmax; i <= nmax; ++i)
    for (int j = -nmax; j <= nmax; ++j)
      for (int l = -nmax; l <= nmax; ++l) {
        const Vec3 v{spec.k_point[0] + b * i, spec.k_point[1] + b * j, spec.k_point[2] + b * l};
        cand.push_back({norm(v), v});
      }
  std::stable_sort(cand.begin(), cand.end(), [](const Candidate& x, const Candidate& y) { return x.k < y.k; });
  const Index want = static_cast<Index>(target);
  if (want < 1 || want > cand.size()) throw ConfigurationError("infeasible basis size for this cell");
  const double cutoff = cand[want - 1].k * (1.0 + 1e-12);
  for (const auto& c : cand) {
    if (c.k > cutoff) break;
    spec.k_vectors.push_back(c.v);
  }
  spec.validate();
  return spec;
}

TMatrixSet synth_T(std::uint64_t seed, const AtomBlockLayout& layout, const std::vector<int>& l_nonsph,
                   double hpd_fraction) {
  if (!(hpd_fraction >= 0.0 && hpd_fraction <= 1.0)) {
    throw ConfigurationError("hpd_fraction must lie in [0, 1]");
  }
  const Index atoms = layout.atom_count();
  Rng rng(seed);
  std::vector<Index> order(atoms);
  std::iota(order.begin(), order.end(), Index{0});
  rng.shuffle(order);
  const auto hpd_count = static_cast<Index>(std::llround(hpd_fraction * static_cast<double>(atoms)));
  std::vector<bool> hpd(atoms, false);
  for (Index i = 0; i < hpd_count; ++i) hpd[order[i]] = true;

  TMatrixSet set;
  for (Index a = 0; a < atoms; ++a) {
    const Index n = layout.height(a);
    const int ln = cycled(l_nonsph, a);
    const Index d = std::min<Index>(static_cast<Index>(ln + 1) * (ln + 1), n);
    AtomTMatrices t{ComplexDense(n, n), ComplexDense(n, n), ComplexDense(n, n), static_cast<int>(std::sqrt(n)) - 1,
                    ln};
    if (hpd[a]) {
      copy_matrix(gram_block(d, rng, 1.0).view(), t.aa.block(0, 0, d, d));
      for (Index i = 0; i < d; ++i) t.aa(i, i) += 1.0;
      for (Index i = d; i < n; ++i) t.aa(i, i) = rng.uniform(0.5, 2.0);
    } else {
      copy_matrix(gram_block(d, rng, 0.9).view(), t.aa.block(0, 0, d, d));
      for (Index i = 0; i < d; ++i) t.aa(i, i) -= 2.0;
      for (Index i = d; i < n; ++i) t.aa(i, i) = rng.uniform(-2.0, 2.0);
    }
    fill_hermitian_block(t.bb, d, rng, 1.0);
    for (Index i = d; i < n; ++i) t.bb(i, i) = rng.uniform(0.5, 2.0);
    for (Index j = 0; j < d; ++j)
      for (Index i = 0; i < d; ++i) t.ab(i, j) = rng.complex_uniform(0.5);
    for (Index i = 0; i < n; ++i) t.ab(i, i) += 1.0;
    set.atoms.push_back(std::move(t));
  }
  return set;
}

StackedCoefficients random_coefficients(std::uint64_t seed, const AtomBlockLayout& layout, Index basis_size) {
  Rng rng(seed);
  StackedCoefficients c = StackedCoefficients::zeros(layout, basis_size);
  const Index rows = layout.total_rows();
  for (Index j = 0; j < basis_size; ++j)
    for (Index i = 0; i < rows; ++i) {
      c.a_star(i, j) = rng.complex_uniform();
      c.b_star(i, j) = rng.complex_uniform();
    }
  for (Index a = 0; a < layout.atom_count(); ++a) {
    double norm_l = 0.0;
    for (Index r = 0; r < layout.height(a); ++r) {
      const auto l = static_cast<Index>(std::sqrt(static_cast<double>(r)) + 1e-9);
      if (l * l == r) norm_l = rng.uniform(0.5, 2.0);
      c.udot_norms[layout.offset(a) + r] = norm_l;
    }
  }
  return c;
}

}  // namespace hsdla
