#include "hsdla/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "hsdla/hsm_io.hpp"
#include "hsdla/oracle.hpp"
#include "json.hpp"

namespace hsdla::cli {
namespace fs = std::filesystem;
namespace {

using Json = nlohmann::ordered_json;

constexpr double kBuildTolerance = 1e-11;
constexpr double kHermitianTolerance = 1e-12;
constexpr Index kOracleGuard = 4096;
constexpr const char* kBundleFormat = "hsdla-bundle-1";

class VerificationFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

Json parse_json(const std::string& text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(what + ": " + e.what());
  }
}

std::string timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%d-%H%M%S", &tm);
  return buf;
}

fs::path make_run_dir(const std::string& out, std::uint64_t seed) {
  const std::string base = timestamp() + "-seed" + std::to_string(seed);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw IoError("cannot create output directory " + out + ": " + ec.message());
  fs::path dir = fs::path(out) / base;
  for (int i = 1; fs::exists(dir); ++i) dir = fs::path(out) / (base + "-" + std::to_string(i));
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  return dir;
}

template <class T>
std::vector<T> json_list(const Json& v) {
  if (v.is_array()) return v.get<std::vector<T>>();
  return {v.get<T>()};
}

void apply_config_file(RunConfig& c, const std::string& path) {
  const Json j = parse_json(read_text(path), "config " + path);
  if (!j.is_object()) throw IoError("config " + path + ": expected a JSON object");
  try {
    for (const auto& [raw_key, v] : j.items()) {
      std::string key = raw_key;
      std::replace(key.begin(), key.end(), '-', '_');
      if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "atoms") c.atoms = json_list<Index>(v);
      else if (key == "lsph" || key == "l_sph") c.l_sph = json_list<int>(v);
      else if (key == "lnonsph" || key == "l_nonsph") c.l_nonsph = json_list<int>(v);
      else if (key == "basis_factor") c.basis_factor = v.get<double>();
      else if (key == "ng") c.basis_size = json_list<Index>(v);
      else if (key == "hpd_fraction") c.hpd_fraction = v.get<double>();
      else if (key == "backup") c.backup = v.get<bool>();
      else if (key == "threads") c.threads = v.get<int>();
      else if (key == "backend") c.backend = v.get<std::string>();
      else if (key == "reps") c.repetitions = v.get<int>();
      else if (key == "out") c.out = v.get<std::string>();
      else if (key == "in") c.in = v.get<std::string>();
      else if (key == "t_source") c.t_source = v.get<std::string>();
      else if (key == "coeffs") c.coeff_source = v.get<std::string>();
      else if (key == "zero") c.zero = v.get<bool>();
      else if (key == "force") c.force = v.get<bool>();
      else throw ConfigurationError("config " + path + ": unknown key '" + raw_key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigurationError("config " + path + ": " + e.what());
  }
}

Json ledger_json(const FlopLedger& ledger) {
  Json j;
  for (int k = 0; k < kKernelKindCount; ++k) {
    const auto kind = static_cast<KernelKind>(k);
    j[std::string(kernel_kind_name(kind))] = ledger[kind];
  }
  j["total"] = ledger.total();
  return j;
}

Json report_json(const BuildReport& r) {
  Json j;
  j["backend"] = std::string(backend_name(r.backend));
  j["thread_count"] = r.thread_count;
  j["ledger"] = ledger_json(r.ledger);
  j["timings"] = {{"setup", r.timings.setup},
                  {"H_ABBA_BB", r.timings.h_abba_bb},
                  {"S", r.timings.s},
                  {"H_AA", r.timings.h_aa}};
  j["hpd_atom_count"] = r.hpd_atom_count;
  j["non_hpd_atom_count"] = r.non_hpd_atom_count;
  j["hpd_mask"] = r.hpd_mask;
  j["predicted_bytes"] = r.predicted_bytes;
  j["peak_observed_bytes"] = r.peak_observed_bytes;
  return j;
}

Json config_json(const RunConfig& c) {
  return {{"command", c.command},   {"seed", c.seed},
          {"atoms", c.atoms},       {"lsph", c.l_sph},
          {"lnonsph", c.l_nonsph},  {"basis_factor", c.basis_factor},
          {"ng", c.basis_size},     {"hpd_fraction", c.hpd_fraction},
          {"backup", c.backup},     {"threads", c.threads},
          {"backend", c.backend},   {"reps", c.repetitions},
          {"t_source", c.t_source}, {"coeffs", c.coeff_source},
          {"zero", c.zero},         {"force", c.force}};
}

std::vector<Index> heights_for(const std::vector<int>& l_sph, Index atoms) {
  std::vector<Index> h;
  for (Index a = 0; a < atoms; ++a) {
    const int l = l_sph[a % l_sph.size()];
    h.push_back(static_cast<Index>(l + 1) * (l + 1));
  }
  return h;
}

Index basis_for(const RunConfig& c, Index atoms, std::optional<Index> basis_size) {
  if (basis_size) return *basis_size;
  return static_cast<Index>(std::llround(c.basis_factor * static_cast<double>(atoms)));
}

BuildConfig build_config(const RunConfig& c) {
  BuildConfig b;
  b.backup = c.backup;
  b.thread_count = c.threads;
  b.backend = parse_backend(c.backend);
  return b;
}

Bundle load_or_generate(const RunConfig& c) {
  if (!c.in.empty()) return read_bundle(c.in);
  return generate_bundle(c, c.atoms.front(), c.basis_size.empty() ? std::nullopt
                                                                   : std::optional<Index>(c.basis_size.front()));
}

template <class F>
double seconds_of(F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// ---- commands ----

int cmd_gen(const RunConfig& c, std::ostream& out, fs::path* run_dir) {
  const Bundle b = load_or_generate(c);
  const fs::path dir = make_run_dir(c.out, c.seed);
  write_bundle(dir, b);
  if (run_dir) *run_dir = dir;
  out << "bundle written to " << dir.string() << "\n"
      << "N_A=" << b.coeffs.atom_count() << " N_L=" << b.coeffs.layout.max_height()
      << " N_G=" << b.coeffs.basis_size() << "\n";
  return kOk;
}

int cmd_build(const RunConfig& c, std::ostream& out, fs::path* run_dir) {
  Bundle b = load_or_generate(c);
  const RegenerateFn regen = b.regenerator();
  if (!c.backup && !regen) {
    throw ConfigurationError("backup=false needs a bundle that can regenerate its coefficients");
  }
  const BuildResult r = build_all(std::move(b.coeffs), b.tmats, build_config(c), regen);
  const fs::path dir = make_run_dir(c.out, b.seed);
  if (run_dir) *run_dir = dir;
  write_hsm_file(dir / "H.hsm", r.h.view());
  write_hsm_file(dir / "S.hsm", r.s.view());
  write_text(dir / "report.json", report_to_json(r.report) + "\n");
  out << "build written to " << dir.string() << "\n"
      << "FLOPs " << r.report.ledger.total() << ", HPD atoms " << r.report.hpd_atom_count << "/"
      << r.report.hpd_atom_count + r.report.non_hpd_atom_count << ", predicted bytes " << r.report.predicted_bytes
      << "\n";
  return kOk;
}

int cmd_verify(const RunConfig& c, std::ostream& out, std::ostream& err, fs::path* run_dir) {
  Bundle b = load_or_generate(c);
  const Index ng = b.coeffs.basis_size();
  if (ng > kOracleGuard && !c.force) {
    throw ConfigurationError("N_G = " + std::to_string(ng) + " exceeds the oracle guard of " +
                             std::to_string(kOracleGuard) + " (use --force)");
  }
  const RegenerateFn regen = b.regenerator();
  if (!c.backup && !regen) {
    throw ConfigurationError("backup=false needs a bundle that can regenerate its coefficients");
  }
  const double t_residual = b.tmats.hermitian_residual();
  const BuildResult r = build_all(b.coeffs, b.tmats, build_config(c), regen);
  const ComplexDense h_ref = naive_H(b.coeffs, b.tmats);
  const ComplexDense s_ref = naive_S(b.coeffs);

  Json report;
  report["N_A"] = b.coeffs.atom_count();
  report["N_G"] = ng;
  const double err_h = compare_matrices(r.h.view(), h_ref.view());
  const double err_s = compare_matrices(r.s.view(), s_ref.view());
  const double res_h = hermitian_residual(h_ref.view());
  const double res_s = hermitian_residual(s_ref.view());
  const bool exact_h = exactly_equal(r.h.view(), conjugate_transpose(r.h.view()).view());
  const bool exact_s = exactly_equal(r.s.view(), conjugate_transpose(r.s.view()).view());
  report["rel_err_H"] = err_h;
  report["rel_err_S"] = err_s;
  report["T_hermitian_residual"] = t_residual;
  report["oracle_H_hermitian_residual"] = res_h;
  report["oracle_S_hermitian_residual"] = res_s;
  report["H_exactly_hermitian"] = exact_h;
  report["S_exactly_hermitian"] = exact_s;

  std::vector<std::string> failures;
  if (!(err_h <= kBuildTolerance)) failures.push_back("rel_err_H");
  if (!(err_s <= kBuildTolerance)) failures.push_back("rel_err_S");
  if (!(t_residual <= kHermitianTolerance)) failures.push_back("T_hermitian_residual");
  if (!(res_h <= kHermitianTolerance)) failures.push_back("oracle_H_hermitian_residual");
  if (!(res_s <= kHermitianTolerance)) failures.push_back("oracle_S_hermitian_residual");
  if (!exact_h) failures.push_back("H_exactly_hermitian");
  if (!exact_s) failures.push_back("S_exactly_hermitian");

  // Without the interstitial part S has rank at most 2 * sum N_L.
  const Index rank_bound = 2 * b.coeffs.layout.total_rows();
  std::string hpd = "passed";
  if (frobenius_norm(r.s.view()) == 0.0) {
    hpd = "skipped: S is zero";
  } else if (ng > rank_bound) {
    hpd = "skipped: N_G exceeds the muffin-tin rank bound " + std::to_string(rank_bound);
  } else {
    FlopLedger scratch;
    const auto be = make_backend(parse_backend(c.backend), c.threads);
    if (!cholesky_factor(*be, r.s.view(), scratch).success()) {
      hpd = "failed";
      failures.push_back("S_cholesky");
    }
  }
  report["S_cholesky"] = hpd;
  report["failures"] = failures;
  report["build"] = report_json(r.report);

  const fs::path dir = make_run_dir(c.out, b.seed);
  if (run_dir) *run_dir = dir;
  write_text(dir / "verify.json", report.dump(1) + "\n");

  out << std::scientific << std::setprecision(3) << "rel_err_H " << err_h << "\nrel_err_S " << err_s
      << "\nT_hermitian_residual " << t_residual << "\noracle_hermitian_residual H " << res_h << " S " << res_s
      << "\nS_cholesky " << hpd << "\n";
  if (hpd.rfind("skipped", 0) == 0) err << "warning: S HPD check " << hpd << "\n";
  if (!failures.empty()) {
    std::string list;
    for (const auto& f : failures) list += (list.empty() ? "" : ", ") + f;
    throw VerificationFailure("verification failed: " + list);
  }
  out << "verification passed\n";
  return kOk;
}

struct MethodTiming {
  std::vector<double> raw;
  double median_s = 0.0;
  double min_s = 0.0;
};

int cmd_bench(const RunConfig& c, std::ostream& out, std::ostream& err, fs::path* run_dir) {
  const fs::path dir = make_run_dir(c.out, c.seed);
  if (run_dir) *run_dir = dir;
  const BuildConfig bc = build_config(c);
  Json records = Json::array();
  Json failures = Json::array();
  std::ostringstream csv;
  csv << "N_A,N_L,N_G,method,median_s,flops,gflops_per_s,speedup,rel_err\n";
  csv << std::setprecision(9);
  out << std::left << std::setw(6) << "N_A" << std::setw(6) << "N_L" << std::setw(8) << "N_G" << std::setw(8)
      << "method" << std::setw(14) << "median_s" << std::setw(12) << "GFLOP/s" << std::setw(10) << "speedup"
      << "rel_err\n";

  for (std::size_t s = 0; s < c.atoms.size(); ++s) {
    const Index atoms = c.atoms[s];
    const std::optional<Index> ng =
        c.basis_size.empty() ? std::nullopt : std::optional<Index>(c.basis_size[s % c.basis_size.size()]);
    try {
      const Bundle b = generate_bundle(c, atoms, ng);
      const RegenerateFn regen = b.regenerator();
      if (!c.backup && !regen) throw ConfigurationError("backup=false needs regenerable coefficients");
      const Index n_g = b.coeffs.basis_size();
      const Index n_l = b.coeffs.layout.max_height();

      MethodTiming oracle, hsdla;
      ComplexDense h_ref, s_ref;
      std::optional<BuildResult> last;
      for (int rep = 0; rep < c.repetitions; ++rep) {
        oracle.raw.push_back(seconds_of([&] {
          h_ref = naive_H(b.coeffs, b.tmats);
          s_ref = naive_S(b.coeffs);
        }));
        StackedCoefficients input = b.coeffs;
        hsdla.raw.push_back(seconds_of([&] { last = build_all(std::move(input), b.tmats, bc, regen); }));
      }
      for (auto* m : {&oracle, &hsdla}) {
        m->median_s = median(m->raw);
        m->min_s = *std::min_element(m->raw.begin(), m->raw.end());
      }
      const double err_h = compare_matrices(last->h.view(), h_ref.view());
      const double err_s = compare_matrices(last->s.view(), s_ref.view());
      const double rel_err = std::max(err_h, err_s);
      const double speedup = oracle.median_s / hsdla.median_s;
      const std::uint64_t flops = last->report.ledger.total();

      Json rec;
      rec["N_A"] = atoms;
      rec["N_L"] = n_l;
      rec["N_G"] = n_g;
      rec["backend"] = c.backend;
      rec["threads"] = c.threads;
      rec["repetitions"] = c.repetitions;
      rec["flops"] = flops;
      for (const auto& [name, m] : {std::pair<const char*, const MethodTiming*>{"oracle", &oracle},
                                    std::pair<const char*, const MethodTiming*>{"hsdla", &hsdla}}) {
        rec["methods"][name] = {{"timings_s", m->raw},
                                {"median_s", m->median_s},
                                {"min_s", m->min_s},
                                {"gflops_per_s", flops / m->median_s * 1e-9}};
      }
      rec["speedup"] = speedup;
      rec["rel_err_H"] = err_h;
      rec["rel_err_S"] = err_s;
      rec["predicted_bytes"] = last->report.predicted_bytes;
      rec["report"] = report_json(last->report);
      records.push_back(std::move(rec));

      for (const auto& [name, m, sp] : {std::tuple<const char*, const MethodTiming*, double>{"oracle", &oracle, 1.0},
                                        std::tuple<const char*, const MethodTiming*, double>{"hsdla", &hsdla, speedup}}) {
        const double rate = flops / m->median_s * 1e-9;
        csv << atoms << ',' << n_l << ',' << n_g << ',' << name << ',' << m->median_s << ',' << flops << ',' << rate
            << ',' << sp << ',' << rel_err << '\n';
        out << std::left << std::setw(6) << atoms << std::setw(6) << n_l << std::setw(8) << n_g << std::setw(8) << name
            << std::setw(14) << std::setprecision(6) << m->median_s << std::setw(12) << std::setprecision(3) << rate
            << std::setw(10) << sp << std::setprecision(2) << std::scientific << rel_err << std::defaultfloat << "\n";
      }
    } catch (const std::exception& e) {
      err << "size N_A=" << atoms << " failed: " << e.what() << "\n";
      failures.push_back({{"N_A", atoms}, {"error", e.what()}});
    }
  }
  Json doc;
  doc["config"] = config_json(c);
  doc["records"] = std::move(records);
  doc["failures"] = std::move(failures);
  write_text(dir / "bench.json", doc.dump(1) + "\n");
  write_text(dir / "bench.csv", csv.str());
  out << "bench written to " << dir.string() << "\n";
  return kOk;
}

int dispatch(const RunConfig& c, std::ostream& out, std::ostream& err, fs::path* run_dir) {
  c.validate();
  if (c.command == "gen") return cmd_gen(c, out, run_dir);
  if (c.command == "build") return cmd_build(c, out, run_dir);
  if (c.command == "verify") return cmd_verify(c, out, err, run_dir);
  return cmd_bench(c, out, err, run_dir);
}

}  // namespace

void RunConfig::validate() const {
  if (threads < 1) throw ConfigurationError("threads must be >= 1");
  if (repetitions < 1) throw ConfigurationError("reps must be >= 1");
  if (atoms.empty() || std::any_of(atoms.begin(), atoms.end(), [](Index a) { return a < 1; })) {
    throw ConfigurationError("atoms must be >= 1");
  }
  if (l_sph.empty() || l_nonsph.empty()) throw ConfigurationError("cutoff lists must not be empty");
  const std::size_t n = std::max(l_sph.size(), l_nonsph.size());
  for (std::size_t i = 0; i < n; ++i) {
    const int ls = l_sph[i % l_sph.size()], ln = l_nonsph[i % l_nonsph.size()];
    if (ls < 0 || ln < 0) throw ConfigurationError("cutoffs must be non-negative");
    if (ln > ls) {
      throw ConfigurationError("lnonsph " + std::to_string(ln) + " exceeds lsph " + std::to_string(ls));
    }
  }
  if (basis_size.empty() && !(basis_factor >= 50.0 && basis_factor <= 80.0)) {
    throw ConfigurationError("basis-factor must lie in [50, 80]");
  }
  if (std::any_of(basis_size.begin(), basis_size.end(), [](Index g) { return g < 1; })) {
    throw ConfigurationError("ng must be >= 1");
  }
  if (!(hpd_fraction >= 0.0 && hpd_fraction <= 1.0)) throw ConfigurationError("hpd-fraction must lie in [0, 1]");
  parse_backend(backend);
  if (t_source != "synthetic" && t_source != "gaunt") throw ConfigurationError("t-source must be synthetic|gaunt");
  if (coeff_source != "physics" && coeff_source != "random") {
    throw ConfigurationError("coeffs must be physics|random");
  }
}

RegenerateFn Bundle::regenerator() const {
  if (coeff_source == "physics" && system) return make_regenerator(*system);
  if (coeff_source == "random") {
    const std::uint64_t s = seed + 1;
    const AtomBlockLayout layout = coeffs.layout;
    const Index ng = coeffs.basis_size();
    return [s, layout, ng](StackedCoefficients& c) { c = random_coefficients(s, layout, ng); };
  }
  return {};
}

Bundle generate_bundle(const RunConfig& c, Index atoms, std::optional<Index> basis_size) {
  Bundle b;
  b.seed = c.seed;
  b.hpd_fraction = c.hpd_fraction;
  b.t_source = c.t_source;
  b.coeff_source = c.zero ? "zero" : c.coeff_source;
  std::vector<int> l_nonsph;
  for (Index a = 0; a < atoms; ++a) l_nonsph.push_back(c.l_nonsph[a % c.l_nonsph.size()]);

  if (c.zero) {
    const AtomBlockLayout layout(heights_for(c.l_sph, atoms));
    b.coeffs = StackedCoefficients::zeros(layout, basis_for(c, atoms, basis_size));
    b.tmats = TMatrixSet::zeros(layout);
    b.t_source = "zero";
    return b;
  }
  SynthOptions o;
  o.seed = c.seed;
  o.atoms = atoms;
  o.l_sph = c.l_sph;
  o.l_nonsph = c.l_nonsph;
  o.basis_factor = c.basis_factor;
  o.target_basis_size = basis_size.value_or(0);
  SystemSpec spec = synth_system(o);
  const AtomBlockLayout layout = spec.layout();
  b.coeffs = c.coeff_source == "physics" ? compute_AB(spec) : random_coefficients(c.seed + 1, layout, spec.basis_size());
  if (c.t_source == "gaunt") {
    b.tmats = assemble_T(spec, synth_radial_integrals(c.seed + 3, spec)).to_tmatrix_set();
  } else {
    b.tmats = synth_T(c.seed + 2, layout, l_nonsph, c.hpd_fraction);
  }
  b.system = std::move(spec);
  return b;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream ss;
  ss << std::hex << std::setw(16) << std::setfill('0') << v;
  return ss.str();
}

void write_bundle(const fs::path& dir, const Bundle& b) {
  std::error_code ec;
  fs::create_directories(dir / "T", ec);
  if (ec) throw IoError("cannot create " + (dir / "T").string() + ": " + ec.message());
  std::vector<std::string> files;
  auto put_matrix = [&](const std::string& rel, ConstMatrixView m) {
    write_hsm_file(dir / rel, m);
    files.push_back(rel);
  };
  put_matrix("A.hsm", b.coeffs.a_star.view());
  put_matrix("B.hsm", b.coeffs.b_star.view());
  Json atoms = Json::array();
  for (Index a = 0; a < b.tmats.atom_count(); ++a) {
    const auto& t = b.tmats.atoms[a];
    char tag[16];
    std::snprintf(tag, sizeof tag, "%03zu", static_cast<std::size_t>(a));
    put_matrix("T/aa_" + std::string(tag) + ".hsm", t.aa.view());
    put_matrix("T/ab_" + std::string(tag) + ".hsm", t.ab.view());
    put_matrix("T/bb_" + std::string(tag) + ".hsm", t.bb.view());
    atoms.push_back({{"size", t.size()}, {"l_sph", t.l_sph}, {"l_nonsph", t.l_nonsph}, {"tag", tag}});
  }
  if (b.system) {
    write_text(dir / "system.json", system_to_json(*b.system) + "\n");
    files.push_back("system.json");
  }
  Json meta;
  meta["format"] = kBundleFormat;
  meta["seed"] = b.seed;
  meta["N_A"] = b.coeffs.atom_count();
  meta["N_L"] = b.coeffs.layout.max_height();
  meta["N_G"] = b.coeffs.basis_size();
  meta["block_heights"] = b.coeffs.layout.heights();
  meta["capacity_rows"] = b.coeffs.layout.capacity_rows();
  meta["udot_norms"] = b.coeffs.udot_norms;
  meta["coeff_source"] = b.coeff_source;
  meta["t_source"] = b.t_source;
  meta["hpd_fraction"] = b.hpd_fraction;
  meta["t_matrices"] = std::move(atoms);
  write_text(dir / "bundle.json", meta.dump(1) + "\n");
  files.push_back("bundle.json");

  Json manifest;
  manifest["N_A"] = b.coeffs.atom_count();
  manifest["N_L"] = b.coeffs.layout.max_height();
  manifest["N_G"] = b.coeffs.basis_size();
  manifest["seed"] = b.seed;
  Json list = Json::array();
  for (const auto& rel : files) {
    const std::string bytes = read_text(dir / rel);
    list.push_back({{"path", rel}, {"bytes", bytes.size()}, {"fnv1a64", hex64(fnv1a64(bytes))}});
  }
  manifest["files"] = std::move(list);
  write_text(dir / "manifest.json", manifest.dump(1) + "\n");
}

Bundle read_bundle(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("input bundle " + dir.string() + " is not a directory");
  const Json meta = parse_json(read_text(dir / "bundle.json"), (dir / "bundle.json").string());
  Bundle b;
  try {
    if (meta.at("format").get<std::string>() != kBundleFormat) throw IoError("unknown bundle format");
    b.seed = meta.at("seed").get<std::uint64_t>();
    b.coeff_source = meta.at("coeff_source").get<std::string>();
    b.t_source = meta.at("t_source").get<std::string>();
    b.hpd_fraction = meta.at("hpd_fraction").get<double>();
    AtomBlockLayout layout(meta.at("block_heights").get<std::vector<Index>>(),
                           meta.at("capacity_rows").get<Index>());
    b.coeffs.layout = layout;
    b.coeffs.udot_norms = meta.at("udot_norms").get<std::vector<double>>();
    b.coeffs.a_star = read_hsm_file(dir / "A.hsm");
    b.coeffs.b_star = read_hsm_file(dir / "B.hsm");
    if (b.coeffs.basis_size() != meta.at("N_G").get<Index>()) throw IoError("A.hsm disagrees with N_G");
    for (const auto& t : meta.at("t_matrices")) {
      const std::string tag = t.at("tag").get<std::string>();
      AtomTMatrices m{read_hsm_file(dir / "T" / ("aa_" + tag + ".hsm")),
                      read_hsm_file(dir / "T" / ("ab_" + tag + ".hsm")),
                      read_hsm_file(dir / "T" / ("bb_" + tag + ".hsm")), t.at("l_sph").get<int>(),
                      t.at("l_nonsph").get<int>()};
      b.tmats.atoms.push_back(std::move(m));
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError("bundle.json: " + std::string(e.what()));
  } catch (const ContractViolation& e) {
    throw IoError("bundle.json: " + std::string(e.what()));
  }
  try {
    b.coeffs.validate();
    b.tmats.validate(b.coeffs.layout);
  } catch (const ContractViolation& e) {
    throw IoError("inconsistent bundle: " + std::string(e.what()));
  }
  if (fs::exists(dir / "system.json")) {
    try {
      b.system = system_from_json(read_text(dir / "system.json"));
    } catch (const std::invalid_argument& e) {
      throw IoError(e.what());
    }
  }
  return b;
}

std::string report_to_json(const BuildReport& report) { return report_json(report).dump(1); }

FlopLedger ledger_from_json(const std::string& text) {
  const Json j = parse_json(text, "report");
  FlopLedger ledger;
  try {
    for (int k = 0; k < kKernelKindCount; ++k) {
      const auto kind = static_cast<KernelKind>(k);
      ledger.add(kind, j.at("ledger").at(std::string(kernel_kind_name(kind))).get<std::uint64_t>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError("report ledger: " + std::string(e.what()));
  }
  return ledger;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err, fs::path* run_dir) {
  CLI::App app{"Hamiltonian and overlap matrix assembly with blocked level-3 updates", "hsdla"};
  app.require_subcommand(1);
  RunConfig flags;
  std::string config_path, atoms, lsph, lnonsph, ng;
  std::vector<std::pair<CLI::Option*, std::function<void(RunConfig&)>>> setters;

  auto list_of = [](const std::string& text, auto sample) {
    std::vector<decltype(sample)> values;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        std::size_t used = 0;
        const long long v = std::stoll(item, &used);
        if (used != item.size()) throw std::invalid_argument(item);
        values.push_back(static_cast<decltype(sample)>(v));
      } catch (const std::exception&) {
        throw ConfigurationError("invalid list entry '" + item + "'");
      }
    }
    if (values.empty()) throw ConfigurationError("empty list");
    return values;
  };

  const std::pair<const char*, const char*> commands[] = {
      {"gen", "write a synthetic input bundle"},
      {"build", "assemble H and S"},
      {"verify", "compare the assembly against the entrywise oracle"},
      {"bench", "time the assembly against the oracle"},
  };
  for (const auto& [name, about] : commands) {
    CLI::App* sub = app.add_subcommand(name, about);
    sub->add_option("--config", config_path, "JSON file with default settings");
    auto opt = [&](const char* flag, auto& target, const char* help, auto setter) {
      setters.emplace_back(sub->add_option(flag, target, help), setter);
    };
    opt("--seed", flags.seed, "generator seed", [&](RunConfig& c) { c.seed = flags.seed; });
    opt("--atoms", atoms, "atom count (comma list for bench)",
        [&](RunConfig& c) { c.atoms = list_of(atoms, Index{}); });
    opt("--lsph", lsph, "l_sph per atom, cycled", [&](RunConfig& c) { c.l_sph = list_of(lsph, int{}); });
    opt("--lnonsph", lnonsph, "l_nonsph per atom, cycled",
        [&](RunConfig& c) { c.l_nonsph = list_of(lnonsph, int{}); });
    opt("--basis-factor", flags.basis_factor, "N_G / N_A in [50, 80]",
        [&](RunConfig& c) { c.basis_factor = flags.basis_factor; });
    opt("--ng", ng, "explicit basis size (overrides --basis-factor)",
        [&](RunConfig& c) { c.basis_size = list_of(ng, Index{}); });
    opt("--hpd-fraction", flags.hpd_fraction, "fraction of atoms with HPD T_AA",
        [&](RunConfig& c) { c.hpd_fraction = flags.hpd_fraction; });
    opt("--backup", flags.backup, "keep copies of A*/B* (true|false)", [&](RunConfig& c) { c.backup = flags.backup; });
    opt("--threads", flags.threads, "kernel threads", [&](RunConfig& c) { c.threads = flags.threads; });
    opt("--backend", flags.backend, "reference|optimized", [&](RunConfig& c) { c.backend = flags.backend; });
    opt("--reps", flags.repetitions, "bench repetitions", [&](RunConfig& c) { c.repetitions = flags.repetitions; });
    opt("--out", flags.out, "output directory", [&](RunConfig& c) { c.out = flags.out; });
    opt("--in", flags.in, "input bundle directory", [&](RunConfig& c) { c.in = flags.in; });
    opt("--t-source", flags.t_source, "synthetic|gaunt", [&](RunConfig& c) { c.t_source = flags.t_source; });
    opt("--coeffs", flags.coeff_source, "physics|random", [&](RunConfig& c) { c.coeff_source = flags.coeff_source; });
    setters.emplace_back(sub->add_flag("--zero", flags.zero, "all-zero coefficients and T"),
                         [&](RunConfig& c) { c.zero = flags.zero; });
    setters.emplace_back(sub->add_flag("--force", flags.force, "lift the oracle size guard"),
                         [&](RunConfig& c) { c.force = flags.force; });
  }

  try {
    try {
      app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
      const int code = app.exit(e, out, err);
      return code == 0 ? kOk : kConfigError;
    }
    RunConfig c;
    c.command = app.get_subcommands().front()->get_name();
    if (!config_path.empty()) apply_config_file(c, config_path);
    for (auto& [option, set] : setters)
      if (option->count() > 0) set(c);
    return dispatch(c, out, err, run_dir);
  } catch (const VerificationFailure& e) {
    err << e.what() << "\n";
    return kVerifyFailure;
  } catch (const ConfigurationError& e) {
    err << "configuration error: " << e.what() << "\n";
    return kConfigError;
  } catch (const IoError& e) {
    err << "io error: " << e.what() << "\n";
    return kIoError;
  } catch (const ContractViolation& e) {
    err << "contract violation: " << e.what() << "\n";
    return kContractError;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kContractError;
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, fs::path* run_dir) {
  std::vector<const char*> argv{"hsdla"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err, run_dir);
}

}  // namespace hsdla::cli
