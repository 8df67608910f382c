#include <fstream>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hsdla/cli.hpp"
#include "hsdla/hsm_io.hpp"
#include "test_util.hpp"

using namespace hsdla;
using Json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("hsdla-cli-" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

struct Outcome {
  int code;
  std::string out, err;
  fs::path dir;
};

Outcome run(std::vector<std::string> args) {
  std::ostringstream out, err;
  fs::path dir;
  const int code = cli::run(args, out, err, &dir);
  return {code, out.str(), err.str(), dir};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

Json load(const fs::path& p) { return Json::parse(slurp(p)); }

}  // namespace

TEST_CASE("gen writes a reproducible bundle") {
  TempDir tmp;
  const auto a = run({"gen", "--seed", "42", "--atoms", "4", "--out", (tmp.path / "a").string()});
  const auto b = run({"gen", "--seed", "42", "--atoms", "4", "--out", (tmp.path / "b").string()});
  REQUIRE(a.code == 0);
  REQUIRE(b.code == 0);
  const Json ma = load(a.dir / "manifest.json");
  const Json mb = load(b.dir / "manifest.json");
  CHECK(ma == mb);
  CHECK(ma["N_A"] == 4);
  CHECK(ma["N_L"] == 81);
  CHECK(std::abs(ma["N_G"].get<double>() - 200.0) <= 20.0);
  for (const auto& f : ma["files"]) {
    const std::string bytes = slurp(a.dir / f["path"].get<std::string>());
    CHECK(f["bytes"] == bytes.size());
    CHECK(f["fnv1a64"] == cli::hex64(cli::fnv1a64(bytes)));
  }
  CHECK(fs::exists(a.dir / "A.hsm"));
  CHECK(fs::exists(a.dir / "T" / "aa_003.hsm"));
  CHECK(a.dir.filename().string().find("seed42") != std::string::npos);
  CHECK(cli::fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(cli::fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("bundle round trip") {
  TempDir tmp;
  cli::RunConfig c;
  c.seed = 5;
  c.l_sph = {3};
  c.l_nonsph = {2};
  c.basis_size = {12};
  const cli::Bundle b = cli::generate_bundle(c, 3, Index{12});
  cli::write_bundle(tmp.path, b);
  const cli::Bundle back = cli::read_bundle(tmp.path);
  CHECK(exactly_equal(back.coeffs.a_star.view(), b.coeffs.a_star.view()));
  CHECK(exactly_equal(back.coeffs.b_star.view(), b.coeffs.b_star.view()));
  CHECK(back.coeffs.udot_norms == b.coeffs.udot_norms);
  CHECK(back.coeffs.layout == b.coeffs.layout);
  CHECK(back.system.has_value());
  for (Index a = 0; a < 3; ++a) CHECK(exactly_equal(back.tmats.atoms[a].ab.view(), b.tmats.atoms[a].ab.view()));
  REQUIRE(back.regenerator());
  StackedCoefficients regen = back.coeffs;
  back.regenerator()(regen);
  CHECK(exactly_equal(regen.a_star.view(), b.coeffs.a_star.view()));
}

TEST_CASE("configuration errors exit with 1") {
  TempDir tmp;
  const std::string out = (tmp.path / "runs").string();
  CHECK(run({"gen", "--lsph", "2", "--lnonsph", "3", "--out", out}).code == 1);
  CHECK(run({"gen", "--basis-factor", "20", "--out", out}).code == 1);
  CHECK(run({"build", "--hpd-fraction", "2", "--out", out}).code == 1);
  CHECK(run({"build", "--backend", "fast", "--out", out}).code == 1);
  CHECK(run({"build", "--threads", "0", "--out", out}).code == 1);
  CHECK(run({"frobnicate"}).code == 1);
  CHECK(run({"gen", "--unknown-flag"}).code == 1);
  CHECK(run({"build", "--zero", "--backup", "false", "--lsph", "1", "--lnonsph", "0", "--ng", "4", "--out", out}).code ==
        1);
  CHECK(run({"verify", "--ng", "5000", "--atoms", "1", "--lsph", "1", "--lnonsph", "0", "--out", out}).code == 1);
}

TEST_CASE("malformed input exits with 2") {
  TempDir tmp;
  const std::string out = (tmp.path / "runs").string();
  CHECK(run({"build", "--in", (tmp.path / "missing").string(), "--out", out}).code == 2);
  const auto g = run({"gen", "--seed", "1", "--atoms", "1", "--lsph", "1", "--lnonsph", "0", "--ng", "4", "--out", out});
  REQUIRE(g.code == 0);
  {
    std::ofstream f(g.dir / "A.hsm", std::ios::binary | std::ios::trunc);
    f << "HSDLAM1";
  }
  const auto r = run({"build", "--in", g.dir.string(), "--out", out});
  CHECK(r.code == 2);
  CHECK(!r.err.empty());
  std::ofstream(tmp.path / "bad.json") << "{ not json";
  CHECK(run({"gen", "--config", (tmp.path / "bad.json").string(), "--out", out}).code == 2);
}

TEST_CASE("build of a zero bundle") {
  TempDir tmp;
  const auto r = run({"build", "--zero", "--atoms", "2", "--lsph", "2", "--lnonsph", "1", "--ng", "10", "--out",
                      tmp.path.string()});
  REQUIRE(r.code == 0);
  CHECK(fs::file_size(r.dir / "H.hsm") == 24 + 16 * 100);
  CHECK(fs::file_size(r.dir / "S.hsm") == 24 + 16 * 100);
  const ComplexDense h = read_hsm_file(r.dir / "H.hsm");
  CHECK(frobenius_norm(h.view()) == 0.0);
  const Json rep = load(r.dir / "report.json");
  CHECK(rep["hpd_atom_count"] == 0);
  CHECK(rep["non_hpd_atom_count"] == 2);
}

TEST_CASE("build report ledger equals the prediction") {
  TempDir tmp;
  const auto r = run({"build", "--seed", "7", "--atoms", "3", "--lsph", "3", "--lnonsph", "2", "--ng", "24", "--out",
                      tmp.path.string()});
  REQUIRE(r.code == 0);
  const std::string text = slurp(r.dir / "report.json");
  const Json rep = Json::parse(text);
  const FlopLedger ledger = cli::ledger_from_json(text);
  std::vector<bool> mask;
  for (const auto& v : rep["hpd_mask"]) mask.push_back(v.get<bool>());
  CHECK(ledger == predict_flops(std::vector<Index>(3, 16), 24, mask));
  CHECK(rep["ledger"]["total"] == ledger.total());
  CHECK(rep["predicted_bytes"] == estimate_memory(3, 16, 24, true));
  CHECK(rep["peak_observed_bytes"] == rep["predicted_bytes"]);
  CHECK(rep["backend"] == "reference");
  for (const char* phase : {"setup", "H_ABBA_BB", "S", "H_AA"}) CHECK(rep["timings"][phase].get<double>() >= 0.0);

  // --backup false regenerates from the system description and gives the same matrices
  const auto nb = run({"build", "--seed", "7", "--atoms", "3", "--lsph", "3", "--lnonsph", "2", "--ng", "24",
                       "--backup", "false", "--out", tmp.path.string()});
  REQUIRE(nb.code == 0);
  CHECK(nb.dir != r.dir);
  CHECK(slurp(nb.dir / "H.hsm") == slurp(r.dir / "H.hsm"));
  CHECK(slurp(nb.dir / "S.hsm") == slurp(r.dir / "S.hsm"));
}

TEST_CASE("verify passes, flags corrupted T, and skips on zeros") {
  TempDir tmp;
  const std::string out = tmp.path.string();
  const auto ok = run({"verify", "--seed", "7", "--atoms", "3", "--lsph", "2,3,3", "--lnonsph", "1,2,2", "--ng", "16",
                       "--out", out});
  CHECK(ok.code == 0);
  const Json v = load(ok.dir / "verify.json");
  CHECK(v["rel_err_H"].get<double>() <= 1e-11);
  CHECK(v["rel_err_S"].get<double>() <= 1e-11);
  CHECK(v["failures"].empty());

  const auto g = run({"gen", "--seed", "8", "--atoms", "2", "--lsph", "2", "--lnonsph", "1", "--ng", "12", "--out", out});
  REQUIRE(g.code == 0);
  ComplexDense bb = read_hsm_file(g.dir / "T" / "bb_001.hsm");
  bb(0, 1) += Complex(0.5, 0.25);
  write_hsm_file(g.dir / "T" / "bb_001.hsm", bb.view());
  const auto bad = run({"verify", "--in", g.dir.string(), "--out", out});
  CHECK(bad.code == 4);
  CHECK(bad.err.find("T_hermitian_residual") != std::string::npos);

  const auto z = run({"verify", "--zero", "--atoms", "2", "--lsph", "1", "--lnonsph", "0", "--ng", "6", "--out", out});
  CHECK(z.code == 0);
  CHECK(z.err.find("warning") != std::string::npos);

  const auto gaunt = run({"verify", "--seed", "3", "--atoms", "2", "--lsph", "4", "--lnonsph", "3", "--ng", "30",
                          "--t-source", "gaunt", "--out", out});
  CHECK(gaunt.code == 0);
  const auto random = run({"verify", "--seed", "3", "--atoms", "3", "--lsph", "3", "--lnonsph", "2", "--ng", "40",
                           "--coeffs", "random", "--backup", "false", "--out", out});
  CHECK(random.code == 0);
}

TEST_CASE("bench records timings and CSV") {
  TempDir tmp;
  const auto r = run({"bench", "--seed", "2", "--atoms", "2,3", "--lsph", "3", "--lnonsph", "2", "--ng", "20,30",
                      "--reps", "3", "--out", tmp.path.string()});
  REQUIRE(r.code == 0);
  const Json bench = load(r.dir / "bench.json");
  REQUIRE(bench["records"].size() == 2);
  for (const auto& rec : bench["records"]) {
    CHECK(rec["methods"]["hsdla"]["timings_s"].size() == 3);
    CHECK(rec["methods"]["oracle"]["timings_s"].size() == 3);
    CHECK(rec["rel_err_H"].get<double>() <= 1e-11);
    CHECK(rec["speedup"].get<double>() > 0.0);
  }
  CHECK(bench["records"][1]["N_G"] == 30);
  const std::string csv = slurp(r.dir / "bench.csv");
  CHECK(csv.rfind("N_A,N_L,N_G,method,median_s,flops,gflops_per_s,speedup,rel_err\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
}

TEST_CASE("config file supplies defaults that flags override") {
  TempDir tmp;
  std::ofstream(tmp.path / "cfg.json") << R"({"seed": 11, "atoms": 2, "l-sph": [2], "l_nonsph": [1], "ng": [9]})";
  const auto a = run({"gen", "--config", (tmp.path / "cfg.json").string(), "--out", (tmp.path / "a").string()});
  REQUIRE(a.code == 0);
  const Json m = load(a.dir / "manifest.json");
  CHECK(m["seed"] == 11);
  CHECK(m["N_G"] == 9);
  CHECK(m["N_L"] == 9);
  const auto b = run({"gen", "--config", (tmp.path / "cfg.json").string(), "--seed", "12", "--ng", "7", "--out",
                      (tmp.path / "b").string()});
  REQUIRE(b.code == 0);
  const Json mb = load(b.dir / "manifest.json");
  CHECK(mb["seed"] == 12);
  CHECK(mb["N_G"] == 7);
  CHECK(mb["N_A"] == 2);
}

TEST_CASE("report JSON round trip is idempotent") {
  BuildReport r;
  r.ledger.add(KernelKind::HermitianRankK, 123);
  r.ledger.add(KernelKind::Cholesky, 7);
  r.hpd_mask = {true, false};
  r.hpd_atom_count = 1;
  r.non_hpd_atom_count = 1;
  const std::string text = cli::report_to_json(r);
  CHECK(cli::ledger_from_json(text) == r.ledger);
  CHECK(Json::parse(text)["ledger"]["total"] == 130);
  CHECK_THROWS(cli::ledger_from_json("[]"));
}
