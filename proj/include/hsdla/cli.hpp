#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hsdla/builder.hpp"
#include "hsdla/setup.hpp"

namespace hsdla::cli {

enum ExitCode : int { kOk = 0, kConfigError = 1, kIoError = 2, kContractError = 3, kVerifyFailure = 4 };

struct RunConfig {
  std::string command;
  std::uint64_t seed = 0;
  std::vector<Index> atoms{2};
  std::vector<int> l_sph{8};
  std::vector<int> l_nonsph{6};
  double basis_factor = 50.0;
  /// Explicit basis sizes, cycled over `atoms`; empty means basis_factor.
  std::vector<Index> basis_size;
  double hpd_fraction = 0.5;
  bool backup = true;
  int threads = 1;
  std::string backend = "reference";
  int repetitions = 3;
  std::string out = "runs";
  std::string in;
  std::string t_source = "synthetic";  // synthetic | gaunt
  std::string coeff_source = "physics";  // physics | random
  bool zero = false;
  bool force = false;

  /// Throws ConfigurationError.
  void validate() const;
};

/// Runs one command line (argv[0] is the program name). `run_dir` receives
/// the output directory when one was created.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err,
        std::filesystem::path* run_dir = nullptr);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        std::filesystem::path* run_dir = nullptr);

/// In-memory input set of one build.
struct Bundle {
  std::uint64_t seed = 0;
  StackedCoefficients coeffs;
  TMatrixSet tmats;
  std::optional<SystemSpec> system;
  std::string t_source;
  std::string coeff_source;
  double hpd_fraction = 0.0;

  /// Empty when the bundle cannot re-create its coefficients.
  RegenerateFn regenerator() const;
};

Bundle generate_bundle(const RunConfig& config, Index atoms, std::optional<Index> basis_size);
void write_bundle(const std::filesystem::path& dir, const Bundle& bundle);
/// Throws IoError on missing or malformed files.
Bundle read_bundle(const std::filesystem::path& dir);

std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);

std::string report_to_json(const BuildReport& report);
FlopLedger ledger_from_json(const std::string& report_json);

}  // namespace hsdla::cli
