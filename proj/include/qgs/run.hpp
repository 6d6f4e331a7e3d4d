#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace qgs {

enum class Command { spectrum, persson, ap_check, positive_solution, sobolev, validate, verify };

std::string to_string(Command command);
Command command_from_string(const std::string& name);

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitHypothesis = 2,
  kExitNumerical = 3,
  kExitVerifyFailed = 4,
};

struct RunConfig {
  Command command = Command::spectrum;
  std::filesystem::path graph;
  std::filesystem::path coeffs;            // empty: p = w = 1, q = 0
  std::filesystem::path out;               // empty: standard output
  std::filesystem::path dump_matrices;     // empty: no Matrix Market dump
  double h = 0.02;
  double tol = 1e-6;
  std::optional<std::string> root;         // overrides the document root
  std::vector<std::size_t> levels;         // n
  std::vector<std::size_t> outer;          // N (persson)
  bool dirichlet_boundary = true;
  std::size_t workers = 1;
  std::uint64_t seed = 20240601;
  std::optional<double> lambda;            // ap-check, positive-solution
  std::optional<std::size_t> level;        // ap-check, positive-solution
  std::vector<double> epsilon;             // sobolev; empty: {1}
  std::size_t compact_level = 0;           // Γ_m used as the compact subgraph
  double eta = 1.0;
  bool override_hypotheses = false;

  nlohmann::json to_json() const;
};

/// Throws UsageError when the configuration is inconsistent. Runs before any
/// file is read.
void check_config(const RunConfig& config);

/// Executes one command. CSV goes to `config.out` (or `out` when unset),
/// diagnostics to `err`. Returns an ExitCode.
int run(const RunConfig& config, std::ostream& out, std::ostream& err);

struct VerifyCheck {
  std::string name;
  bool pass = false;
  double measured = 0.0;
  double threshold = 0.0;
  std::string detail;
};

/// Property suite over the built-in fixtures at the given seed.
std::vector<VerifyCheck> verify(std::uint64_t seed, std::size_t workers = 1);

}  // namespace qgs
