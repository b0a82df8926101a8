#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace prfcw {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Every setting of one run, defaults resolved. Lists are comma separated in
/// flags and config files; unset optionals print as "none".
struct RunConfig {
  std::string command;
  std::optional<int> n;
  std::optional<int> k;
  double theta1 = 0.0;
  std::string field = "pointmass(a=0)";
  std::vector<int> clique;
  std::string mode = "fresh";
  std::int64_t m = 100;
  std::uint64_t seed = 0;
  std::string test = "auto";
  std::string branch = "auto";
  std::string method = "scan";
  std::string out = "-";
  std::string format = "auto";
  std::string input;
  int replicates = 200;
  double delta = 0.05;
  std::optional<double> threshold;
  double c1 = 3.0;
  std::optional<double> rho;
  std::int64_t node_budget = 20000000;
  std::vector<std::int64_t> grid;
  std::optional<double> target_power;
  std::vector<int> n_grid;
  std::vector<double> theta1_ratios;
  std::vector<double> k_ratios;

  bool operator==(const RunConfig&) const = default;
};

/// Parses flags (and the file named by --config; flags win). Fills the
/// defaults of the chosen subcommand and, for planted runs without --clique,
/// draws the clique from the seed. Throws Error(UsageError).
RunConfig resolve_config(const std::vector<std::string>& args);

/// "# key = value" lines, one per setting, in a fixed order.
std::string config_header(const RunConfig& config);

/// Strips the "# " prefix from leading comment lines of an output file,
/// giving text accepted by --config.
std::string header_to_config(const std::string& output_text);

/// Runs args (without the program name). Help goes to out, diagnostics to err.
/// Returns kExitOk, kExitRuntime or kExitUsage.
int parse_and_dispatch(const std::vector<std::string>& args, std::ostream& out,
                       std::ostream& err);

}  // namespace prfcw
