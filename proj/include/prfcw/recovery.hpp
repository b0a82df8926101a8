#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "prfcw/landscape.hpp"
#include "prfcw/sampler.hpp"
#include "prfcw/statistics.hpp"
#include "prfcw/subset_search.hpp"

namespace prfcw {

// The Type I argument needs max |C_ij| <= C1 sqrt(log n / m) with high
// probability, which takes C1 > 2.
inline constexpr double kDefaultSdpC1 = 3.0;

enum class RecoveryMethod { Scan, Screen, RowSum, Spectral };
std::string_view to_string(RecoveryMethod method);
RecoveryMethod parse_recovery_method(std::string_view text);

struct RecoveryReport {
  RecoveryMethod method = RecoveryMethod::Scan;
  std::vector<int> estimate;  // sorted
  std::optional<std::vector<int>> truth;
  int overlap = 0;
  int sym_diff = 0;
  bool exact = false;
  int n = 0;
  int k = 0;
  Eigen::Index m = 0;

  /// Fills overlap, sym_diff and exact against a sorted truth set.
  void compare_with(const std::vector<int>& truth_set);

  nlohmann::json to_json() const;
  static std::string csv_header();
  std::string csv_row() const;
};

/// Argmax of the regime's local statistic over k-subsets: the pair sum of the
/// correlation matrix (high, critical), the absolute mean (low), the subset
/// mean (non-centered fields). Throws ScanTooLarge when exactness cannot be
/// certified within the node budget or the enumeration gate.
RecoveryReport scan_recover(const SpinSample& sample, int k, const RegimeInfo& regime,
                            std::int64_t node_budget = kDefaultNodeBudget);

/// Top k spins by their correlation with S' \ {i}.
std::vector<int> screen(const SpinSample& sample, const std::vector<int>& s_prime, int k,
                        const RegimeInfo& regime);

/// Top k spins by off-diagonal correlation row sums.
RecoveryReport rowsum_recover(const SpinSample& sample, int k, const RegimeInfo& regime);

/// lambda_max(C + Y) + k max|Y_ij| with the soft-threshold perturbation Y at
/// level z. Throws InvalidSpec unless c is symmetric with unit diagonal.
double sdp_dual_bound(const Eigen::MatrixXd& correlation, int k, double z);

/// Dual bound at z = c1 sqrt(log n / m) against f(c1) = 1 + c1 k sqrt(log n / m),
/// both scaled for the regime.
TestReport sdp_test(const SpinSample& sample, int k, double c1, const RegimeInfo& regime);

/// Half the population off-diagonal correlation inside the clique.
double default_spectral_rho(const RegimeInfo& regime, const FieldDistribution& field, int k);

/// Soft-threshold the off-diagonal correlations at rho and take the k largest
/// entries (in absolute value) of the principal eigenvector.
RecoveryReport spectral_recover(const SpinSample& sample, int k, double rho);

}  // namespace prfcw
