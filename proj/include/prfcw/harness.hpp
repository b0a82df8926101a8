#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "prfcw/landscape.hpp"
#include "prfcw/recovery.hpp"
#include "prfcw/sampler.hpp"
#include "prfcw/statistics.hpp"

namespace prfcw {

/// Parameter names a sweep may vary.
///   m, n, k, theta1, theta1_ratio (theta1 / theta_c), k_ratio (k / n)
struct SweepAxis {
  std::string parameter;
  std::vector<double> values;
};

struct ExperimentPlan {
  // The alternative; the null is ModelSpec::null_model(n, field).
  ModelSpec base_spec;
  Eigen::Index m = 100;
  std::vector<SweepAxis> sweep;
  TestOverrides test;
  int replicates = 200;
  double delta = 0.05;
  std::uint64_t seed = 0;
  // Draw a uniformly random clique per replicate instead of using base_spec.clique.
  bool random_clique = true;
};

struct Rate {
  double rate = 0.0;
  double se = 0.0;
  int replicates = 0;
};

/// sqrt(r (1 - r) / R).
Rate make_rate(std::int64_t hits, int replicates);

struct ErrorEstimate {
  Rate type1;
  Rate type2;
  double wall_time = 0.0;  // seconds
  int inexact_scans = 0;   // replicates whose local scan was heuristic

  double power() const { return 1.0 - type2.rate; }
};

struct SweepRow {
  std::vector<double> parameters;
  double estimate = 0.0;
  double standard_error = 0.0;
  int replicates = 0;
  double wall_time = 0.0;
  std::vector<double> extras;
};

struct SweepResult {
  std::vector<std::string> parameter_names;
  std::string estimate_name = "estimate";
  std::vector<std::string> extra_names;
  std::vector<SweepRow> rows;

  /// Timing is excluded by default so reruns are byte-identical.
  void write_csv(std::ostream& out, bool include_timing = false) const;
  nlohmann::json to_json() const;
};

/// The plan with one assignment of sweep parameters applied, in order.
ExperimentPlan apply_parameters(const ExperimentPlan& plan,
                                const std::vector<std::string>& names,
                                const std::vector<double>& values);

/// Replicate i uses derive_seed(seed, i); its null and alternative samples and
/// its clique draw use sub-streams 0, 1 and 2 of that seed.
ErrorEstimate estimate_errors(const ExperimentPlan& plan);

/// The null half of estimate_errors, with the same per-replicate streams.
Rate estimate_type1(const ExperimentPlan& plan);

/// estimate_errors over the Cartesian product of the sweep axes (first axis
/// slowest). Estimate is the power; extras are type1, type1_se, inexact_scans.
SweepResult sweep(const ExperimentPlan& plan);

/// As sweep with a single m axis; throws InvalidSpec for any m < 1.
SweepResult power_curve(const ExperimentPlan& plan, const std::vector<Eigen::Index>& m_grid);

struct SampleComplexity {
  Eigen::Index m = 0;
  SweepResult evaluated;  // grid points visited by the bisection
};

/// Smallest grid m with power >= target and Type I <= delta, by bisection on
/// the sorted grid. Throws NotReached when the largest m falls short.
SampleComplexity sample_complexity(const ExperimentPlan& plan,
                                   const std::vector<Eigen::Index>& m_grid,
                                   double target_power);

struct CltPlan {
  FieldDistribution field;
  double theta1 = 0.0;
  std::vector<int> n_grid;
  int replicates = 2000;
  std::uint64_t seed = 0;
};

struct CltReport {
  RegimeInfo regime;
  // High: V. Low: V(m*) (extra target: m*). Critical: (4tau-3)/(4tau-2).
  double target = 0.0;
  std::optional<double> magnetization_target;
  std::optional<double> slope;
  std::optional<double> slope_se;
  SweepResult rows;

  nlohmann::json to_json() const;
};

/**
 * Per n, draws replicates of the Curie-Weiss model on all n spins and reports
 * the variance of n^(-1/2) sum sigma (high), its variance conditional on the
 * sign together with the mean |sum sigma| / n (low), or E|sum sigma| (critical).
 * Critical runs also fit the log-log slope of E|sum sigma| against n.
 */
CltReport verify_clt(const CltPlan& plan);

struct OverlapRow {
  int v = 0;
  double probability = 0.0;
  double bound = 0.0;
  bool holds = true;  // exact rational comparison
};

struct OverlapReport {
  int n = 0;
  int k = 0;
  std::vector<OverlapRow> rows;
  double max_ratio = 0.0;  // max_v P(V = v) / bound
  bool all_hold = true;
  bool normalized = true;  // sum_v C(k,v) C(n-k,k-v) == C(n,k), exactly
  double probability_sum = 0.0;

  nlohmann::json to_json() const;
};

/// Overlap V of two independent uniform k-subsets of [n] against
/// P(V = v) <= (k^2 / n)^v / v!. Requires 1 <= k <= min(n, 50), n <= 2000.
OverlapReport overlap_bound_check(int n, int k);

}  // namespace prfcw
