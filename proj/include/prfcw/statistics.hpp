#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "prfcw/landscape.hpp"
#include "prfcw/sampler.hpp"
#include "prfcw/subset_search.hpp"

namespace prfcw {

enum class TestId {
  HighLocal,
  HighGlobal,
  LowLocal,
  LowGlobal,
  CriticalLocal,
  CriticalGlobal,
  AgnosticLocal,
  AgnosticGlobal,
  Oracle,
  Sdp,
};

std::string_view to_string(TestId id);
/// Accepts the snake_case names, e.g. "high_local". Throws UsageError.
TestId parse_test_id(std::string_view text);

enum class Branch { LocalScan, Global };
std::string_view to_string(Branch branch);

/// (1/m) sum_j sigma^(j) sigma^(j)^T.
template <typename Scalar = double>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> empirical_correlation(
    const SpinSample& sample) {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Matrix x = sample.spins.template cast<Scalar>().matrix();
  Matrix c = Matrix::Zero(x.cols(), x.cols());
  c.template selfadjointView<Eigen::Lower>().rankUpdate(x.transpose(),
                                                        Scalar(1) / Scalar(sample.m()));
  c.template triangularView<Eigen::StrictlyUpper>() = c.transpose();
  c.diagonal().setOnes();
  return c;
}

/// (4tau-3)/(2tau-1): the k exponent of the critical statistics.
double critical_scale_exponent(int tau);

double stat_local_high(const SpinSample& sample, const std::vector<int>& subset);
double stat_global_high(const SpinSample& sample, int k);
double stat_local_low(const SpinSample& sample, const std::vector<int>& subset);
double stat_global_low(const SpinSample& sample, int k);
double stat_local_critical(const SpinSample& sample, const std::vector<int>& subset, int tau);
double stat_global_critical(const SpinSample& sample, int k, int tau);

struct AgnosticStatistic {
  double phi_max = 0.0;
  double phi_min = 0.0;
  double xi = 0.0;
  std::vector<int> argmax;
  std::vector<int> argmin;
};

/// Extreme k-subset means (exact: sort the per-spin means) and the grand mean.
AgnosticStatistic stat_agnostic(const SpinSample& sample, int k);
/// Pairs observations (0,1), (2,3), ...; throws OddSampleCount for odd m.
double stat_agnostic_global_pairs(const SpinSample& sample, int k, int tau);
double stat_oracle(const SpinSample& sample, int k, double tanh_mean);

/// Open interval guaranteed by the theory for a test's threshold.
struct ThresholdInterval {
  double lo = 0.0;
  double hi = 0.0;
  double midpoint() const { return 0.5 * (lo + hi); }
};

/// Throws RegimeMismatch when the regime cannot host the test.
ThresholdInterval threshold_interval(TestId id, const RegimeInfo& regime,
                                     const FieldDistribution& field, int n, int k);
double default_threshold(TestId id, const RegimeInfo& regime, const FieldDistribution& field,
                         int n, int k);

/// Clique magnetisation the alternative concentrates on: m_pos at low
/// temperature for centered fields, the global minimiser otherwise.
double clique_magnetization(const RegimeInfo& regime);

struct TestView {
  int n = 1;
  int k = 1;
  double theta1 = 0.0;
  FieldDistribution field;
};

struct TestOverrides {
  std::optional<TestId> test;
  std::optional<Branch> branch;
  std::optional<double> threshold;
  std::optional<double> delta;  // agnostic half-width
  std::optional<double> c1;     // SDP constant
  std::int64_t node_budget = kDefaultNodeBudget;
};

struct TestReport {
  TestId test_id = TestId::HighGlobal;
  Branch branch = Branch::Global;
  double statistic = 0.0;
  double threshold = 0.0;
  ThresholdInterval interval;
  bool reject = false;
  RegimeInfo regime;
  int n = 0;
  int k = 0;
  Eigen::Index m = 0;
  double theta1 = 0.0;
  bool exact_scan = true;
  std::vector<int> subset;  // argmax of a local scan
  std::vector<std::string> warnings;

  nlohmann::json to_json() const;
  static std::string csv_header();
  std::string csv_row() const;
};

/// The branch the theory prescribes for (n, k) in a regime; ties go global.
Branch default_branch(const RegimeInfo& regime, int n, int k);

/// Flatness governing the clique magnetisation: tau of a critical regime,
/// otherwise the flatness at the global minimiser.
int regime_tau(const RegimeInfo& regime);

/// The regime-appropriate test for a field: centered fields use the
/// high/low/critical family, non-centered ones the agnostic test.
TestId default_test(const RegimeInfo& regime, Branch branch);

TestReport run_test(const TestView& view, const SpinSample& sample,
                    const TestOverrides& overrides = {});

/// As run_test with a precomputed regime classification.
TestReport run_test(const TestView& view, const RegimeInfo& regime, const SpinSample& sample,
                    const TestOverrides& overrides = {});

nlohmann::json regime_to_json(const RegimeInfo& regime);

}  // namespace prfcw
