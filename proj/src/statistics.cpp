#include "prfcw/statistics.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>

#include "prfcw/error.hpp"
#include "prfcw/format.hpp"
#include "prfcw/recovery.hpp"

namespace prfcw {

namespace {

constexpr std::array<std::pair<TestId, std::string_view>, 10> kTestNames = {{
    {TestId::HighLocal, "high_local"},
    {TestId::HighGlobal, "high_global"},
    {TestId::LowLocal, "low_local"},
    {TestId::LowGlobal, "low_global"},
    {TestId::CriticalLocal, "critical_local"},
    {TestId::CriticalGlobal, "critical_global"},
    {TestId::AgnosticLocal, "agnostic_local"},
    {TestId::AgnosticGlobal, "agnostic_global"},
    {TestId::Oracle, "oracle"},
    {TestId::Sdp, "sdp"},
}};

void check_subset(const SpinSample& sample, const std::vector<int>& subset) {
  if (subset.empty()) throw Error(ErrorCode::BadSubset, "subset must be nonempty");
  std::vector<int> sorted = subset;
  std::sort(sorted.begin(), sorted.end());
  if (sorted.front() < 0 || sorted.back() >= sample.n() ||
      std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw Error(ErrorCode::BadSubset, "subset indices must be distinct and in [0, n)");
}

Eigen::VectorXd row_sums(const SpinSample& sample) {
  return sample.spins.cast<double>().rowwise().sum().matrix();
}

Eigen::VectorXd subset_sums(const SpinSample& sample, const std::vector<int>& subset) {
  check_subset(sample, subset);
  Eigen::VectorXd s = Eigen::VectorXd::Zero(sample.m());
  for (int i : subset) s += sample.spins.col(i).cast<double>().matrix();
  return s;
}

void require(bool ok, TestId id, const RegimeInfo& regime) {
  if (!ok)
    throw Error(ErrorCode::RegimeMismatch, std::string(to_string(id)) + " does not apply to the " +
                                               regime.name() + " regime");
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

// Var of the clique sum under the alternative, to leading order.
double clique_sum_variance(const RegimeInfo& regime, const FieldDistribution& field, int k) {
  const int tau = regime_tau(regime);
  const double m_star = clique_magnetization(regime);
  if (tau >= 2) {
    const double v = critical_variance_forms(field, regime.theta1, tau, m_star).taylor;
    return std::pow(k, critical_scale_exponent(tau)) * critical_second_moment(v, tau);
  }
  if (regime.is_high() && m_star == 0.0) return k * high_temp_variance(field, regime.theta1);
  return k * low_temp_variance(field, regime.theta1, m_star);
}

bool is_local(TestId id) {
  return id == TestId::HighLocal || id == TestId::LowLocal || id == TestId::CriticalLocal ||
         id == TestId::AgnosticLocal;
}

}  // namespace

std::string_view to_string(TestId id) {
  for (const auto& [key, name] : kTestNames)
    if (key == id) return name;
  return "unknown";
}

TestId parse_test_id(std::string_view text) {
  for (const auto& [key, name] : kTestNames)
    if (name == text) return key;
  throw Error(ErrorCode::UsageError, "unknown test '" + std::string(text) + "'");
}

std::string_view to_string(Branch branch) {
  return branch == Branch::LocalScan ? "local_scan" : "global";
}

double critical_scale_exponent(int tau) { return (4.0 * tau - 3.0) / (2.0 * tau - 1.0); }

double stat_local_high(const SpinSample& sample, const std::vector<int>& subset) {
  const Eigen::VectorXd s = subset_sums(sample, subset);
  const double k = static_cast<double>(subset.size());
  return (s.squaredNorm() / static_cast<double>(sample.m()) - k) / k;
}

double stat_global_high(const SpinSample& sample, int k) {
  const Eigen::VectorXd s = row_sums(sample);
  const auto n = static_cast<double>(sample.n());
  return (s.array().square() - n).sum() / (static_cast<double>(sample.m()) * k);
}

double stat_local_low(const SpinSample& sample, const std::vector<int>& subset) {
  const Eigen::VectorXd s = subset_sums(sample, subset);
  return s.cwiseAbs().mean() / static_cast<double>(subset.size());
}

double stat_global_low(const SpinSample& sample, int k) {
  return row_sums(sample).cwiseAbs().mean() / k;
}

double stat_local_critical(const SpinSample& sample, const std::vector<int>& subset, int tau) {
  const Eigen::VectorXd s = subset_sums(sample, subset);
  const auto k = static_cast<double>(subset.size());
  return std::pow(k, -critical_scale_exponent(tau)) * s.squaredNorm() /
         static_cast<double>(sample.m());
}

double stat_global_critical(const SpinSample& sample, int k, int tau) {
  const Eigen::VectorXd s = row_sums(sample);
  const auto n = static_cast<double>(sample.n());
  return std::pow(k, -critical_scale_exponent(tau)) * (s.array().square() - n).sum() /
         static_cast<double>(sample.m());
}

AgnosticStatistic stat_agnostic(const SpinSample& sample, int k) {
  if (k < 1 || k > sample.n()) throw Error(ErrorCode::BadSubset, "k must lie in [1, n]");
  const Eigen::VectorXd means = sample.spins.cast<double>().colwise().mean().transpose().matrix();
  AgnosticStatistic out;
  out.argmax = top_k(means, k);
  out.argmin = top_k(-means, k);
  for (int i : out.argmax) out.phi_max += means(i);
  for (int i : out.argmin) out.phi_min += means(i);
  out.phi_max /= k;
  out.phi_min /= k;
  out.xi = means.mean();
  return out;
}

double stat_agnostic_global_pairs(const SpinSample& sample, int k, int tau) {
  if (sample.m() % 2 != 0)
    throw Error(ErrorCode::OddSampleCount, "the pair statistic needs an even number of observations");
  const Eigen::VectorXd s = row_sums(sample);
  const Eigen::Index pairs = sample.m() / 2;
  double total = 0.0;
  for (Eigen::Index j = 0; j < pairs; ++j) {
    const double d = s(2 * j) - s(2 * j + 1);
    total += d * d;
  }
  return std::pow(k, -critical_scale_exponent(tau)) * total / static_cast<double>(pairs);
}

double stat_oracle(const SpinSample& sample, int k, double tanh_mean) {
  const Eigen::VectorXd s = row_sums(sample);
  const auto n = static_cast<double>(sample.n());
  const double null_var = n * (1.0 - tanh_mean * tanh_mean);
  const double total = ((s.array() - n * tanh_mean).square() - null_var).sum();
  return total / (static_cast<double>(sample.m()) * k * k);
}

int regime_tau(const RegimeInfo& regime) {
  if (regime.is_critical()) return std::get<CriticalRegime>(regime.regime).tau;
  return regime.minimizer_tau;
}

double clique_magnetization(const RegimeInfo& regime) {
  if (regime.is_low() && regime.centered) return std::get<LowRegime>(regime.regime).m_pos;
  return regime.global_minimizer;
}

ThresholdInterval threshold_interval(TestId id, const RegimeInfo& regime,
                                     const FieldDistribution& field, int n, int k) {
  const double theta = regime.theta1;
  switch (id) {
    case TestId::HighLocal:
    case TestId::HighGlobal:
      require(regime.is_high(), id, regime);
      return {0.0, high_temp_variance(field, theta) - 1.0};
    case TestId::LowLocal:
      require(regime.is_low(), id, regime);
      return {0.0, std::get<LowRegime>(regime.regime).m_pos};
    case TestId::LowGlobal: {
      require(regime.is_low(), id, regime);
      const double x = std::get<LowRegime>(regime.regime).m_pos;
      const double sd = std::sqrt(static_cast<double>(n));
      const double mu = x * k;
      const double lo = std::sqrt(2.0 * n / std::numbers::pi) / k;
      const double hi = (sd * std::sqrt(2.0 / std::numbers::pi) * std::exp(-mu * mu / (2.0 * n)) +
                         mu * (1.0 - 2.0 * normal_cdf(-mu / sd))) /
                        k;
      return {lo, hi};
    }
    case TestId::CriticalLocal:
    case TestId::CriticalGlobal: {
      require(regime.is_critical(), id, regime);
      const int tau = regime_tau(regime);
      const double v =
          critical_variance_forms(field, theta, tau, clique_magnetization(regime)).taylor;
      return {0.0, critical_second_moment(v, tau)};
    }
    case TestId::AgnosticLocal: {
      const double mu = field_functional(field, Functional::Tanh);
      const double delta =
          (1.0 - static_cast<double>(k) / n) * (clique_magnetization(regime) - mu);
      require(std::abs(delta) > 0.0, id, regime);
      return {0.0, std::abs(delta)};
    }
    case TestId::AgnosticGlobal: {
      const double mu = field_functional(field, Functional::Tanh);
      const double scale = std::pow(k, -critical_scale_exponent(regime_tau(regime)));
      const double lo = 2.0 * n * (1.0 - mu * mu) * scale;
      const double excess =
          2.0 * scale * (clique_sum_variance(regime, field, k) - k * (1.0 - mu * mu));
      require(excess > 0.0, id, regime);
      return {lo, lo + excess};
    }
    case TestId::Oracle: {
      const double mu = field_functional(field, Functional::Tanh);
      const double gap = clique_magnetization(regime) - mu;
      require(gap != 0.0, id, regime);
      return {0.0, gap * gap};
    }
    case TestId::Sdp:
      break;
  }
  throw Error(ErrorCode::RegimeMismatch, "the sdp test has no interval threshold");
}

double default_threshold(TestId id, const RegimeInfo& regime, const FieldDistribution& field,
                         int n, int k) {
  return threshold_interval(id, regime, field, n, k).midpoint();
}

Branch default_branch(const RegimeInfo& regime, int n, int k) {
  double exponent;
  if (!regime.centered) {
    const int tau = regime_tau(regime);
    exponent = (2.0 * tau - 1.0) / (4.0 * tau - 3.0);
  } else if (regime.is_high()) {
    exponent = 2.0 / 3.0;
  } else if (regime.is_low()) {
    exponent = 0.5;
  } else {
    const int tau = regime_tau(regime);
    exponent = (4.0 * tau - 2.0) / (8.0 * tau - 5.0);
  }
  const bool local = std::log(static_cast<double>(k)) < exponent * std::log(static_cast<double>(n)) - 1e-12;
  return local ? Branch::LocalScan : Branch::Global;
}

TestId default_test(const RegimeInfo& regime, Branch branch) {
  const bool local = branch == Branch::LocalScan;
  if (!regime.centered) return local ? TestId::AgnosticLocal : TestId::AgnosticGlobal;
  if (regime.is_high()) return local ? TestId::HighLocal : TestId::HighGlobal;
  if (regime.is_low()) return local ? TestId::LowLocal : TestId::LowGlobal;
  return local ? TestId::CriticalLocal : TestId::CriticalGlobal;
}

TestReport run_test(const TestView& view, const SpinSample& sample,
                    const TestOverrides& overrides) {
  return run_test(view, classify_regime(view.field, view.theta1), sample, overrides);
}

TestReport run_test(const TestView& view, const RegimeInfo& regime, const SpinSample& sample,
                    const TestOverrides& overrides) {
  if (sample.n() != view.n) throw Error(ErrorCode::InvalidSpec, "sample width differs from n");
  if (view.k < 1 || view.k > view.n) throw Error(ErrorCode::InvalidSpec, "k must lie in [1, n]");
  const Branch branch = overrides.branch.value_or(default_branch(regime, view.n, view.k));
  const TestId id = overrides.test.value_or(default_test(regime, branch));
  if (id == TestId::Sdp)
    return sdp_test(sample, view.k, overrides.c1.value_or(kDefaultSdpC1), regime);

  TestReport report;
  report.test_id = id;
  report.branch = is_local(id) ? Branch::LocalScan : Branch::Global;
  report.regime = regime;
  report.n = view.n;
  report.k = view.k;
  report.m = sample.m();
  report.theta1 = view.theta1;
  const int k = view.k;
  const int tau = regime_tau(regime);

  auto note_scan = [&](const SubsetResult& scan) {
    report.exact_scan = scan.exact;
    report.subset = scan.subset;
    if (!scan.exact)
      report.warnings.push_back(
          "local scan is not exhaustive at this size; the maximum is over heuristic candidates");
  };

  switch (id) {
    case TestId::HighLocal:
    case TestId::CriticalLocal: {
      const SubsetResult scan = max_pair_sum(empirical_correlation(sample), k, overrides.node_budget);
      note_scan(scan);
      const double quad = k + 2.0 * scan.value;
      report.statistic = id == TestId::HighLocal
                             ? (quad - k) / k
                             : std::pow(k, -critical_scale_exponent(tau)) * quad;
      break;
    }
    case TestId::LowLocal: {
      const SubsetResult scan = max_abs_sum(sample.spins, k);
      note_scan(scan);
      report.statistic = scan.value / (static_cast<double>(sample.m()) * k);
      break;
    }
    case TestId::HighGlobal:
      report.statistic = stat_global_high(sample, k);
      break;
    case TestId::LowGlobal:
      report.statistic = stat_global_low(sample, k);
      break;
    case TestId::CriticalGlobal:
      report.statistic = stat_global_critical(sample, k, tau);
      break;
    case TestId::AgnosticLocal: {
      const AgnosticStatistic a = stat_agnostic(sample, k);
      report.subset = a.phi_max - a.xi >= a.xi - a.phi_min ? a.argmax : a.argmin;
      report.statistic = std::max(a.phi_max - a.xi, a.xi - a.phi_min);
      break;
    }
    case TestId::AgnosticGlobal:
      report.statistic = stat_agnostic_global_pairs(sample, k, tau);
      break;
    case TestId::Oracle:
      report.statistic = stat_oracle(sample, k, field_functional(view.field, Functional::Tanh));
      break;
    case TestId::Sdp:
      break;
  }

  const std::optional<double> manual =
      id == TestId::AgnosticLocal && overrides.delta ? overrides.delta : overrides.threshold;
  if (manual) {
    report.threshold = *manual;
    try {
      report.interval = threshold_interval(id, regime, view.field, view.n, k);
    } catch (const Error&) {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      report.interval = {nan, nan};
    }
  } else {
    report.interval = threshold_interval(id, regime, view.field, view.n, k);
    report.threshold = report.interval.midpoint();
  }
  report.reject = report.statistic > report.threshold;
  return report;
}

nlohmann::json regime_to_json(const RegimeInfo& regime) {
  nlohmann::json j;
  j["regime"] = regime.name();
  j["theta1"] = regime.theta1;
  j["theta_c"] = regime.theta_c;
  j["centered"] = regime.centered;
  j["fixed_points"] = regime.fixed_points;
  j["global_minimizer"] = regime.global_minimizer;
  j["minimizer_tau"] = regime.minimizer_tau;
  if (regime.is_critical()) {
    const auto& c = std::get<CriticalRegime>(regime.regime);
    j["tau"] = c.tau;
    j["is_minimum"] = c.is_minimum;
  }
  if (regime.is_low()) {
    const auto& l = std::get<LowRegime>(regime.regime);
    j["m_pos"] = l.m_pos;
    j["m_neg"] = l.m_neg;
  }
  return j;
}

nlohmann::json TestReport::to_json() const {
  nlohmann::json j;
  j["test_id"] = std::string(to_string(test_id));
  j["branch"] = std::string(to_string(branch));
  j["statistic"] = statistic;
  j["threshold"] = threshold;
  j["interval"] = {interval.lo, interval.hi};
  j["reject"] = reject;
  j["regime"] = regime_to_json(regime);
  j["n"] = n;
  j["k"] = k;
  j["m"] = m;
  j["theta1"] = theta1;
  j["exact_scan"] = exact_scan;
  j["subset"] = subset;
  j["warnings"] = warnings;
  return j;
}

std::string TestReport::csv_header() { return "test_id,n,k,m,theta1,statistic,threshold,reject"; }

std::string TestReport::csv_row() const {
  return std::string(to_string(test_id)) + ',' + std::to_string(n) + ',' + std::to_string(k) +
         ',' + std::to_string(m) + ',' + format_number(theta1) + ',' + format_number(statistic) + ',' +
         format_number(threshold) + ',' + (reject ? "1" : "0");
}

}  // namespace prfcw
