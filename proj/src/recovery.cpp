#include "prfcw/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <Eigen/Eigenvalues>

#include "prfcw/eigen_power.hpp"
#include "prfcw/error.hpp"

namespace prfcw {

namespace {

RecoveryReport make_report(RecoveryMethod method, std::vector<int> estimate,
                           const SpinSample& sample, int k) {
  RecoveryReport report;
  report.method = method;
  std::sort(estimate.begin(), estimate.end());
  report.estimate = std::move(estimate);
  report.n = static_cast<int>(sample.n());
  report.k = k;
  report.m = sample.m();
  return report;
}

void check_k(const SpinSample& sample, int k) {
  if (k < 1 || k > sample.n()) throw Error(ErrorCode::BadSubset, "k must lie in [1, n]");
}

// Row-sum exponent eta: delta_i = k^(-eta) sum_j C_ij.
double rowsum_exponent(const RegimeInfo& regime) {
  if (regime.is_low()) return 1.0;
  const int tau = regime_tau(regime);
  return tau >= 2 ? (2.0 * tau - 2.0) / (2.0 * tau - 1.0) : 0.0;
}

}  // namespace

std::string_view to_string(RecoveryMethod method) {
  switch (method) {
    case RecoveryMethod::Scan: return "scan";
    case RecoveryMethod::Screen: return "screen";
    case RecoveryMethod::RowSum: return "rowsum";
    case RecoveryMethod::Spectral: return "spectral";
  }
  return "unknown";
}

RecoveryMethod parse_recovery_method(std::string_view text) {
  for (RecoveryMethod m : {RecoveryMethod::Scan, RecoveryMethod::Screen, RecoveryMethod::RowSum,
                           RecoveryMethod::Spectral})
    if (to_string(m) == text) return m;
  throw Error(ErrorCode::UsageError, "unknown recovery method '" + std::string(text) + "'");
}

void RecoveryReport::compare_with(const std::vector<int>& truth_set) {
  truth = truth_set;
  std::vector<int> common;
  std::set_intersection(estimate.begin(), estimate.end(), truth_set.begin(), truth_set.end(),
                        std::back_inserter(common));
  overlap = static_cast<int>(common.size());
  sym_diff = static_cast<int>(estimate.size() + truth_set.size()) - 2 * overlap;
  exact = sym_diff == 0;
}

nlohmann::json RecoveryReport::to_json() const {
  nlohmann::json j;
  j["method"] = std::string(to_string(method));
  j["estimate"] = estimate;
  j["truth"] = truth ? nlohmann::json(*truth) : nlohmann::json(nullptr);
  j["overlap"] = overlap;
  j["sym_diff"] = sym_diff;
  j["exact"] = exact;
  j["n"] = n;
  j["k"] = k;
  j["m"] = m;
  return j;
}

std::string RecoveryReport::csv_header() { return "method,n,k,m,overlap,sym_diff,exact"; }

std::string RecoveryReport::csv_row() const {
  return std::string(to_string(method)) + ',' + std::to_string(n) + ',' + std::to_string(k) +
         ',' + std::to_string(m) + ',' + std::to_string(overlap) + ',' +
         std::to_string(sym_diff) + ',' + (exact ? "1" : "0");
}

RecoveryReport scan_recover(const SpinSample& sample, int k, const RegimeInfo& regime,
                            std::int64_t node_budget) {
  check_k(sample, k);
  if (!regime.centered)
    return make_report(RecoveryMethod::Scan, stat_agnostic(sample, k).argmax, sample, k);
  if (regime.is_low()) {
    if (binomial_coefficient(static_cast<int>(sample.n()), k) > kScanGate)
      throw Error(ErrorCode::ScanTooLarge, "absolute-mean scan exceeds the enumeration gate");
    return make_report(RecoveryMethod::Scan, max_abs_sum(sample.spins, k).subset, sample, k);
  }
  const SubsetResult scan = max_pair_sum(empirical_correlation(sample), k, node_budget);
  if (!scan.exact) throw Error(ErrorCode::ScanTooLarge, "branch and bound exceeded its node budget");
  return make_report(RecoveryMethod::Scan, scan.subset, sample, k);
}

std::vector<int> screen(const SpinSample& sample, const std::vector<int>& s_prime, int k,
                        const RegimeInfo& regime) {
  check_k(sample, k);
  if (static_cast<int>(s_prime.size()) != k)
    throw Error(ErrorCode::BadSubset, "S' must have k elements");
  for (int j : s_prime)
    if (j < 0 || j >= sample.n()) throw Error(ErrorCode::BadSubset, "S' index out of range");
  const Eigen::MatrixXd c = empirical_correlation(sample);
  const auto n = static_cast<int>(sample.n());
  Eigen::VectorXd phi = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i)
    for (int j : s_prime)
      if (j != i) phi(i) += c(i, j);
  if (regime.is_low() && regime.centered) {
    phi = phi.cwiseAbs() / k;
  } else {
    phi *= std::pow(k, -rowsum_exponent(regime));
  }
  return top_k(phi, k);
}

RecoveryReport rowsum_recover(const SpinSample& sample, int k, const RegimeInfo& regime) {
  check_k(sample, k);
  Eigen::MatrixXd c = empirical_correlation(sample);
  c.diagonal().setZero();
  const Eigen::VectorXd delta = c.rowwise().sum() * std::pow(k, -rowsum_exponent(regime));
  return make_report(RecoveryMethod::RowSum, top_k(delta, k), sample, k);
}

double sdp_dual_bound(const Eigen::MatrixXd& correlation, int k, double z) {
  const Eigen::Index n = correlation.rows();
  if (n == 0 || correlation.cols() != n)
    throw Error(ErrorCode::InvalidSpec, "correlation must be square");
  if ((correlation - correlation.transpose()).cwiseAbs().maxCoeff() > 1e-12 ||
      (correlation.diagonal().array() - 1.0).abs().maxCoeff() > 1e-12)
    throw Error(ErrorCode::InvalidSpec, "correlation must be symmetric with unit diagonal");
  if (z < 0.0) throw Error(ErrorCode::InvalidSpec, "threshold level must be nonnegative");
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      const double c = correlation(i, j);
      y(i, j) = std::abs(c) <= z ? -c : -std::copysign(z, c);
    }
  const Eigen::MatrixXd perturbed = correlation + y;
  const double lambda =
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(perturbed, Eigen::EigenvaluesOnly)
          .eigenvalues()
          .maxCoeff();
  return lambda + k * y.cwiseAbs().maxCoeff();
}

TestReport sdp_test(const SpinSample& sample, int k, double c1, const RegimeInfo& regime) {
  check_k(sample, k);
  if (sample.m() < 2) throw Error(ErrorCode::InvalidSpec, "the sdp test needs m >= 2");
  const double n = static_cast<double>(sample.n());
  const double rate = std::sqrt(std::log(n) / static_cast<double>(sample.m()));
  const double z = c1 * rate;
  const double bound = sdp_dual_bound(empirical_correlation(sample), k, z);
  const double f = 1.0 + c1 * k * rate;
  double scale = 1.0;
  if (regime.is_low())
    scale = 1.0 / k;
  else if (regime.is_critical())
    scale = std::pow(k, -critical_scale_exponent(regime_tau(regime)));

  TestReport report;
  report.test_id = TestId::Sdp;
  report.branch = Branch::Global;
  report.statistic = scale * bound;
  report.threshold = scale * f;
  report.interval = {report.threshold, report.threshold};
  report.reject = report.statistic > report.threshold;
  report.regime = regime;
  report.n = static_cast<int>(sample.n());
  report.k = k;
  report.m = sample.m();
  report.theta1 = regime.theta1;
  if (z >= 1.0)
    report.warnings.push_back("insufficient samples: threshold level z >= 1 cancels every correlation");
  return report;
}

double default_spectral_rho(const RegimeInfo& regime, const FieldDistribution& field, int k) {
  const double m_star = clique_magnetization(regime);
  if (!regime.centered) {
    const double mu = field_functional(field, Functional::Tanh);
    return 0.5 * (m_star * m_star + mu * mu);
  }
  if (regime.is_high())
    return k > 1 ? (high_temp_variance(field, regime.theta1) - 1.0) / (2.0 * (k - 1)) : 0.0;
  if (regime.is_low()) return 0.5 * m_star * m_star;
  const int tau = regime_tau(regime);
  const double v = critical_variance_forms(field, regime.theta1, tau, m_star).taylor;
  return 0.5 * std::pow(k, 2.0 * scaling_exponent(tau) - 2.0) * critical_second_moment(v, tau);
}

RecoveryReport spectral_recover(const SpinSample& sample, int k, double rho) {
  check_k(sample, k);
  if (rho < 0.0) throw Error(ErrorCode::InvalidSpec, "rho must be nonnegative");
  Eigen::MatrixXd c = empirical_correlation(sample);
  const Eigen::Index n = c.rows();
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (i != j) {
        const double v = c(i, j);
        c(i, j) = std::copysign(std::max(std::abs(v) - rho, 0.0), v);
      }
  const auto pair = largest_eigenpair(c, 1e-10);
  return make_report(RecoveryMethod::Spectral, top_k(pair.vector.cwiseAbs(), k), sample, k);
}

}  // namespace prfcw
