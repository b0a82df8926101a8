#include "prfcw/harness.hpp"

#include <algorithm>
#include <boost/multiprecision/cpp_int.hpp>
#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>

#include "prfcw/error.hpp"
#include "prfcw/format.hpp"
#include "prfcw/parallel.hpp"

namespace prfcw {

namespace {

using Clock = std::chrono::steady_clock;
using boost::multiprecision::cpp_int;
using boost::multiprecision::cpp_rational;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Uniform k-subset of [0, n) by a partial Fisher-Yates shuffle, sorted.
std::vector<int> random_subset(int n, int k, Rng& rng) {
  std::vector<int> pool(n);
  std::iota(pool.begin(), pool.end(), 0);
  for (int i = 0; i < k; ++i) {
    const int j = i + static_cast<int>(uniform01(rng) * (n - i));
    std::swap(pool[i], pool[std::min(j, n - 1)]);
  }
  pool.resize(k);
  std::sort(pool.begin(), pool.end());
  return pool;
}

std::vector<int> first_indices(int k) {
  std::vector<int> v(k);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

void check_plan(const ExperimentPlan& plan) {
  const ModelSpec& spec = plan.base_spec;
  if (plan.m < 1) throw Error(ErrorCode::InvalidSpec, "m must be positive");
  if (plan.replicates < 1) throw Error(ErrorCode::InvalidSpec, "replicates must be positive");
  if (spec.k < 1 || spec.k > spec.n)
    throw Error(ErrorCode::InvalidSpec, "the alternative needs k in [1, n]");
  if (!plan.random_clique && static_cast<int>(spec.clique.size()) != spec.k)
    throw Error(ErrorCode::InvalidSpec, "a fixed clique must have k elements");
  if (!(plan.delta > 0.0 && plan.delta < 1.0))
    throw Error(ErrorCode::InvalidSpec, "delta must lie in (0, 1)");
  spec.validate();
}

std::string with_context(const std::string& context, const Error& e) {
  return context + ": " + e.what();
}

double sample_mean(const Eigen::ArrayXd& x) { return x.mean(); }

// Unbiased variance and the standard error of that estimate from the fourth
// central moment.
std::pair<double, double> variance_with_se(const Eigen::ArrayXd& x) {
  const double r = static_cast<double>(x.size());
  const Eigen::ArrayXd c = x - x.mean();
  const double var = c.square().sum() / (r - 1.0);
  const double m4 = c.square().square().mean();
  const double m2 = c.square().mean();
  return {var, std::sqrt(std::max(m4 - m2 * m2, 0.0) / r)};
}

// classify_regime needs theta1 > 0; at theta1 = 0 the spins are independent.
RegimeInfo regime_of(const FieldDistribution& field, double theta1) {
  if (theta1 > 0.0) return classify_regime(field, theta1);
  RegimeInfo info;
  info.theta1 = 0.0;
  info.theta_c = critical_temperature(field);
  info.regime = HighRegime{};
  info.fixed_points = fixed_points(field, 0.0);
  info.centered = field.is_symmetric();
  info.global_minimizer = info.centered ? 0.0 : info.fixed_points.front();
  info.minimizer_tau = 1;
  return info;
}

cpp_int exact_binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  cpp_int c = 1;
  for (int i = 1; i <= k; ++i) {
    c *= n - k + i;
    c /= i;
  }
  return c;
}

}  // namespace

Rate make_rate(std::int64_t hits, int replicates) {
  Rate r;
  r.replicates = replicates;
  r.rate = static_cast<double>(hits) / replicates;
  r.se = std::sqrt(r.rate * (1.0 - r.rate) / replicates);
  return r;
}

void SweepResult::write_csv(std::ostream& out, bool include_timing) const {
  for (const auto& name : parameter_names) out << name << ',';
  out << estimate_name << ",standard_error,replicates";
  for (const auto& name : extra_names) out << ',' << name;
  if (include_timing) out << ",wall_time";
  out << '\n';
  for (const auto& row : rows) {
    for (double p : row.parameters) out << format_number(p) << ',';
    out << format_number(row.estimate) << ',' << format_number(row.standard_error) << ','
        << row.replicates;
    for (double e : row.extras) out << ',' << format_number(e);
    if (include_timing) out << ',' << format_number(row.wall_time);
    out << '\n';
  }
}

nlohmann::json SweepResult::to_json() const {
  nlohmann::json j;
  j["parameters"] = parameter_names;
  j["estimate"] = estimate_name;
  j["extras"] = extra_names;
  j["rows"] = nlohmann::json::array();
  for (const auto& row : rows)
    j["rows"].push_back({{"parameters", row.parameters},
                         {"estimate", row.estimate},
                         {"standard_error", row.standard_error},
                         {"replicates", row.replicates},
                         {"wall_time", row.wall_time},
                         {"extras", row.extras}});
  return j;
}

ExperimentPlan apply_parameters(const ExperimentPlan& plan, const std::vector<std::string>& names,
                                const std::vector<double>& values) {
  if (names.size() != values.size())
    throw Error(ErrorCode::InvalidSpec, "parameter names and values differ in length");
  ExperimentPlan out = plan;
  ModelSpec& spec = out.base_spec;
  auto set_k = [&](int k) {
    spec.k = k;
    if (!out.random_clique) spec.clique = first_indices(k);
  };
  for (std::size_t i = 0; i < names.size(); ++i) {
    const std::string& name = names[i];
    const double v = values[i];
    if (name == "m") {
      out.m = static_cast<Eigen::Index>(std::llround(v));
    } else if (name == "n") {
      spec.n = static_cast<int>(std::lround(v));
    } else if (name == "k") {
      set_k(static_cast<int>(std::lround(v)));
    } else if (name == "k_ratio") {
      set_k(std::max(1, static_cast<int>(std::lround(v * spec.n))));
    } else if (name == "theta1") {
      spec.theta1 = v;
    } else if (name == "theta1_ratio") {
      spec.theta1 = v * critical_temperature(spec.field);
    } else {
      throw Error(ErrorCode::UsageError, "unknown sweep parameter '" + name + "'");
    }
  }
  return out;
}

namespace {

ErrorEstimate run_replicates(const ExperimentPlan& plan, bool with_alternative) {
  check_plan(plan);
  const auto start = Clock::now();
  const ModelSpec& alt = plan.base_spec;
  ModelSpec null = ModelSpec::null_model(alt.n, alt.field);
  null.field_mode = alt.field_mode;
  null.realization = alt.realization;

  const TestView view{alt.n, alt.k, alt.theta1, alt.field};
  const RegimeInfo regime = regime_of(alt.field, alt.theta1);
  TestOverrides overrides = plan.test;
  if (!overrides.test) {
    const Branch branch = overrides.branch.value_or(default_branch(regime, alt.n, alt.k));
    overrides.test = default_test(regime, branch);
  }

  const auto reps = static_cast<std::size_t>(plan.replicates);
  std::vector<char> null_reject(reps, 0), alt_reject(reps, 0), inexact(reps, 0);
  parallel_for(plan.replicates, [&](std::int64_t i) {
    const std::uint64_t seed = derive_seed(plan.seed, static_cast<std::uint64_t>(i));
    try {
      const SpinSample s0 = sample(null, plan.m, derive_seed(seed, 0));
      const TestReport r0 = run_test(view, regime, s0, overrides);
      null_reject[i] = r0.reject;
      inexact[i] = !r0.exact_scan;
      if (!with_alternative) return;
      ModelSpec planted = alt;
      if (plan.random_clique) {
        Rng rng(derive_seed(seed, 2));
        planted.clique = random_subset(alt.n, alt.k, rng);
      }
      const SpinSample s1 = sample(planted, plan.m, derive_seed(seed, 1));
      const TestReport r1 = run_test(view, regime, s1, overrides);
      alt_reject[i] = r1.reject;
      inexact[i] = inexact[i] || !r1.exact_scan;
    } catch (const Error& e) {
      throw Error(e.code(), with_context("replicate " + std::to_string(i), e));
    }
  });

  const auto count = [](const std::vector<char>& v) {
    return static_cast<std::int64_t>(std::count(v.begin(), v.end(), 1));
  };
  ErrorEstimate est;
  est.type1 = make_rate(count(null_reject), plan.replicates);
  if (with_alternative) est.type2 = make_rate(plan.replicates - count(alt_reject), plan.replicates);
  est.inexact_scans = static_cast<int>(count(inexact));
  est.wall_time = seconds_since(start);
  return est;
}

}  // namespace

ErrorEstimate estimate_errors(const ExperimentPlan& plan) { return run_replicates(plan, true); }

Rate estimate_type1(const ExperimentPlan& plan) { return run_replicates(plan, false).type1; }

SweepResult sweep(const ExperimentPlan& plan) {
  SweepResult result;
  result.estimate_name = "power";
  result.extra_names = {"type1", "type1_se", "inexact_scans"};
  std::vector<std::size_t> sizes;
  for (const auto& axis : plan.sweep) {
    if (axis.values.empty())
      throw Error(ErrorCode::InvalidSpec, "sweep axis '" + axis.parameter + "' is empty");
    result.parameter_names.push_back(axis.parameter);
    sizes.push_back(axis.values.size());
  }
  std::vector<std::size_t> index(sizes.size(), 0);
  while (true) {
    std::vector<double> values;
    for (std::size_t a = 0; a < sizes.size(); ++a) values.push_back(plan.sweep[a].values[index[a]]);
    std::string context = "sweep point";
    for (std::size_t a = 0; a < values.size(); ++a)
      context += ' ' + result.parameter_names[a] + '=' + format_number(values[a]);
    ErrorEstimate est;
    try {
      est = estimate_errors(apply_parameters(plan, result.parameter_names, values));
    } catch (const Error& e) {
      throw Error(e.code(), with_context(context, e));
    }
    SweepRow row;
    row.parameters = values;
    row.estimate = est.power();
    row.standard_error = est.type2.se;
    row.replicates = plan.replicates;
    row.wall_time = est.wall_time;
    row.extras = {est.type1.rate, est.type1.se, static_cast<double>(est.inexact_scans)};
    result.rows.push_back(std::move(row));

    std::size_t a = sizes.size();
    while (a > 0) {
      --a;
      if (++index[a] < sizes[a]) break;
      index[a] = 0;
      if (a == 0) return result;
    }
    if (sizes.empty()) return result;
  }
}

SweepResult power_curve(const ExperimentPlan& plan, const std::vector<Eigen::Index>& m_grid) {
  if (m_grid.empty()) throw Error(ErrorCode::InvalidSpec, "the m grid is empty");
  SweepAxis axis{"m", {}};
  for (Eigen::Index m : m_grid) {
    if (m < 1) throw Error(ErrorCode::InvalidSpec, "every m on the grid must be positive");
    axis.values.push_back(static_cast<double>(m));
  }
  ExperimentPlan p = plan;
  p.sweep = {axis};
  return sweep(p);
}

SampleComplexity sample_complexity(const ExperimentPlan& plan,
                                   const std::vector<Eigen::Index>& m_grid, double target_power) {
  std::vector<Eigen::Index> grid = m_grid;
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  if (grid.empty()) throw Error(ErrorCode::InvalidSpec, "the m grid is empty");
  if (grid.front() < 1) throw Error(ErrorCode::InvalidSpec, "every m on the grid must be positive");

  SampleComplexity out;
  out.evaluated.parameter_names = {"m"};
  out.evaluated.estimate_name = "power";
  out.evaluated.extra_names = {"type1", "type1_se", "inexact_scans"};
  auto passes = [&](std::size_t i) {
    ExperimentPlan p = plan;
    p.m = grid[i];
    const ErrorEstimate est = estimate_errors(p);
    SweepRow row;
    row.parameters = {static_cast<double>(grid[i])};
    row.estimate = est.power();
    row.standard_error = est.type2.se;
    row.replicates = p.replicates;
    row.wall_time = est.wall_time;
    row.extras = {est.type1.rate, est.type1.se, static_cast<double>(est.inexact_scans)};
    out.evaluated.rows.push_back(row);
    return est.power() >= target_power && est.type1.rate <= plan.delta;
  };

  std::size_t hi = grid.size() - 1;
  if (!passes(hi))
    throw Error(ErrorCode::NotReached, "power " + format_number(target_power) +
                                           " not reached at m = " + std::to_string(grid[hi]));
  std::size_t lo = 0;
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (passes(mid))
      hi = mid;
    else
      lo = mid + 1;
  }
  out.m = grid[hi];
  return out;
}

nlohmann::json CltReport::to_json() const {
  nlohmann::json j;
  j["regime"] = regime_to_json(regime);
  j["target"] = target;
  j["magnetization_target"] =
      magnetization_target ? nlohmann::json(*magnetization_target) : nlohmann::json(nullptr);
  j["slope"] = slope ? nlohmann::json(*slope) : nlohmann::json(nullptr);
  j["slope_se"] = slope_se ? nlohmann::json(*slope_se) : nlohmann::json(nullptr);
  j["rows"] = rows.to_json();
  return j;
}

CltReport verify_clt(const CltPlan& plan) {
  if (plan.n_grid.empty()) throw Error(ErrorCode::InvalidSpec, "the n grid is empty");
  if (plan.replicates < 3) throw Error(ErrorCode::InvalidSpec, "verify_clt needs >= 3 replicates");
  CltReport report;
  report.regime = regime_of(plan.field, plan.theta1);
  const RegimeInfo& regime = report.regime;
  const bool critical = regime.is_critical();
  const bool split = !critical && regime.is_low() && regime.centered;
  const double m_star = clique_magnetization(regime);

  SweepResult& rows = report.rows;
  rows.parameter_names = {"n"};
  if (critical) {
    const int tau = regime_tau(regime);
    report.target = scaling_exponent(tau);
    rows.estimate_name = "mean_abs_sum";
  } else if (split) {
    report.target = low_temp_variance(plan.field, plan.theta1, m_star);
    report.magnetization_target = m_star;
    rows.estimate_name = "conditional_variance";
    rows.extra_names = {"mean_abs_magnetization", "mean_abs_magnetization_se"};
  } else {
    report.target = m_star == 0.0 ? high_temp_variance(plan.field, plan.theta1)
                                  : low_temp_variance(plan.field, plan.theta1, m_star);
    rows.estimate_name = "variance";
  }

  for (std::size_t g = 0; g < plan.n_grid.size(); ++g) {
    const int n = plan.n_grid[g];
    if (n < 1) throw Error(ErrorCode::InvalidSpec, "every n on the grid must be positive");
    const auto start = Clock::now();
    const ModelSpec spec = ModelSpec::planted(n, first_indices(n), plan.theta1, plan.field);
    const MagnetizationSample ms =
        sample_magnetization(spec, plan.replicates, derive_seed(plan.seed, g));
    const Eigen::ArrayXd sums = ms.total_sum.cast<double>().array();
    const double r = static_cast<double>(plan.replicates);

    SweepRow row;
    row.parameters = {static_cast<double>(n)};
    row.replicates = plan.replicates;
    if (critical) {
      const Eigen::ArrayXd a = sums.abs();
      row.estimate = sample_mean(a);
      row.standard_error = std::sqrt(variance_with_se(a).first / r);
    } else if (split) {
      const Eigen::ArrayXd x = sums / std::sqrt(static_cast<double>(n));
      double pos_sum = 0.0, neg_sum = 0.0;
      int pos = 0, neg = 0;
      for (Eigen::Index j = 0; j < x.size(); ++j) {
        if (x(j) >= 0.0) {
          pos_sum += x(j);
          ++pos;
        } else {
          neg_sum += x(j);
          ++neg;
        }
      }
      const double pos_mean = pos ? pos_sum / pos : 0.0;
      const double neg_mean = neg ? neg_sum / neg : 0.0;
      Eigen::ArrayXd c(x.size());
      for (Eigen::Index j = 0; j < x.size(); ++j) c(j) = x(j) - (x(j) >= 0.0 ? pos_mean : neg_mean);
      const int groups = (pos > 0) + (neg > 0);
      row.estimate = c.square().sum() / (r - groups);
      const double m2 = c.square().mean();
      row.standard_error = std::sqrt(std::max(c.square().square().mean() - m2 * m2, 0.0) / r);
      const Eigen::ArrayXd mag = sums.abs() / static_cast<double>(n);
      row.extras = {sample_mean(mag), std::sqrt(variance_with_se(mag).first / r)};
    } else {
      const auto [var, se] = variance_with_se(sums / std::sqrt(static_cast<double>(n)));
      row.estimate = var;
      row.standard_error = se;
    }
    row.wall_time = seconds_since(start);
    rows.rows.push_back(std::move(row));
  }

  if (critical && rows.rows.size() >= 2) {
    // Weighted least squares of log E|sum| on log n; weights from the delta method.
    double sw = 0.0, sx = 0.0, sy = 0.0;
    std::vector<double> xs, ys, ws;
    for (const auto& row : rows.rows) {
      const double rel = row.standard_error / row.estimate;
      const double w = rel > 0.0 ? 1.0 / (rel * rel) : 1.0;
      xs.push_back(std::log(row.parameters[0]));
      ys.push_back(std::log(row.estimate));
      ws.push_back(w);
      sw += w;
      sx += w * xs.back();
      sy += w * ys.back();
    }
    const double xbar = sx / sw, ybar = sy / sw;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sxx += ws[i] * (xs[i] - xbar) * (xs[i] - xbar);
      sxy += ws[i] * (xs[i] - xbar) * (ys[i] - ybar);
    }
    if (sxx > 0.0) {
      report.slope = sxy / sxx;
      report.slope_se = std::sqrt(1.0 / sxx);
    }
  }
  return report;
}

nlohmann::json OverlapReport::to_json() const {
  nlohmann::json j;
  j["n"] = n;
  j["k"] = k;
  j["max_ratio"] = max_ratio;
  j["all_hold"] = all_hold;
  j["normalized"] = normalized;
  j["probability_sum"] = probability_sum;
  j["rows"] = nlohmann::json::array();
  for (const auto& row : rows)
    j["rows"].push_back(
        {{"v", row.v}, {"probability", row.probability}, {"bound", row.bound}, {"holds", row.holds}});
  return j;
}

OverlapReport overlap_bound_check(int n, int k) {
  if (n < 1 || n > 2000 || k < 1 || k > 50 || k > n)
    throw Error(ErrorCode::InvalidSpec, "overlap check needs 1 <= k <= min(n, 50) and n <= 2000");
  OverlapReport report;
  report.n = n;
  report.k = k;
  const cpp_int total = exact_binomial(n, k);
  const cpp_int k2 = cpp_int(k) * k;
  cpp_int mass = 0;
  cpp_int factorial = 1;  // v!
  cpp_int n_pow = 1;      // n^v
  cpp_int k2_pow = 1;     // k^(2v)
  for (int v = 0; v <= k; ++v) {
    if (v > 0) {
      factorial *= v;
      n_pow *= n;
      k2_pow *= k2;
    }
    const cpp_int ways = exact_binomial(k, v) * exact_binomial(n - k, k - v);
    mass += ways;
    // ways / C(n,k) <= k^(2v) / (v! n^v)
    const cpp_int lhs = ways * factorial * n_pow;
    const cpp_int rhs = k2_pow * total;
    OverlapRow row;
    row.v = v;
    row.probability = cpp_rational(ways, total).convert_to<double>();
    row.bound = cpp_rational(k2_pow, factorial * n_pow).convert_to<double>();
    row.holds = lhs <= rhs;
    report.max_ratio = std::max(report.max_ratio, cpp_rational(lhs, rhs).convert_to<double>());
    report.all_hold = report.all_hold && row.holds;
    report.probability_sum += row.probability;
    report.rows.push_back(row);
  }
  report.normalized = mass == total;
  return report;
}

}  // namespace prfcw
