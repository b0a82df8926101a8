// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance [--only 3,5] [--expect-fail 8,12]
//
// Exit status is 0 when the set of failing criteria equals --expect-fail
// (empty by default), 1 otherwise.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include <Eigen/Dense>

#include "CLI11.hpp"
#include "prfcw/harness.hpp"
#include "prfcw/landscape.hpp"
#include "prfcw/recovery.hpp"
#include "prfcw/rng.hpp"
#include "prfcw/sampler.hpp"
#include "prfcw/statistics.hpp"

using namespace prfcw;

namespace {

// Tolerances.
constexpr double kTvMax = 0.01;
constexpr double kPairTarget = 0.75;
constexpr double kPairSe = 4.0;
constexpr double kHighVarianceRel = 0.05;
constexpr double kLowMagnetization = 0.8585596;  // root of m = tanh(1.5 m)
constexpr double kLowMagnetizationRel = 0.02;
constexpr double kSlopeAbs = 0.05;
constexpr double kTypeOneDelta = 0.05;
constexpr double kTypeOneSe = 3.0;
constexpr double kPowerMin = 0.9;
constexpr double kScanExactMin = 0.80;
constexpr double kScreenExactMin = 0.95;
constexpr double kSandwichSlack = 1e-9;
constexpr double kVarianceRel = 1e-8;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double x, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << x;
  return s.str();
}

ModelSpec quenched(ModelSpec spec, Eigen::VectorXd h) {
  spec.field_mode = FieldMode::QuenchedSharedRealization;
  spec.realization = std::move(h);
  return spec;
}

double tv_distance(const ModelSpec& spec, const Eigen::VectorXd& h, Eigen::Index draws,
                   std::uint64_t seed) {
  const Eigen::VectorXd p = enumerate_distribution(spec, h);
  const SpinSample s = sample(spec, draws, seed);
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(p.size());
  for (Eigen::Index r = 0; r < s.m(); ++r) {
    Eigen::Index state = 0;
    for (Eigen::Index i = 0; i < s.n(); ++i)
      if (s.spins(r, i) > 0) state |= Eigen::Index{1} << i;
    counts(state) += 1.0;
  }
  return 0.5 * (counts / static_cast<double>(draws) - p).cwiseAbs().sum();
}

Outcome sampler_exactness() {
  const int n = 8;
  Eigen::VectorXd h(n);
  for (int i = 0; i < n; ++i) h(i) = i % 2 == 0 ? 0.3 : -0.3;
  const ModelSpec spec =
      quenched(ModelSpec::planted(n, {0, 1, 2, 3}, 0.6, TwoPoint{0.3, -0.3, 0.5}), h);
  const double tv = tv_distance(spec, h, 1'000'000, 11);
  return {tv <= kTvMax, "TV = " + fmt(tv) + " (max " + fmt(kTvMax) + ")"};
}

Outcome pair_correlation() {
  const Eigen::Index draws = 1'000'000;
  const ModelSpec spec = ModelSpec::planted(2, {0, 1}, std::log(3.0), PointMass{0.0});
  const SpinSample s = sample(spec, draws, 12);
  const double equal = (s.spins.col(0) == s.spins.col(1)).cast<double>().mean();
  const double se = std::sqrt(kPairTarget * (1.0 - kPairTarget) / static_cast<double>(draws));
  return {std::abs(equal - kPairTarget) <= kPairSe * se,
          "P(s1 = s2) = " + fmt(equal, 6) + ", target 0.75 +- " + fmt(kPairSe * se, 3)};
}

Outcome high_clt() {
  CltPlan plan;
  plan.field = PointMass{0.0};
  plan.theta1 = 0.5;
  plan.n_grid = {5000};
  plan.replicates = 20000;
  plan.seed = 13;
  const CltReport r = verify_clt(plan);
  const double v = r.rows.rows.front().estimate;
  const double rel = std::abs(v / r.target - 1.0);
  return {rel <= kHighVarianceRel,
          "Var = " + fmt(v) + ", target " + fmt(r.target) + ", rel err " + fmt(rel, 3)};
}

Outcome low_fixed_point() {
  CltPlan plan;
  plan.field = PointMass{0.0};
  plan.theta1 = 1.5;
  plan.n_grid = {5000};
  plan.replicates = 4000;
  plan.seed = 14;
  const CltReport r = verify_clt(plan);
  const double m = r.rows.rows.front().extras.at(0);
  const double rel = std::abs(m / kLowMagnetization - 1.0);
  return {rel <= kLowMagnetizationRel,
          "|m| = " + fmt(m, 6) + ", target " + fmt(kLowMagnetization, 8) + ", rel err " +
              fmt(rel, 3)};
}

Outcome critical_slope() {
  CltPlan plan;
  plan.field = TwoPoint{0.5, -0.5, 0.5};
  plan.theta1 = critical_temperature(plan.field);
  plan.n_grid = {500, 1000, 2000, 4000, 8000, 16000};
  plan.replicates = 2000;
  plan.seed = 15;
  const CltReport r = verify_clt(plan);
  const double slope = r.slope.value_or(NAN);
  return {std::abs(slope - r.target) <= kSlopeAbs,
          "slope = " + fmt(slope) + " +- " + fmt(r.slope_se.value_or(NAN), 2) + ", target " +
              fmt(r.target)};
}

ExperimentPlan plan_for(int n, int k, double theta1, FieldDistribution field, Eigen::Index m,
                        int replicates, std::uint64_t seed) {
  ExperimentPlan plan;
  plan.base_spec = ModelSpec::planted(n, {}, theta1, std::move(field));
  plan.base_spec.k = k;
  plan.m = m;
  plan.replicates = replicates;
  plan.seed = seed;
  return plan;
}

Outcome type_one() {
  struct Case {
    TestId id;
    int n, k;
    double theta1;
    FieldDistribution field;
    Eigen::Index m;
  };
  const FieldDistribution two_point = TwoPoint{0.5, -0.5, 0.5};
  const std::vector<Case> cases = {
      {TestId::HighLocal, 60, 6, 0.5, PointMass{0.0}, 800},
      {TestId::HighGlobal, 200, 40, 0.5, PointMass{0.0}, 1000},
      {TestId::LowLocal, 100, 8, 1.5, PointMass{0.0}, 256},
      {TestId::LowGlobal, 100, 20, 1.5, PointMass{0.0}, 100},
      {TestId::CriticalGlobal, 200, 40, critical_temperature(two_point), two_point, 1000},
  };
  const int replicates = 2000;
  bool pass = true;
  std::string detail;
  std::uint64_t seed = 16;
  for (const Case& c : cases) {
    ExperimentPlan plan = plan_for(c.n, c.k, c.theta1, c.field, c.m, replicates, seed++);
    plan.test.test = c.id;
    const Rate r = estimate_type1(plan);
    const double limit = kTypeOneDelta + kTypeOneSe * std::sqrt(kTypeOneDelta * (1 - kTypeOneDelta) /
                                                                 static_cast<double>(replicates));
    pass = pass && r.rate <= limit;
    detail += std::string(to_string(c.id)) + " " + fmt(r.rate, 3) + "; ";
  }
  detail += "limit " + fmt(kTypeOneDelta + kTypeOneSe * std::sqrt(0.0475 / replicates), 3) +
            " (low_local uses the heuristic scan)";
  return {pass, detail};
}

Outcome power_at_theory() {
  const Eigen::Index m_high = static_cast<Eigen::Index>(std::ceil(8.0 * 6 * std::log(60.0)));
  const Eigen::Index m_low = static_cast<Eigen::Index>(std::ceil(6.0 * std::log(100.0)));
  const double high = estimate_errors(plan_for(60, 6, 0.5, PointMass{0.0}, m_high, 500, 17)).power();
  const double low = estimate_errors(plan_for(100, 8, 1.5, PointMass{0.0}, m_low, 500, 18)).power();
  return {high >= kPowerMin && low >= kPowerMin,
          "high local m=" + std::to_string(m_high) + " power " + fmt(high, 3) + "; low local m=" +
              std::to_string(m_low) + " power " + fmt(low, 3)};
}

Outcome regime_ordering() {
  const std::vector<Eigen::Index> grid = {8,   12,  16,  24,  32,  48,   64,   96,  128,
                                          192, 256, 384, 512, 768, 1024, 1536, 2048};
  const FieldDistribution field = TwoPoint{0.5, -0.5, 0.5};
  const double tc = critical_temperature(field);
  auto m_star = [&](double theta1, std::uint64_t seed) -> double {
    try {
      return static_cast<double>(
          sample_complexity(plan_for(100, 8, theta1, field, 0, 200, seed), grid, kPowerMin).m);
    } catch (const Error&) {
      return INFINITY;
    }
  };
  const double low = m_star(1.5 * tc, 19);
  const double crit = m_star(tc, 20);
  const double high = m_star(0.5 * tc, 21);
  return {low < crit && crit < high, "m* low " + fmt(low) + ", critical " + fmt(crit) +
                                         ", high " + fmt(high) + " (need low < critical < high)"};
}

Outcome recovery_and_screening() {
  const int n = 40, k = 8, runs = 200;
  const Eigen::Index m = static_cast<Eigen::Index>(std::ceil(12.0 * k * std::log(n)));
  const double theta1 = 0.8;
  const FieldDistribution field = PointMass{0.0};
  const RegimeInfo regime = classify_regime(field, theta1);
  int scan_exact = 0, screen_exact = 0;
  for (int r = 0; r < runs; ++r) {
    Rng rng(derive_seed(22, static_cast<std::uint64_t>(r)));
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<int> truth(order.begin(), order.begin() + k);
    std::sort(truth.begin(), truth.end());
    const SpinSample s = sample(ModelSpec::planted(n, truth, theta1, field), m, rng());
    scan_exact += scan_recover(s, k, regime).estimate == truth;
    std::vector<int> corrupted = truth;
    corrupted[rng() % k] = order[k + rng() % (n - k)];
    std::sort(corrupted.begin(), corrupted.end());
    screen_exact += screen(s, corrupted, k, regime) == truth;
  }
  const double scan_rate = static_cast<double>(scan_exact) / runs;
  const double screen_rate = static_cast<double>(screen_exact) / runs;
  return {scan_rate >= kScanExactMin && screen_rate >= kScreenExactMin,
          "m=" + std::to_string(m) + ": scan exact " + fmt(scan_rate, 3) + ", screen exact " +
              fmt(screen_rate, 3)};
}

double lambda_max_k(const Eigen::MatrixXd& c, int k) {
  const int n = static_cast<int>(c.rows());
  std::vector<bool> mask(n, false);
  std::fill(mask.begin(), mask.begin() + k, true);
  double best = -INFINITY;
  Eigen::MatrixXd sub(k, k);
  std::vector<int> idx;
  do {
    idx.clear();
    for (int i = 0; i < n; ++i)
      if (mask[i]) idx.push_back(i);
    for (int a = 0; a < k; ++a)
      for (int b = 0; b < k; ++b) sub(a, b) = c(idx[a], idx[b]);
    best = std::max(best, Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sub, Eigen::EigenvaluesOnly)
                              .eigenvalues()
                              .maxCoeff());
  } while (std::prev_permutation(mask.begin(), mask.end()));
  return best;
}

std::vector<std::pair<Eigen::MatrixXd, int>> sandwich_corpus(Rng& rng) {
  std::vector<std::pair<Eigen::MatrixXd, int>> corpus;
  std::uniform_int_distribution<int> size(2, 12);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::normal_distribution<double> gauss;
  auto pick_k = [&](int n) { return std::uniform_int_distribution<int>(1, n)(rng); };
  auto unit_diagonal = [](Eigen::MatrixXd c) {
    c = 0.5 * (c + c.transpose()).eval();
    c.diagonal().setOnes();
    return c;
  };
  // Arbitrary symmetric, entries in [-1, 1].
  for (int t = 0; t < 250; ++t) {
    const int n = size(rng);
    Eigen::MatrixXd c(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) c(i, j) = unit(rng);
    corpus.emplace_back(unit_diagonal(c), pick_k(n));
  }
  // Correlation matrices of Gaussian vectors.
  for (int t = 0; t < 150; ++t) {
    const int n = size(rng);
    const int d = std::uniform_int_distribution<int>(1, 2 * n)(rng);
    Eigen::MatrixXd x(n, d);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < d; ++j) x(i, j) = gauss(rng);
    x.rowwise().normalize();
    corpus.emplace_back(unit_diagonal(x * x.transpose()), pick_k(n));
  }
  // Adversarial: constant off-diagonals, planted blocks, sign patterns and
  // entries sitting exactly on the threshold grid.
  const std::vector<double> levels = {-0.5, -0.2, 0.0, 0.05, 0.2, 0.5, 0.9, 1.0};
  for (int t = 0; t < 100; ++t) {
    const int n = size(rng);
    Eigen::MatrixXd c(n, n);
    switch (t % 4) {
      case 0:
        c.setConstant(levels[t / 4 % levels.size()]);
        break;
      case 1: {
        const int b = std::uniform_int_distribution<int>(1, n)(rng);
        c.setZero();
        c.topLeftCorner(b, b).setConstant(levels[t / 4 % levels.size()]);
        break;
      }
      case 2: {
        Eigen::VectorXd v(n);
        for (int i = 0; i < n; ++i) v(i) = rng() % 2 ? 1.0 : -1.0;
        c = v * v.transpose();
        break;
      }
      default:
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) c(i, j) = levels[rng() % levels.size()];
    }
    corpus.emplace_back(unit_diagonal(c), pick_k(n));
  }
  return corpus;
}

Outcome sdp_sandwich() {
  Rng rng(23);
  const auto corpus = sandwich_corpus(rng);
  const std::vector<double> z_grid = {0.0, 0.05, 0.2, 0.5, 1.0};
  int violations = 0;
  double worst = -INFINITY;
  for (const auto& [c, k] : corpus) {
    const double lower = lambda_max_k(c, k);
    for (double z : z_grid) {
      const double gap = lower - sdp_dual_bound(c, k, z);
      worst = std::max(worst, gap);
      violations += gap > kSandwichSlack * std::max(1.0, std::abs(lower));
    }
  }
  return {violations == 0, std::to_string(corpus.size()) + " matrices x " +
                               std::to_string(z_grid.size()) + " levels, violations " +
                               std::to_string(violations) + ", max(lambda_k - bound) " + fmt(worst, 3)};
}

Outcome overlap_bound() {
  const std::vector<std::pair<int, int>> grid = {
      {10, 3},    {10, 10},   {50, 2},    {50, 5},    {50, 20},  {50, 50},  {100, 1},
      {200, 2},   {200, 5},   {200, 20},  {200, 50},  {1000, 2}, {1000, 5}, {1000, 20},
      {1000, 50}, {2000, 1},  {2000, 2},  {2000, 5},  {2000, 20}, {2000, 50}};
  bool pass = true;
  double worst = 0.0;
  for (const auto& [n, k] : grid) {
    const OverlapReport r = overlap_bound_check(n, k);
    pass = pass && r.all_hold && r.normalized;
    worst = std::max(worst, r.max_ratio);
  }
  return {pass, std::to_string(grid.size()) + " (n,k) pairs, exact comparison, max P/bound " +
                    fmt(worst, 4)};
}

Outcome variance_cross_check() {
  const std::vector<FieldDistribution> fields = {
      TwoPoint{0.1, -0.1, 0.5}, TwoPoint{0.3, -0.3, 0.5}, TwoPoint{0.5, -0.5, 0.5},
      TwoPoint{0.8, -0.8, 0.5}, TwoPoint{1.0, -1.0, 0.5}, Gaussian{0.0, 0.2},
      Gaussian{0.0, 0.5},       Gaussian{0.0, 1.0},       Uniform{-0.5, 0.5},
      Uniform{-1.5, 1.5}};
  double worst = 0.0, ratio_lo = INFINITY, ratio_hi = 0.0, scaled_lo = INFINITY, scaled_hi = 0.0;
  for (const FieldDistribution& f : fields) {
    const CriticalVarianceForms v = critical_variance_forms(f, critical_temperature(f), 2, 0.0);
    worst = std::max(worst, std::abs(v.stirling / v.derivative_form - 1.0));
    ratio_lo = std::min(ratio_lo, v.stirling / v.derivative_form);
    ratio_hi = std::max(ratio_hi, v.stirling / v.derivative_form);
    scaled_lo = std::min(scaled_lo, v.stirling / v.scaled_stirling);
    scaled_hi = std::max(scaled_hi, v.stirling / v.scaled_stirling);
  }
  return {worst <= kVarianceRel, "10 fields: stirling / derivative form in [" + fmt(ratio_lo, 10) +
                                     ", " + fmt(ratio_hi, 10) + "], stirling / scaled form in [" +
                                     fmt(scaled_lo, 10) + ", " + fmt(scaled_hi, 10) + "]"};
}

std::set<int> parse_list(const std::string& text) {
  std::set<int> out;
  std::stringstream s(text);
  std::string item;
  while (std::getline(s, item, ','))
    if (!item.empty()) out.insert(std::stoi(item));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app("prfcw acceptance suite");
  std::string only, expect_fail;
  app.add_option("--only", only, "comma separated criteria to run");
  app.add_option("--expect-fail", expect_fail, "comma separated criteria known to fail");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<int, std::function<Outcome()>>> criteria = {
      {1, sampler_exactness}, {2, pair_correlation},      {3, high_clt},
      {4, low_fixed_point},   {5, critical_slope},        {6, type_one},
      {7, power_at_theory},   {8, regime_ordering},       {9, recovery_and_screening},
      {10, sdp_sandwich},     {11, overlap_bound},        {12, variance_cross_check},
  };
  const std::set<int> selected = parse_list(only);
  std::set<int> expected = parse_list(expect_fail);
  std::set<int> failed;
  for (const auto& [id, run] : criteria) {
    if (!selected.empty() && !selected.count(id)) {
      expected.erase(id);
      continue;
    }
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.pass) failed.insert(id);
    std::cout << "criterion " << id << ": " << (o.pass ? "PASS" : "FAIL") << "  " << o.detail
              << "  [" << fmt(secs, 3) << " s]" << std::endl;
  }
  std::cout << "failed:";
  for (int id : failed) std::cout << ' ' << id;
  std::cout << (failed == expected ? "  (as expected)" : "  (unexpected)") << '\n';
  return failed == expected ? 0 : 1;
}
