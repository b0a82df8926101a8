#include "prfcw/landscape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace prfcw {

namespace {

constexpr int kScanIntervals = 2048;
constexpr double kBisectionTolerance = 1e-12;
constexpr int kBisectionBudget = 200;
constexpr double kMergeDistance = 1e-9;

double poly_eval(const std::vector<double>& c, double t) {
  double acc = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * t + *it;
  return acc;
}

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

// m - E[tanh(theta m + h)]
double mean_field_residual(const FieldDistribution& dist, double theta1, double m) {
  const double shift = theta1 * m;
  return m - expectation(dist, [shift](double h) { return std::tanh(shift + h); });
}

double tanh_variance_at(const FieldDistribution& dist, double shift) {
  const double mean = expectation(dist, [shift](double h) { return std::tanh(shift + h); });
  const double second = expectation(dist, [shift](double h) {
    const double t = std::tanh(shift + h);
    return t * t;
  });
  return std::max(0.0, second - mean * mean);
}

}  // namespace

std::string RegimeInfo::name() const {
  if (is_high()) return "High";
  if (is_low()) return "Low";
  return "Critical";
}

std::vector<double> log_cosh_derivative_poly(int order) {
  if (order < 1 || order > 2 * kMaxFlatness)
    throw Error(ErrorCode::InvalidSpec, "log cosh derivative order out of range");
  std::vector<double> p = {0.0, 1.0};  // d/dy log cosh = t
  for (int j = 1; j < order; ++j) {
    // d/dy p(t) = p'(t) (1 - t^2)
    std::vector<double> dp(std::max<std::size_t>(p.size() - 1, 1), 0.0);
    for (std::size_t i = 1; i < p.size(); ++i) dp[i - 1] = static_cast<double>(i) * p[i];
    std::vector<double> next(dp.size() + 2, 0.0);
    for (std::size_t i = 0; i < dp.size(); ++i) {
      next[i] += dp[i];
      next[i + 2] -= dp[i];
    }
    while (next.size() > 1 && next.back() == 0.0) next.pop_back();
    p = std::move(next);
  }
  return p;
}

double critical_temperature(const FieldDistribution& dist) {
  return 1.0 / field_functional(dist, Functional::Sech2);
}

double landscape_H(const FieldDistribution& dist, double theta1, double x) {
  return 0.5 * x * x - field_functional(dist, Functional::LogCoshAt, x, theta1);
}

double landscape_derivative(const FieldDistribution& dist, double theta1, double x,
                            int order) {
  if (order == 0) return landscape_H(dist, theta1, x);
  const auto poly = log_cosh_derivative_poly(order);
  const double root = std::sqrt(theta1);
  const double shift = root * x;
  const double mean = expectation(
      dist, [&poly, shift](double h) { return poly_eval(poly, std::tanh(shift + h)); });
  const double scale = std::pow(root, order);
  if (order == 1) return x - scale * mean;
  if (order == 2) return 1.0 - scale * mean;
  return -scale * mean;
}

std::vector<double> fixed_points(const FieldDistribution& dist, double theta1) {
  if (!(theta1 >= 0.0)) throw Error(ErrorCode::InvalidSpec, "theta1 must be >= 0");
  std::vector<double> grid(kScanIntervals + 1);
  std::vector<double> values(kScanIntervals + 1);
  for (int i = 0; i <= kScanIntervals; ++i) {
    grid[i] = -1.0 + 2.0 * i / kScanIntervals;
    values[i] = mean_field_residual(dist, theta1, grid[i]);
  }
  std::vector<double> roots;
  for (int i = 0; i <= kScanIntervals; ++i) {
    if (values[i] == 0.0) roots.push_back(grid[i]);
    if (i == kScanIntervals) break;
    if (values[i] == 0.0 || values[i + 1] == 0.0) continue;
    if ((values[i] < 0.0) == (values[i + 1] < 0.0)) continue;
    double lo = grid[i], hi = grid[i + 1];
    double f_lo = values[i];
    int iter = 0;
    while (hi - lo > kBisectionTolerance) {
      if (++iter > kBisectionBudget)
        throw Error(ErrorCode::NoConvergence, "fixed-point bisection budget exhausted");
      const double mid = 0.5 * (lo + hi);
      const double f_mid = mean_field_residual(dist, theta1, mid);
      if (f_mid == 0.0) {
        lo = hi = mid;
        break;
      }
      if ((f_mid < 0.0) == (f_lo < 0.0)) {
        lo = mid;
        f_lo = f_mid;
      } else {
        hi = mid;
      }
    }
    roots.push_back(0.5 * (lo + hi));
  }
  std::sort(roots.begin(), roots.end());
  std::vector<double> merged;
  for (double r : roots)
    if (merged.empty() || r - merged.back() > kMergeDistance) merged.push_back(r);
  return merged;
}

double global_minimizer(const FieldDistribution& dist, double theta1) {
  const auto roots = fixed_points(dist, theta1);
  if (roots.empty()) throw Error(ErrorCode::NoConvergence, "no stationary point found");
  double best = roots.front();
  double best_value = std::numeric_limits<double>::infinity();
  for (double m : roots) {
    const double value = landscape_H(dist, theta1, std::sqrt(theta1) * m);
    // ties (symmetric fields) resolve to the larger root
    if (value < best_value - 1e-13 || std::abs(value - best_value) <= 1e-13) {
      best = m;
      best_value = std::min(value, best_value);
    }
  }
  return best;
}

Flatness flatness(const FieldDistribution& dist, double theta1, double m_star) {
  if (std::abs(mean_field_residual(dist, theta1, m_star)) > 1e-8)
    throw Error(ErrorCode::InvalidSpec, "flatness probed away from a fixed point");
  const double x_star = std::sqrt(theta1) * m_star;
  // scale = max(1, |H''(0)| at theta1 = 0) = 1
  constexpr double scale = 1.0;
  for (int tau = 1; tau <= kMaxFlatness; ++tau) {
    const double d = landscape_derivative(dist, theta1, x_star, 2 * tau);
    if (std::abs(d) > kFlatnessTolerance * scale) return Flatness{tau, d > 0.0};
  }
  throw Error(ErrorCode::FlatnessUndetectable,
              "all even derivatives of H through order 8 vanish");
}

RegimeInfo classify_regime(const FieldDistribution& dist, double theta1) {
  if (!(theta1 > 0.0)) throw Error(ErrorCode::InvalidSpec, "theta1 must be > 0");
  RegimeInfo info;
  info.theta1 = theta1;
  info.theta_c = critical_temperature(dist);
  info.fixed_points = fixed_points(dist, theta1);
  info.centered = dist.is_symmetric();
  info.global_minimizer = info.centered && theta1 <= info.theta_c + kRegimeTolerance
                              ? 0.0
                              : global_minimizer(dist, theta1);
  info.minimizer_tau = flatness(dist, theta1, info.global_minimizer).tau;

  if (std::abs(theta1 - info.theta_c) <= kRegimeTolerance) {
    const double probe = info.centered ? 0.0 : info.global_minimizer;
    const Flatness f = flatness(dist, theta1, probe);
    info.regime = CriticalRegime{f.tau, f.is_minimum};
  } else if (theta1 < info.theta_c) {
    info.regime = HighRegime{};
  } else {
    info.regime = LowRegime{info.fixed_points.back(), info.fixed_points.front()};
  }
  return info;
}

double high_temp_variance(const FieldDistribution& dist, double theta1) {
  const double s = field_functional(dist, Functional::Sech2);
  if (theta1 >= 1.0 / s - kRegimeTolerance)
    throw Error(ErrorCode::RegimeMismatch, "high-temperature variance needs theta1 < theta_c");
  const double denom = 1.0 - theta1 * s;
  return (1.0 - theta1 * s * s) / (denom * denom);
}

double low_temp_variance(const FieldDistribution& dist, double theta1, double m_star) {
  const bool centered = dist.is_symmetric();
  if (centered && theta1 <= critical_temperature(dist) + kRegimeTolerance)
    throw Error(ErrorCode::RegimeMismatch,
                "low-temperature variance needs theta1 > theta_c for centered fields");
  if (centered && m_star == 0.0)
    throw Error(ErrorCode::RegimeMismatch, "low-temperature variance needs m* != 0");
  // sqrt(theta1) x = theta1 m
  const double shift = theta1 * m_star;
  const double s = expectation(dist, [shift](double h) { return sech2(shift + h); });
  const double t = expectation(dist, [shift](double h) { return std::tanh(shift + h); });
  const double denom = 1.0 - theta1 * s;
  const double value = (1.0 - theta1 * s * s - t * t) / (denom * denom);
  if (value < 0.0)
    throw Error(ErrorCode::NegativeVariance, "low-temperature variance came out negative");
  return value;
}

CriticalVarianceForms critical_variance_forms(const FieldDistribution& dist,
                                              double theta1, int tau, double m_star) {
  if (tau < 2 || tau > kMaxFlatness)
    throw Error(ErrorCode::RegimeMismatch, "critical variance needs 2 <= tau <= 4");
  const double shift = theta1 * m_star;
  const double var_tanh = tanh_variance_at(dist, shift);
  if (var_tanh <= 0.0)
    throw Error(ErrorCode::DegenerateField,
                "Var(tanh) vanishes at the critical point; the limit law degenerates");
  const double s = expectation(dist, [shift](double h) { return sech2(shift + h); });

  // E[(1 + t) sum_k k!/2^k S(2tau-1, k) (t - 1)^k]
  const int order = 2 * tau - 1;
  std::vector<double> coeff(order + 1);
  for (int k = 0; k <= order; ++k)
    coeff[k] = factorial(k) / std::ldexp(1.0, k) * static_cast<double>(stirling2(order, k));
  const double stirling_sum = expectation(dist, [&coeff, shift](double h) {
    const double t = std::tanh(shift + h);
    double acc = 0.0, power = 1.0;
    for (double c : coeff) {
      acc += c * power;
      power *= t - 1.0;
    }
    return (1.0 + t) * acc;
  });

  const double fact2tau = factorial(2 * tau);
  const double s_power = std::pow(s, 4 * tau - 2);
  const double h_deriv =
      landscape_derivative(dist, theta1, std::sqrt(theta1) * m_star, 2 * tau);

  CriticalVarianceForms forms;
  forms.h_derivative = h_deriv;
  forms.stirling = fact2tau * fact2tau * var_tanh * s_power / (stirling_sum * stirling_sum);
  forms.scaled_stirling = forms.stirling / std::ldexp(1.0, 2 * tau - 1);
  forms.derivative_form = fact2tau * fact2tau * std::pow(theta1, 2 * tau) * var_tanh * s_power /
                     (h_deriv * h_deriv);
  const double fact = factorial(2 * tau - 1);
  forms.taylor = fact * fact * std::pow(theta1, 2 - 2 * tau) * var_tanh / (h_deriv * h_deriv);
  return forms;
}

double critical_variance(const FieldDistribution& dist, double theta1, int tau,
                         double m_star) {
  return critical_variance_forms(dist, theta1, tau, m_star).stirling;
}

double critical_second_moment(double v, int tau) {
  const double p = 1.0 / (2.0 * tau - 1.0);
  return std::pow(2.0 * v, p) * std::tgamma((2.0 * tau + 1.0) / (4.0 * tau - 2.0)) /
         std::sqrt(std::numbers::pi);
}

double scaling_exponent(int tau) {
  return (4.0 * tau - 3.0) / (4.0 * tau - 2.0);
}

std::uint64_t stirling2(int n, int k) {
  if (n < 0 || k < 0 || n > 64 || k > 64)
    throw Error(ErrorCode::Overflow, "stirling2 arguments must lie in [0, 64]");
  if (k > n) return 0;
  // row-by-row recurrence S(i, j) = j S(i-1, j) + S(i-1, j-1)
  std::vector<std::uint64_t> row(k + 1, 0);
  row[0] = 1;
  for (int i = 1; i <= n; ++i) {
    for (int j = std::min(i, k); j >= 1; --j) {
      std::uint64_t scaled = 0, sum = 0;
      if (__builtin_mul_overflow(static_cast<std::uint64_t>(j), row[j], &scaled) ||
          __builtin_add_overflow(scaled, row[j - 1], &sum))
        throw Error(ErrorCode::Overflow, "stirling2 exceeds 64 bits");
      row[j] = sum;
    }
    row[0] = 0;
  }
  return row[k];
}

}  // namespace prfcw
