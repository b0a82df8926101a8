#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "prfcw/field.hpp"

namespace prfcw {

// |theta1 - theta_c| at or below this is the critical regime.
inline constexpr double kRegimeTolerance = 1e-9;
// Relative threshold under which an even derivative of H counts as zero.
inline constexpr double kFlatnessTolerance = 1e-8;
inline constexpr int kMaxFlatness = 4;

struct HighRegime {};
struct CriticalRegime {
  int tau = 2;
  bool is_minimum = true;
};
// m_pos / m_neg are the largest / smallest fixed points.
struct LowRegime {
  double m_pos = 0.0;
  double m_neg = 0.0;
};

struct RegimeInfo {
  double theta1 = 0.0;
  double theta_c = 1.0;
  std::variant<HighRegime, CriticalRegime, LowRegime> regime;
  std::vector<double> fixed_points;  // magnetizations, sorted
  bool centered = true;              // structural symmetry of the field
  double global_minimizer = 0.0;     // argmin of theta m^2/2 - E log cosh(theta m + h)
  int minimizer_tau = 1;             // flatness at global_minimizer

  bool is_high() const { return std::holds_alternative<HighRegime>(regime); }
  bool is_low() const { return std::holds_alternative<LowRegime>(regime); }
  bool is_critical() const { return std::holds_alternative<CriticalRegime>(regime); }
  std::string name() const;
};

struct Flatness {
  int tau = 1;
  bool is_minimum = true;
};

double critical_temperature(const FieldDistribution& dist);

/// H(x) = x^2/2 - E[log cosh(sqrt(theta1) x + h)], in the auxiliary coordinate x.
double landscape_H(const FieldDistribution& dist, double theta1, double x);

/// order-th derivative of H at x, orders 0..8, from closed-form derivatives of
/// log cosh written as polynomials in tanh.
double landscape_derivative(const FieldDistribution& dist, double theta1, double x,
                            int order);

/// Coefficients (ascending powers of t = tanh y) of d^order/dy^order log cosh y.
std::vector<double> log_cosh_derivative_poly(int order);

/// Solutions in [-1, 1] of m = E[tanh(theta1 m + h)], sorted.
std::vector<double> fixed_points(const FieldDistribution& dist, double theta1);

/// Stationary point of theta1 m^2/2 - E log cosh(theta1 m + h) with the
/// smallest value (the positive one on exact ties).
double global_minimizer(const FieldDistribution& dist, double theta1);

/// Flatness at the fixed point m_star (a magnetization; x* = sqrt(theta1) m*).
Flatness flatness(const FieldDistribution& dist, double theta1, double m_star);

RegimeInfo classify_regime(const FieldDistribution& dist, double theta1);

double high_temp_variance(const FieldDistribution& dist, double theta1);

double low_temp_variance(const FieldDistribution& dist, double theta1, double m_star);

/// Limiting variance parameter v at a tau-flat critical point, evaluated by
/// the Stirling-number closed form.
double critical_variance(const FieldDistribution& dist, double theta1, int tau,
                         double m_star);

/**
 * Three algebraic forms of the critical variance parameter and
 * the one obtained from a direct Taylor expansion of the mean-field equation.
 *
 * stirling:        ((2tau)!)^2 Var(tanh) (E sech^2)^(4tau-2) / E[P(tanh)]^2
 * derivative_form: ((2tau)!)^2 theta^(2tau) Var(tanh) (E sech^2)^(4tau-2) / H^(2tau)^2
 * scaled_stirling: stirling / 2^(2tau-1)
 * taylor:          ((2tau-1)!)^2 theta^(2-2tau) Var(tanh) / H^(2tau)^2
 *
 * H^(2tau) here is the analytic derivative. With tanh^(n) = (-2)^n (1+t) sum...,
 * stirling = 2^(4tau-2) derivative_form and derivative_form = (2tau)^2 taylor.
 */
struct CriticalVarianceForms {
  double stirling = 0.0;
  double derivative_form = 0.0;
  double scaled_stirling = 0.0;
  double taylor = 0.0;
  double h_derivative = 0.0;  // H^(2tau)(x*)
};

CriticalVarianceForms critical_variance_forms(const FieldDistribution& dist,
                                              double theta1, int tau, double m_star);

/// E|W|^2 for W^(2tau-1) ~ N(0, v): pi^(-1/2) (2v)^(1/(2tau-1)) Gamma((2tau+1)/(4tau-2)).
double critical_second_moment(double v, int tau);

/// (4tau-3)/(4tau-2); 1/2 for tau = 1.
double scaling_exponent(int tau);

/// Stirling number of the second kind; n, k <= 64, throws Overflow otherwise.
std::uint64_t stirling2(int n, int k);

}  // namespace prfcw
