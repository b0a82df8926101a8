#pragma once

#include <Eigen/Core>
#include <cmath>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include "prfcw/error.hpp"
#include "prfcw/quadrature.hpp"
#include "prfcw/rng.hpp"

namespace prfcw {

struct PointMass {
  double a = 0.0;
};
struct TwoPoint {
  double a = 0.0;
  double b = 0.0;
  double p = 0.5;  // probability of a
};
struct Uniform {
  double lo = 0.0;
  double hi = 1.0;
};
struct Gaussian {
  double mean = 0.0;
  double sd = 1.0;
};
struct Empirical {
  std::vector<double> values;
};

struct Atom {
  double value;
  double weight;
};

/// Law of a single random-field entry h.
class FieldDistribution {
 public:
  using Law = std::variant<PointMass, TwoPoint, Uniform, Gaussian, Empirical>;

  FieldDistribution() : law_(PointMass{0.0}) {}
  // Throws InvalidDistribution on malformed parameters.
  FieldDistribution(Law law);  // NOLINT
  template <typename L>
    requires std::is_constructible_v<Law, L> && (!std::is_same_v<std::decay_t<L>, Law>)
  FieldDistribution(L law) : FieldDistribution(Law(std::move(law))) {}  // NOLINT

  const Law& law() const noexcept { return law_; }

  /// Structural symmetry (law of h equals law of -h). Never inferred
  /// numerically: TwoPoint needs p = 0.5 and b = -a exactly, etc.
  bool is_symmetric() const;

  /// PointMass, TwoPoint and Empirical have finitely many atoms.
  bool is_discrete() const;

  /// Atoms with duplicates merged, sorted by value. Discrete laws only.
  std::vector<Atom> atoms() const;

  /// Canonical config form, e.g. `twopoint(a=0.5, b=-0.5, p=0.5)`.
  std::string to_string() const;

  /// Accepts the canonical form, positional arguments
  /// (`twopoint(0.5,-0.5,0.5)`), and an optional `field =` prefix.
  static FieldDistribution parse(std::string_view text);

  friend bool operator==(const FieldDistribution& lhs,
                         const FieldDistribution& rhs);

 private:
  Law law_;
};

namespace detail {
const QuadratureRule<double>& cached_gauss_legendre(Eigen::Index n);
const QuadratureRule<double>& cached_gauss_hermite(Eigen::Index n);
[[noreturn]] void throw_quadrature_failure(const FieldDistribution& dist);

inline constexpr double kExpectationTolerance = 1e-10;
inline constexpr Eigen::Index kFirstNodeCount = 16;
inline constexpr Eigen::Index kMaxNodeCount = 2048;

template <typename Integrate>
double refine(const FieldDistribution& dist, Integrate& integrate) {
  double previous = integrate(kFirstNodeCount);
  for (Eigen::Index n = 2 * kFirstNodeCount; n <= kMaxNodeCount; n *= 2) {
    const double current = integrate(n);
    if (!std::isfinite(current)) break;
    if (std::abs(current - previous) <=
        kExpectationTolerance * std::max(1.0, std::abs(current)))
      return current;
    previous = current;
  }
  throw_quadrature_failure(dist);
}
}  // namespace detail

/**
 * E[g(h)] for h ~ dist. Exact for discrete laws; node-doubling
 * Gauss-Legendre (Uniform) or Gauss-Hermite (Gaussian) otherwise, stopping
 * when successive estimates agree to 1e-10 relative to max(|E|, 1).
 */
template <typename F>
double expectation(const FieldDistribution& dist, F&& g) {
  struct Visitor {
    const FieldDistribution& dist;
    F& g;

    double operator()(const PointMass& pm) const { return g(pm.a); }
    double operator()(const TwoPoint& tp) const {
      return tp.p * g(tp.a) + (1.0 - tp.p) * g(tp.b);
    }
    double operator()(const Empirical& emp) const {
      double total = 0.0;
      for (double v : emp.values) total += g(v);
      return total / static_cast<double>(emp.values.size());
    }
    double operator()(const Uniform& u) const {
      if (u.hi == u.lo) return g(u.lo);
      const double mid = 0.5 * (u.lo + u.hi);
      const double half = 0.5 * (u.hi - u.lo);
      auto integrate = [&](Eigen::Index n) {
        const auto& rule = detail::cached_gauss_legendre(n);
        double acc = 0.0;
        for (Eigen::Index i = 0; i < n; ++i)
          acc += rule.weights(i) * g(mid + half * rule.nodes(i));
        return 0.5 * acc;
      };
      return detail::refine(dist, integrate);
    }
    double operator()(const Gaussian& gs) const {
      if (gs.sd == 0.0) return g(gs.mean);
      const double scale = std::sqrt(2.0) * gs.sd;
      auto integrate = [&](Eigen::Index n) {
        const auto& rule = detail::cached_gauss_hermite(n);
        double acc = 0.0;
        for (Eigen::Index i = 0; i < n; ++i)
          acc += rule.weights(i) * g(gs.mean + scale * rule.nodes(i));
        return acc / std::sqrt(std::numbers::pi);
      };
      return detail::refine(dist, integrate);
    }

  };
  return std::visit(Visitor{dist, g}, dist.law());
}

enum class Functional {
  Sech2,
  Tanh,
  Tanh2,
  Sech4,
  Sech2Tanh2,
  LogCoshAt,
  TanhAt,
  Sech2At,
};

/// Numerically stable log(cosh(y)).
inline double log_cosh(double y) {
  const double a = std::abs(y);
  return a + std::log1p(std::exp(-2.0 * a)) - std::log(2.0);
}

inline double sech2(double y) {
  const double t = std::tanh(y);
  return 1.0 - t * t;
}

/// E[g(sqrt(theta1) x + h)] for the *At kinds, E[g(h)] otherwise.
double field_functional(const FieldDistribution& dist, Functional kind,
                        double x = 0.0, double theta1 = 0.0);

struct MomentSet {
  double sech2_mean = 1.0;
  double tanh_mean = 0.0;
  double tanh_var = 0.0;
  double sech4_mean = 1.0;
  double sech2tanh2_mean = 0.0;
};

MomentSet moments(const FieldDistribution& dist);

/// n i.i.d. draws from dist.
Eigen::VectorXd sample_field(const FieldDistribution& dist, Eigen::Index n,
                             Rng& rng);

}  // namespace prfcw
