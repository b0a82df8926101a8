#include <cmath>
#include <random>

#include "doctest.h"
#include "prfcw/field.hpp"

using namespace prfcw;

namespace {
// mpmath, 30 digits
constexpr double kSech2Half = 0.786447732965927410;
constexpr double kTanh2Half = 0.213552267034072590;
}  // namespace

TEST_CASE("field_functional examples") {
  CHECK(field_functional(PointMass{0.0}, Functional::Sech2) == 1.0);
  CHECK(field_functional(TwoPoint{0.5, -0.5, 0.5}, Functional::Sech2) ==
        doctest::Approx(kSech2Half).epsilon(1e-14));
  CHECK(field_functional(PointMass{0.0}, Functional::LogCoshAt, 1.0, 1.0) ==
        doctest::Approx(std::log(std::cosh(1.0))).epsilon(1e-14));
}

TEST_CASE("moments") {
  const MomentSet pm = moments(PointMass{0.0});
  CHECK(pm.sech2_mean == 1.0);
  CHECK(pm.tanh_mean == 0.0);
  CHECK(pm.tanh_var == 0.0);
  CHECK(pm.sech4_mean == 1.0);
  CHECK(pm.sech2tanh2_mean == 0.0);

  const MomentSet tp = moments(TwoPoint{0.5, -0.5, 0.5});
  CHECK(std::abs(tp.tanh_mean) < 1e-15);
  CHECK(tp.tanh_var == doctest::Approx(kTanh2Half).epsilon(1e-13));

  const MomentSet g = moments(Gaussian{0.0, 1.0});
  CHECK(std::abs(g.tanh_mean) < 1e-10);
  CHECK(g.tanh_var >= 0.0);
  CHECK(g.sech4_mean <= g.sech2_mean);
  CHECK(g.sech2_mean <= 1.0);
}

TEST_CASE("quadrature reaches the stated tolerance on smooth laws") {
  // E[h^2] for Uniform(0,1) is exactly 1/3, E[h^4] for N(0,1) is 3.
  CHECK(expectation(Uniform{0.0, 1.0}, [](double h) { return h * h; }) ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(expectation(Gaussian{0.0, 1.0}, [](double h) { return h * h * h * h; }) ==
        doctest::Approx(3.0).epsilon(1e-12));
  CHECK(expectation(Gaussian{1.0, 2.0}, [](double h) { return h; }) ==
        doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("non-convergent quadrature is reported") {
  // E[exp(h^2)] diverges for a standard normal
  auto step = [](double h) { return std::exp(h * h); };
  try {
    expectation(Gaussian{0.0, 1.0}, step);
    FAIL("expected NonFiniteMoment");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonFiniteMoment);
  }
}

TEST_CASE("invalid distributions are rejected") {
  auto code_of = [](auto&& make) {
    try {
      make();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::IoError;
  };
  CHECK(code_of([] { FieldDistribution d(TwoPoint{1.0, -1.0, 1.5}); }) ==
        ErrorCode::InvalidDistribution);
  CHECK(code_of([] { FieldDistribution d(Gaussian{0.0, -1.0}); }) ==
        ErrorCode::InvalidDistribution);
  CHECK(code_of([] { FieldDistribution d(Uniform{1.0, 0.0}); }) ==
        ErrorCode::InvalidDistribution);
  CHECK(code_of([] { FieldDistribution d(Empirical{}); }) == ErrorCode::InvalidDistribution);
  CHECK(code_of([] { FieldDistribution::parse("cauchy(0, 1)"); }) ==
        ErrorCode::InvalidDistribution);
  CHECK(code_of([] { FieldDistribution::parse("twopoint(a=1, b=2)"); }) ==
        ErrorCode::InvalidDistribution);
}

TEST_CASE("structural symmetry") {
  CHECK(FieldDistribution(PointMass{0.0}).is_symmetric());
  CHECK_FALSE(FieldDistribution(PointMass{0.2}).is_symmetric());
  CHECK(FieldDistribution(TwoPoint{0.5, -0.5, 0.5}).is_symmetric());
  CHECK_FALSE(FieldDistribution(TwoPoint{0.5, -0.5, 0.6}).is_symmetric());
  CHECK(FieldDistribution(Uniform{-1.0, 1.0}).is_symmetric());
  CHECK_FALSE(FieldDistribution(Uniform{0.0, 1.0}).is_symmetric());
  CHECK(FieldDistribution(Gaussian{0.0, 2.0}).is_symmetric());
  CHECK(FieldDistribution(Empirical{{-1.0, 0.0, 1.0, 2.0, -2.0}}).is_symmetric());
  CHECK_FALSE(FieldDistribution(Empirical{{-1.0, 2.0}}).is_symmetric());
}

TEST_CASE("config fragment round trip") {
  const FieldDistribution a = FieldDistribution::parse("field = twopoint(a=0.5, b=-0.5, p=0.5)");
  CHECK(a.to_string() == "twopoint(a=0.5, b=-0.5, p=0.5)");
  CHECK(FieldDistribution::parse("twopoint(0.5,-0.5,0.5)") == a);
  CHECK(FieldDistribution::parse("TwoPoint(p=0.5, a=0.5, b=-0.5)") == a);

  std::mt19937_64 gen(11);
  std::normal_distribution<double> normal(0.0, 3.0);
  for (int trial = 0; trial < 50; ++trial) {
    const double x = normal(gen), y = normal(gen);
    for (const FieldDistribution& d :
         {FieldDistribution(PointMass{x}), FieldDistribution(TwoPoint{x, y, 0.3}),
          FieldDistribution(Uniform{std::min(x, y), std::max(x, y)}),
          FieldDistribution(Gaussian{x, std::abs(y)}), FieldDistribution(Empirical{{x, y, x}})}) {
      CHECK(FieldDistribution::parse(d.to_string()) == d);
    }
  }
}

TEST_CASE("sample_field") {
  Rng rng(1);
  const Eigen::VectorXd pm = sample_field(PointMass{0.3}, 4, rng);
  CHECK((pm.array() == 0.3).all());

  constexpr int n = 1'000'000;
  Rng rng_tp(2);
  const Eigen::VectorXd tp = sample_field(TwoPoint{1.0, -1.0, 0.5}, n, rng_tp);
  const Eigen::ArrayXd t = tp.array().tanh();
  const double se = std::sqrt((t.square().mean() - t.mean() * t.mean()) / n);
  CHECK(std::abs(t.mean()) <= 3.0 * se);

  Rng rng_u(3);
  const Eigen::VectorXd u = sample_field(Uniform{0.0, 1.0}, n, rng_u);
  CHECK(std::abs(u.mean() - 0.5) <= 3.0 * std::sqrt(1.0 / 12.0 / n));
  CHECK(u.minCoeff() >= 0.0);
  CHECK(u.maxCoeff() < 1.0);

  Rng again(2);
  CHECK(sample_field(TwoPoint{1.0, -1.0, 0.5}, n, again) == tp);
}

TEST_CASE("TANH_AT is nondecreasing and bounded in x") {
  for (const FieldDistribution& d :
       {FieldDistribution(Gaussian{0.3, 1.0}), FieldDistribution(TwoPoint{0.5, -1.0, 0.2}),
        FieldDistribution(Uniform{-0.5, 2.0})}) {
    for (double theta : {0.0, 0.5, 2.0}) {
      double previous = -1.0;
      for (int i = 0; i <= 200; ++i) {
        const double x = -5.0 + 0.05 * i;
        const double v = field_functional(d, Functional::TanhAt, x, theta);
        CHECK(v >= previous);
        CHECK(std::abs(v) < 1.0);
        previous = v;
      }
    }
  }
}

TEST_CASE("SECH2 is the derivative of TANH_AT at zero") {
  for (const FieldDistribution& d :
       {FieldDistribution(Gaussian{0.3, 1.0}), FieldDistribution(TwoPoint{0.5, -1.0, 0.2}),
        FieldDistribution(Uniform{-0.5, 2.0}), FieldDistribution(PointMass{0.7})}) {
    const double step = 1e-4;
    const double fd = (field_functional(d, Functional::TanhAt, step, 1.0) -
                       field_functional(d, Functional::TanhAt, -step, 1.0)) /
                      (2.0 * step);
    CHECK(std::abs(fd - field_functional(d, Functional::Sech2)) <= 1e-6);
  }
}

TEST_CASE("Gaussian SECH2 quadrature agrees with Monte Carlo") {
  constexpr int draws = 10'000'000;
  Rng rng(2024);
  std::normal_distribution<double> normal(0.0, 1.0);
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < draws; ++i) {
    const double v = sech2(normal(rng));
    sum += v;
    sum2 += v * v;
  }
  const double mean = sum / draws;
  const double se = std::sqrt((sum2 / draws - mean * mean) / draws);
  CHECK(std::abs(mean - field_functional(Gaussian{0.0, 1.0}, Functional::Sech2)) <= 4.0 * se);
}
