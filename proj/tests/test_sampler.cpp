#include <cmath>
#include <cstdlib>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "prfcw/landscape.hpp"
#include "prfcw/sampler.hpp"

using namespace prfcw;

namespace {

ModelSpec quenched(ModelSpec spec, Eigen::VectorXd h) {
  spec.field_mode = FieldMode::QuenchedSharedRealization;
  spec.realization = std::move(h);
  return spec;
}

Eigen::VectorXd empirical_table(const SpinSample& s) {
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(Eigen::Index{1} << s.n());
  for (Eigen::Index r = 0; r < s.m(); ++r) {
    Eigen::Index idx = 0;
    for (Eigen::Index i = 0; i < s.n(); ++i)
      if (s.spins(r, i) > 0) idx |= Eigen::Index{1} << i;
    counts(idx) += 1.0;
  }
  return counts / static_cast<double>(s.m());
}

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::IoError;
}

}  // namespace

TEST_CASE("enumeration examples") {
  const ModelSpec pair = ModelSpec::planted(2, {0, 1}, std::log(3.0), PointMass{0.0});
  const Eigen::VectorXd p = enumerate_distribution(pair, Eigen::VectorXd::Zero(2));
  CHECK(p(0b11) == doctest::Approx(0.375).epsilon(1e-14));
  CHECK(p(0b00) == doctest::Approx(0.375).epsilon(1e-14));
  CHECK(p(0b01) == doctest::Approx(0.125).epsilon(1e-14));
  CHECK(p(0b10) == doctest::Approx(0.125).epsilon(1e-14));

  Eigen::VectorXd h(3);
  h << 0.3, -0.7, 1.1;
  const ModelSpec free = ModelSpec::planted(3, {0, 1, 2}, 0.0, PointMass{0.0});
  const Eigen::VectorXd q = enumerate_distribution(free, h);
  CHECK(std::abs(q.sum() - 1.0) < 1e-12);
  for (Eigen::Index s = 0; s < 8; ++s) {
    double expected = 1.0;
    for (int i = 0; i < 3; ++i) {
      const double sigma = (s >> i) & 1 ? 1.0 : -1.0;
      expected *= std::exp(h(i) * sigma) / (2.0 * std::cosh(h(i)));
    }
    CHECK(q(s) == doctest::Approx(expected).epsilon(1e-12));
  }

  const ModelSpec sym = ModelSpec::planted(6, {1, 2, 4}, 1.7, PointMass{0.0});
  const Eigen::VectorXd r = enumerate_distribution(sym, Eigen::VectorXd::Zero(6));
  for (Eigen::Index s = 0; s < 64; ++s) CHECK(r(s) == doctest::Approx(r(63 - s)).epsilon(1e-12));

  CHECK(code_of([] {
          enumerate_distribution(ModelSpec::null_model(21, PointMass{0.0}),
                                 Eigen::VectorXd::Zero(21));
        }) == ErrorCode::TooLarge);
}

TEST_CASE("null model equals theta1 = 0") {
  Eigen::VectorXd h(4);
  h << 0.2, -0.4, 0.9, 0.0;
  const Eigen::VectorXd a = enumerate_distribution(ModelSpec::null_model(4, PointMass{0.0}), h);
  const Eigen::VectorXd b =
      enumerate_distribution(ModelSpec::planted(4, {0, 2}, 0.0, PointMass{0.0}), h);
  CHECK((a - b).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("model validation") {
  ModelSpec spec = ModelSpec::planted(5, {3, 1}, 1.0, PointMass{0.0});
  CHECK(code_of([&] { spec.validate(); }) == ErrorCode::InvalidSpec);
  spec = ModelSpec::planted(5, {1, 5}, 1.0, PointMass{0.0});
  CHECK(code_of([&] { spec.validate(); }) == ErrorCode::InvalidSpec);
  spec = ModelSpec::planted(5, {1, 2}, -1.0, PointMass{0.0});
  CHECK(code_of([&] { spec.validate(); }) == ErrorCode::InvalidSpec);
  spec = ModelSpec::planted(5, {1, 2}, 1.0, PointMass{0.0});
  spec.k = 3;
  CHECK(code_of([&] { spec.validate(); }) == ErrorCode::InvalidSpec);
}

TEST_CASE("auxiliary density") {
  Eigen::VectorXd h(3);
  h << 0.4, -0.2, 0.9;
  const ModelSpec spec = ModelSpec::planted(3, {0, 1, 2}, 1.2, PointMass{0.0});
  CHECK(auxiliary_density(spec, h, 0.0) ==
        doctest::Approx(std::cosh(0.4) * std::cosh(0.2) * std::cosh(0.9)).epsilon(1e-14));

  const ModelSpec even = ModelSpec::planted(4, {0, 3}, 2.0, PointMass{0.0});
  for (double x : {0.1, 0.7, 2.5})
    CHECK(auxiliary_density(even, Eigen::VectorXd::Zero(4), x) ==
          doctest::Approx(auxiliary_density(even, Eigen::VectorXd::Zero(4), -x)));

  const AuxiliaryGrid grid({{0.0, 1}}, 1.0);
  const Eigen::ArrayXd& x = grid.nodes();
  double integral = 0.0;
  for (Eigen::Index i = 1; i < x.size(); ++i)
    integral += 0.5 * (std::exp(grid.log_density(x(i))) + std::exp(grid.log_density(x(i - 1)))) *
                (x(i) - x(i - 1));
  CHECK(integral == doctest::Approx(std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5)).epsilon(1e-5));
}

TEST_CASE("auxiliary grid brackets both low-temperature lobes") {
  const AuxiliaryGrid grid({{0.0, 400}}, std::sqrt(1.5 / 400.0));
  Rng rng(5);
  int positive = 0;
  constexpr int draws = 20000;
  for (int i = 0; i < draws; ++i) positive += grid.draw(rng) > 0.0;
  CHECK(std::abs(positive / double(draws) - 0.5) < 4.0 * 0.5 / std::sqrt(draws));
}

TEST_CASE("pair correlation matches the closed form") {
  const ModelSpec pair = ModelSpec::planted(2, {0, 1}, std::log(3.0), PointMass{0.0});
  constexpr Eigen::Index draws = 1'000'000;
  const SpinSample s = sample(pair, draws, 17);
  const double agree = (s.spins.col(0) == s.spins.col(1)).cast<double>().mean();
  const double se = std::sqrt(0.75 * 0.25 / draws);
  CHECK(std::abs(agree - 0.75) <= 4.0 * se);
}

TEST_CASE("sampler matches enumeration in total variation") {
  Eigen::VectorXd h(6);
  h << 0.5, -0.2, 0.0, 0.8, -0.6, 0.1;
  const ModelSpec spec = quenched(ModelSpec::planted(6, {0, 2, 3, 5}, 1.4, PointMass{0.0}), h);
  const SpinSample s = sample(spec, 1'000'000, 3);
  const double tv =
      0.5 * (empirical_table(s) - enumerate_distribution(spec, h)).cwiseAbs().sum();
  CHECK(tv <= 0.01);
}

TEST_CASE("null spins follow the product measure") {
  const ModelSpec spec =
      quenched(ModelSpec::null_model(3, PointMass{0.0}), Eigen::VectorXd::Constant(3, 0.3));
  constexpr Eigen::Index draws = 400'000;
  const SpinSample s = sample(spec, draws, 8);
  const double p = std::exp(0.3) / (std::exp(0.3) + std::exp(-0.3));
  for (int i = 0; i < 3; ++i) {
    const double freq = (s.spins.col(i) > 0).cast<double>().mean();
    CHECK(std::abs(freq - p) <= 4.0 * std::sqrt(p * (1 - p) / draws));
  }

  const SpinSample u = sample(ModelSpec::null_model(5, PointMass{0.0}), draws, 9);
  CHECK(std::abs(u.spins.col(2).cast<double>().mean()) <= 4.0 / std::sqrt(double(draws)));
}

TEST_CASE("clique spins are conditionally independent given the auxiliary draw") {
  const ModelSpec spec = ModelSpec::planted(5, {0, 1, 2}, 2.0, TwoPoint{0.4, -0.4, 0.5});
  constexpr Eigen::Index draws = 300'000;
  SampleOptions debug;
  debug.record_aux = true;
  const SpinSample s = sample(spec, draws, 23, debug);
  REQUIRE(s.aux.size() == draws);
  // Fields are fresh per observation, so condition on X only: E[sigma_i | X] = E tanh(cX + h).
  const double c = std::sqrt(2.0 / 3.0);
  double sum = 0.0, sum2 = 0.0;
  for (Eigen::Index r = 0; r < draws; ++r) {
    const double mean = 0.5 * (std::tanh(c * s.aux(r) + 0.4) + std::tanh(c * s.aux(r) - 0.4));
    const double v = (s.spins(r, 0) - mean) * (s.spins(r, 1) - mean);
    sum += v;
    sum2 += v * v;
  }
  const double avg = sum / draws;
  const double se = std::sqrt((sum2 / draws - avg * avg) / draws);
  CHECK(std::abs(avg) <= 4.0 * se);
}

TEST_CASE("determinism and serialisation") {
  const ModelSpec spec = ModelSpec::planted(30, {2, 5, 7, 11, 19}, 0.9, Gaussian{0.1, 0.5});
  const SpinSample a = sample(spec, 700, 99);
  const SpinSample b = sample(spec, 700, 99);
  CHECK((a.spins == b.spins).all());
  CHECK(a.spec_digest == spec.digest());
  CHECK(((a.spins == 1) || (a.spins == -1)).all());

  setenv("PRFCW_THREADS", "3", 1);
  const SpinSample threaded = sample(spec, 700, 99);
  unsetenv("PRFCW_THREADS");
  CHECK((threaded.spins == a.spins).all());

  std::stringstream bin;
  write_binary(a, bin);
  const SpinSample back = read_binary(bin);
  CHECK((back.spins == a.spins).all());
  CHECK(back.seed == 99);
  CHECK(back.spec_digest == a.spec_digest);

  std::stringstream bad("PRFCW0........");
  CHECK(code_of([&] { read_binary(bad); }) == ErrorCode::IoError);

  std::ostringstream csv;
  write_csv(a, csv);
  const std::string text = csv.str();
  CHECK(std::count(text.begin(), text.end(), '\n') == 700);
  CHECK(text.substr(0, text.find('\n')).size() >= 59);

  CHECK(spec.digest() != ModelSpec::planted(30, {2, 5, 7, 11, 18}, 0.9, Gaussian{0.1, 0.5}).digest());
}

TEST_CASE("magnetization path agrees with the spin path") {
  Eigen::VectorXd h(7);
  h << 0.3, -0.3, 0.3, -0.3, 0.3, -0.3, 0.3;
  const ModelSpec spec = quenched(ModelSpec::planted(7, {0, 1, 3, 4}, 1.8, PointMass{0.0}), h);
  const Eigen::VectorXd p = enumerate_distribution(spec, h);
  double exact_mean = 0.0, exact_sq = 0.0, exact_total = 0.0;
  for (Eigen::Index s = 0; s < p.size(); ++s) {
    int clique_sum = 0, total = 0;
    for (int i = 0; i < 7; ++i) {
      const int sigma = (s >> i) & 1 ? 1 : -1;
      total += sigma;
      if (i == 0 || i == 1 || i == 3 || i == 4) clique_sum += sigma;
    }
    exact_mean += p(s) * clique_sum;
    exact_sq += p(s) * clique_sum * clique_sum;
    exact_total += p(s) * total;
  }
  constexpr Eigen::Index draws = 400'000;
  const MagnetizationSample mag = sample_magnetization(spec, draws, 4);
  const Eigen::ArrayXd cs = mag.clique_sum.cast<double>().array();
  const Eigen::ArrayXd ts = mag.total_sum.cast<double>().array();
  const double sd = std::sqrt(exact_sq - exact_mean * exact_mean);
  CHECK(std::abs(cs.mean() - exact_mean) <= 4.0 * sd / std::sqrt(double(draws)));
  CHECK(std::abs(cs.square().mean() - exact_sq) <= 0.05);
  CHECK(std::abs(ts.mean() - exact_total) <= 4.0 * 3.0 / std::sqrt(double(draws)));
}

TEST_CASE("magnetization path with fresh discrete fields") {
  // Full model at high temperature: Var(sum / sqrt n) approaches V = 2.
  ModelSpec spec = ModelSpec::planted(2000, {}, 0.5, PointMass{0.0});
  spec.clique.resize(2000);
  for (int i = 0; i < 2000; ++i) spec.clique[i] = i;
  spec.k = 2000;
  const MagnetizationSample mag = sample_magnetization(spec, 20000, 12);
  const Eigen::ArrayXd z = mag.total_sum.cast<double>().array() / std::sqrt(2000.0);
  CHECK(z.square().mean() == doctest::Approx(high_temp_variance(PointMass{0.0}, 0.5)).epsilon(0.05));

  // Two-point field, clique of 60 among 100: compare with the spin path.
  std::vector<int> clique(60);
  for (int i = 0; i < 60; ++i) clique[i] = i;
  const ModelSpec tp = ModelSpec::planted(100, clique, 1.1, TwoPoint{0.5, -0.5, 0.5});
  const MagnetizationSample fast = sample_magnetization(tp, 40000, 1);
  const SpinSample slow = sample(tp, 40000, 2);
  const Eigen::ArrayXd a = fast.clique_sum.cast<double>().array().square();
  const Eigen::ArrayXd b =
      slow.spins.leftCols(60).cast<double>().rowwise().sum().square();
  const double se = std::sqrt((a.square().mean() - a.mean() * a.mean()) / 40000.0 +
                              (b.square().mean() - b.mean() * b.mean()) / 40000.0);
  CHECK(std::abs(a.mean() - b.mean()) <= 4.0 * se);
}
