#include "prfcw/field.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <map>
#include <mutex>
#include <sstream>

namespace prfcw {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::InvalidDistribution, what);
}

bool finite(double v) { return std::isfinite(v); }

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
    s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
    s.remove_suffix(1);
  return s;
}

double parse_number(std::string_view s) {
  s = trim(s);
  double v = 0.0;
  // from_chars rejects a leading '+'
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  require(res.ec == std::errc() && res.ptr == s.data() + s.size(),
          "cannot parse number '" + std::string(s) + "'");
  return v;
}

struct Argument {
  std::string name;  // empty when positional
  double value;
};

std::vector<Argument> parse_arguments(std::string_view body) {
  std::vector<Argument> args;
  if (trim(body).empty()) return args;
  std::size_t start = 0;
  while (start <= body.size()) {
    std::size_t comma = body.find(',', start);
    if (comma == std::string_view::npos) comma = body.size();
    std::string_view item = trim(body.substr(start, comma - start));
    require(!item.empty(), "empty argument in field specification");
    Argument arg;
    if (auto eq = item.find('='); eq != std::string_view::npos) {
      arg.name = std::string(trim(item.substr(0, eq)));
      arg.value = parse_number(item.substr(eq + 1));
    } else {
      arg.value = parse_number(item);
    }
    args.push_back(std::move(arg));
    start = comma + 1;
  }
  return args;
}

// Resolves named/positional arguments against the expected parameter list.
std::vector<double> bind(const std::vector<Argument>& args,
                         const std::vector<std::string>& names,
                         const std::string& family) {
  require(args.size() == names.size(),
          family + " expects " + std::to_string(names.size()) + " arguments");
  std::vector<double> out(names.size());
  std::vector<bool> seen(names.size(), false);
  for (std::size_t i = 0; i < args.size(); ++i) {
    std::size_t slot = i;
    if (!args[i].name.empty()) {
      auto it = std::find(names.begin(), names.end(), args[i].name);
      require(it != names.end(),
              family + " has no parameter '" + args[i].name + "'");
      slot = static_cast<std::size_t>(it - names.begin());
    }
    require(!seen[slot], family + " parameter given twice");
    seen[slot] = true;
    out[slot] = args[i].value;
  }
  return out;
}

}  // namespace

FieldDistribution::FieldDistribution(Law law) : law_(std::move(law)) {
  std::visit(
      [](const auto& l) {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, PointMass>) {
          require(finite(l.a), "point mass location must be finite");
        } else if constexpr (std::is_same_v<T, TwoPoint>) {
          require(finite(l.a) && finite(l.b), "two-point atoms must be finite");
          require(l.p >= 0.0 && l.p <= 1.0, "two-point p must lie in [0,1]");
        } else if constexpr (std::is_same_v<T, Uniform>) {
          require(finite(l.lo) && finite(l.hi) && l.lo <= l.hi,
                  "uniform needs finite lo <= hi");
        } else if constexpr (std::is_same_v<T, Gaussian>) {
          require(finite(l.mean) && finite(l.sd) && l.sd >= 0.0,
                  "gaussian needs finite mean and sd >= 0");
        } else {
          require(!l.values.empty(), "empirical law needs at least one value");
          for (double v : l.values) require(finite(v), "empirical values must be finite");
        }
      },
      law_);
}

bool FieldDistribution::is_symmetric() const {
  return std::visit(
      [](const auto& l) -> bool {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, PointMass>) {
          return l.a == 0.0;
        } else if constexpr (std::is_same_v<T, TwoPoint>) {
          if (l.a == 0.0 && l.b == 0.0) return true;
          if (l.a == l.b) return false;
          return l.p == 0.5 && l.b == -l.a;
        } else if constexpr (std::is_same_v<T, Uniform>) {
          return l.lo == -l.hi;
        } else if constexpr (std::is_same_v<T, Gaussian>) {
          return l.mean == 0.0;
        } else {
          std::vector<double> v = l.values;
          std::sort(v.begin(), v.end());
          for (std::size_t i = 0, j = v.size() - 1; i < v.size(); ++i, --j)
            if (v[i] != -v[j]) return false;
          return true;
        }
      },
      law_);
}

bool FieldDistribution::is_discrete() const {
  return std::holds_alternative<PointMass>(law_) ||
         std::holds_alternative<TwoPoint>(law_) ||
         std::holds_alternative<Empirical>(law_);
}

std::vector<Atom> FieldDistribution::atoms() const {
  std::vector<Atom> raw;
  if (const auto* pm = std::get_if<PointMass>(&law_)) {
    raw.push_back({pm->a, 1.0});
  } else if (const auto* tp = std::get_if<TwoPoint>(&law_)) {
    raw.push_back({tp->a, tp->p});
    raw.push_back({tp->b, 1.0 - tp->p});
  } else if (const auto* emp = std::get_if<Empirical>(&law_)) {
    const double w = 1.0 / static_cast<double>(emp->values.size());
    for (double v : emp->values) raw.push_back({v, w});
  } else {
    throw Error(ErrorCode::InvalidDistribution,
                "atoms() requested for a continuous law");
  }
  std::sort(raw.begin(), raw.end(),
            [](const Atom& x, const Atom& y) { return x.value < y.value; });
  std::vector<Atom> merged;
  for (const Atom& a : raw) {
    if (a.weight == 0.0) continue;
    if (!merged.empty() && merged.back().value == a.value)
      merged.back().weight += a.weight;
    else
      merged.push_back(a);
  }
  return merged;
}

std::string FieldDistribution::to_string() const {
  return std::visit(
      [](const auto& l) -> std::string {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, PointMass>) {
          return "pointmass(a=" + format_double(l.a) + ")";
        } else if constexpr (std::is_same_v<T, TwoPoint>) {
          return "twopoint(a=" + format_double(l.a) + ", b=" + format_double(l.b) +
                 ", p=" + format_double(l.p) + ")";
        } else if constexpr (std::is_same_v<T, Uniform>) {
          return "uniform(lo=" + format_double(l.lo) + ", hi=" + format_double(l.hi) +
                 ")";
        } else if constexpr (std::is_same_v<T, Gaussian>) {
          return "gaussian(mean=" + format_double(l.mean) +
                 ", sd=" + format_double(l.sd) + ")";
        } else {
          std::string out = "empirical(";
          for (std::size_t i = 0; i < l.values.size(); ++i) {
            if (i) out += ", ";
            out += format_double(l.values[i]);
          }
          return out + ")";
        }
      },
      law_);
}

FieldDistribution FieldDistribution::parse(std::string_view text) {
  std::string_view s = trim(text);
  if (auto eq = s.find('='); eq != std::string_view::npos &&
                             trim(s.substr(0, eq)) == "field") {
    s = trim(s.substr(eq + 1));
  }
  const auto open = s.find('(');
  require(open != std::string_view::npos && !s.empty() && s.back() == ')',
          "expected family(args...) but got '" + std::string(text) + "'");
  std::string family(trim(s.substr(0, open)));
  std::transform(family.begin(), family.end(), family.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  const auto args = parse_arguments(s.substr(open + 1, s.size() - open - 2));

  if (family == "pointmass") {
    auto v = bind(args, {"a"}, family);
    return FieldDistribution(PointMass{v[0]});
  }
  if (family == "twopoint") {
    auto v = bind(args, {"a", "b", "p"}, family);
    return FieldDistribution(TwoPoint{v[0], v[1], v[2]});
  }
  if (family == "uniform") {
    auto v = bind(args, {"lo", "hi"}, family);
    return FieldDistribution(Uniform{v[0], v[1]});
  }
  if (family == "gaussian") {
    auto v = bind(args, {"mean", "sd"}, family);
    return FieldDistribution(Gaussian{v[0], v[1]});
  }
  if (family == "empirical") {
    Empirical emp;
    for (const auto& a : args) {
      require(a.name.empty(), "empirical values are positional");
      emp.values.push_back(a.value);
    }
    return FieldDistribution(std::move(emp));
  }
  throw Error(ErrorCode::InvalidDistribution, "unknown field family '" + family + "'");
}

bool operator==(const FieldDistribution& lhs, const FieldDistribution& rhs) {
  if (lhs.law_.index() != rhs.law_.index()) return false;
  return lhs.to_string() == rhs.to_string();
}

namespace detail {

namespace {
template <typename Build>
const QuadratureRule<double>& cached_rule(std::map<Eigen::Index, QuadratureRule<double>>& cache,
                                          std::mutex& mutex, Eigen::Index n, Build build) {
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, build(n)).first;
  return it->second;
}
}  // namespace

const QuadratureRule<double>& cached_gauss_legendre(Eigen::Index n) {
  static std::map<Eigen::Index, QuadratureRule<double>> cache;
  static std::mutex mutex;
  return cached_rule(cache, mutex, n, [](Eigen::Index k) { return gauss_legendre<double>(k); });
}

const QuadratureRule<double>& cached_gauss_hermite(Eigen::Index n) {
  static std::map<Eigen::Index, QuadratureRule<double>> cache;
  static std::mutex mutex;
  return cached_rule(cache, mutex, n, [](Eigen::Index k) { return gauss_hermite<double>(k); });
}

void throw_quadrature_failure(const FieldDistribution& dist) {
  throw Error(ErrorCode::NonFiniteMoment,
              "quadrature did not converge within " + std::to_string(kMaxNodeCount) +
                  " nodes for " + dist.to_string());
}

}  // namespace detail

double field_functional(const FieldDistribution& dist, Functional kind, double x,
                        double theta1) {
  if (kind == Functional::LogCoshAt || kind == Functional::TanhAt ||
      kind == Functional::Sech2At) {
    if (!std::isfinite(x) || !std::isfinite(theta1) || theta1 < 0.0)
      throw Error(ErrorCode::InvalidDistribution,
                  "shifted functional needs finite x and theta1 >= 0");
  }
  const double shift = std::sqrt(theta1) * x;
  switch (kind) {
    case Functional::Sech2:
      return expectation(dist, [](double h) { return sech2(h); });
    case Functional::Tanh:
      return expectation(dist, [](double h) { return std::tanh(h); });
    case Functional::Tanh2:
      return expectation(dist, [](double h) {
        const double t = std::tanh(h);
        return t * t;
      });
    case Functional::Sech4:
      return expectation(dist, [](double h) {
        const double s = sech2(h);
        return s * s;
      });
    case Functional::Sech2Tanh2:
      return expectation(dist, [](double h) {
        const double t = std::tanh(h);
        return (1.0 - t * t) * t * t;
      });
    case Functional::LogCoshAt:
      return expectation(dist, [shift](double h) { return log_cosh(shift + h); });
    case Functional::TanhAt:
      return expectation(dist, [shift](double h) { return std::tanh(shift + h); });
    case Functional::Sech2At:
      return expectation(dist, [shift](double h) { return sech2(shift + h); });
  }
  return 0.0;
}

MomentSet moments(const FieldDistribution& dist) {
  MomentSet m;
  m.sech2_mean = field_functional(dist, Functional::Sech2);
  m.tanh_mean = field_functional(dist, Functional::Tanh);
  const double tanh2 = field_functional(dist, Functional::Tanh2);
  m.tanh_var = std::max(0.0, tanh2 - m.tanh_mean * m.tanh_mean);
  m.sech4_mean = field_functional(dist, Functional::Sech4);
  m.sech2tanh2_mean = field_functional(dist, Functional::Sech2Tanh2);
  return m;
}

Eigen::VectorXd sample_field(const FieldDistribution& dist, Eigen::Index n, Rng& rng) {
  if (n < 1) throw Error(ErrorCode::InvalidDistribution, "sample_field needs n >= 1");
  Eigen::VectorXd out(n);
  std::visit(
      [&](const auto& l) {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, PointMass>) {
          out.setConstant(l.a);
        } else if constexpr (std::is_same_v<T, TwoPoint>) {
          for (Eigen::Index i = 0; i < n; ++i) out(i) = uniform01(rng) < l.p ? l.a : l.b;
        } else if constexpr (std::is_same_v<T, Uniform>) {
          for (Eigen::Index i = 0; i < n; ++i)
            out(i) = l.lo + (l.hi - l.lo) * uniform01(rng);
        } else if constexpr (std::is_same_v<T, Gaussian>) {
          std::normal_distribution<double> normal(l.mean, l.sd);
          for (Eigen::Index i = 0; i < n; ++i) out(i) = normal(rng);
        } else {
          const auto size = static_cast<double>(l.values.size());
          for (Eigen::Index i = 0; i < n; ++i) {
            auto idx = static_cast<std::size_t>(uniform01(rng) * size);
            out(i) = l.values[std::min(idx, l.values.size() - 1)];
          }
        }
      },
      dist.law());
  return out;
}

}  // namespace prfcw
