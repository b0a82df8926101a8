#include "prfcw/sampler.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <random>

#include "prfcw/error.hpp"
#include "prfcw/format.hpp"
#include "prfcw/parallel.hpp"

namespace prfcw {

namespace {

constexpr std::uint64_t kQuenchedStream = std::numeric_limits<std::uint64_t>::max();
constexpr std::array<char, 6> kMagic = {'P', 'R', 'F', 'C', 'W', '1'};

using Groups = std::vector<std::pair<double, int>>;

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline double logistic2(double t) { return 1.0 / (1.0 + std::exp(-2.0 * t)); }

Groups group_values(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  Groups groups;
  for (double v : values) {
    if (!groups.empty() && groups.back().first == v)
      ++groups.back().second;
    else
      groups.emplace_back(v, 1);
  }
  return groups;
}

double coupling_of(const ModelSpec& spec) {
  return spec.is_null() ? 0.0 : std::sqrt(spec.theta1 / spec.k);
}

Eigen::VectorXd quenched_realization(const ModelSpec& spec, std::uint64_t seed) {
  if (spec.realization) return *spec.realization;
  Rng rng(derive_seed(seed, kQuenchedStream));
  return sample_field(spec.field, spec.n, rng);
}

std::vector<char> clique_mask(const ModelSpec& spec) {
  std::vector<char> mask(spec.n, 0);
  for (int i : spec.clique) mask[i] = 1;
  return mask;
}

// Multinomial counts of `total` draws over atom weights, by sequential binomials.
std::vector<std::int64_t> multinomial(std::int64_t total, const std::vector<Atom>& atoms,
                                      Rng& rng) {
  std::vector<std::int64_t> counts(atoms.size(), 0);
  double remaining_mass = 1.0;
  for (std::size_t j = 0; j < atoms.size() && total > 0; ++j) {
    if (j + 1 == atoms.size()) {
      counts[j] = total;
      break;
    }
    const double p = std::clamp(atoms[j].weight / remaining_mass, 0.0, 1.0);
    counts[j] = std::binomial_distribution<std::int64_t>(total, p)(rng);
    total -= counts[j];
    remaining_mass -= atoms[j].weight;
  }
  return counts;
}

std::int64_t binomial_spin_sum(std::int64_t count, double p, Rng& rng) {
  if (count == 0) return 0;
  const std::int64_t up = std::binomial_distribution<std::int64_t>(count, p)(rng);
  return 2 * up - count;
}

// Lazily built grids, keyed by the clique field configuration.
class GridCache {
 public:
  explicit GridCache(double coupling) : coupling_(coupling) {}

  const AuxiliaryGrid& get(const Groups& groups) {
    if (groups.size() > kMaxCachedGroups) {
      scratch_.emplace(groups, coupling_);
      return *scratch_;
    }
    auto it = cache_.find(groups);
    if (it == cache_.end()) it = cache_.emplace(groups, AuxiliaryGrid(groups, coupling_)).first;
    return it->second;
  }

 private:
  static constexpr std::size_t kMaxCachedGroups = 32;
  double coupling_;
  std::map<Groups, AuxiliaryGrid> cache_;
  std::optional<AuxiliaryGrid> scratch_;
};

}  // namespace

void ModelSpec::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidSpec, what); };
  if (n < 1) fail("n must be positive");
  if (!std::isfinite(theta1) || theta1 < 0.0) fail("theta1 must be finite and >= 0");
  if (!clique.empty()) {
    if (k != static_cast<int>(clique.size())) fail("k must equal the clique size");
    for (std::size_t i = 0; i < clique.size(); ++i) {
      if (clique[i] < 0 || clique[i] >= n) fail("clique index out of range");
      if (i > 0 && clique[i] <= clique[i - 1]) fail("clique must be sorted and distinct");
    }
  } else if (k < 0 || k > n) {
    fail("k must lie in [0, n]");
  }
  if (realization) {
    if (realization->size() != n) fail("field realization must have n entries");
    if (!realization->allFinite()) fail("field realization must be finite");
  }
}

std::string ModelSpec::canonical_text() const {
  std::string text = "n=" + std::to_string(n) + ";k=" + std::to_string(k) +
                     ";theta1=" + format_number(theta1) + ";field=" + field.to_string() + ";clique=";
  for (std::size_t i = 0; i < clique.size(); ++i) {
    if (i) text += ',';
    text += std::to_string(clique[i]);
  }
  text += field_mode == FieldMode::FreshPerObservation ? ";mode=fresh" : ";mode=quenched";
  if (realization) {
    text += ";realization=";
    for (Eigen::Index i = 0; i < realization->size(); ++i) {
      if (i) text += ',';
      text += format_number((*realization)(i));
    }
  }
  return text;
}

std::uint64_t ModelSpec::digest() const { return fnv1a(canonical_text()); }

ModelSpec ModelSpec::null_model(int n, FieldDistribution field) {
  ModelSpec spec;
  spec.n = n;
  spec.field = std::move(field);
  return spec;
}

ModelSpec ModelSpec::planted(int n, std::vector<int> clique, double theta1,
                             FieldDistribution field) {
  ModelSpec spec;
  spec.n = n;
  spec.k = static_cast<int>(clique.size());
  spec.clique = std::move(clique);
  spec.theta1 = theta1;
  spec.field = std::move(field);
  return spec;
}

AuxiliaryGrid::AuxiliaryGrid(const Groups& groups, double coupling)
    : groups_(groups), coupling_(coupling) {
  try {
    build(kAuxLogWindow);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::GridUnderflow) throw;
    build(2.0 * kAuxLogWindow);
  }
}

double AuxiliaryGrid::log_density(double x) const {
  double g = -0.5 * x * x;
  for (const auto& [value, count] : groups_) g += count * log_cosh(coupling_ * x + value);
  return g;
}

void AuxiliaryGrid::build(double window) {
  // The density is a mixture of N(coupling * M, 1) over |M| <= k.
  double total_count = 0.0;
  for (const auto& group : groups_) total_count += group.second;
  const double reach = coupling_ * total_count + std::sqrt(2.0 * window) + 1.0;

  struct Piece {
    double lo, hi;
  };
  std::vector<Piece> pieces = {{-reach, reach}};
  double gmax = -std::numeric_limits<double>::infinity();
  double excluded = 0.0;  // Riemann estimate of dropped mass, in units of exp(gmax)
  constexpr int kMaxZoom = 8;
  constexpr Eigen::Index kResolvedRun = 32;

  for (int zoom = 0; zoom < kMaxZoom; ++zoom) {
    std::vector<Eigen::ArrayXd> xs, gs;
    for (const Piece& piece : pieces) {
      Eigen::ArrayXd x = Eigen::ArrayXd::LinSpaced(kAuxCoarseNodes, piece.lo, piece.hi);
      Eigen::ArrayXd g = x.unaryExpr([this](double v) { return log_density(v); });
      const double local = g.maxCoeff();
      if (local > gmax) {
        excluded *= std::exp(gmax - local);
        gmax = local;
      }
      xs.push_back(std::move(x));
      gs.push_back(std::move(g));
    }
    std::vector<Piece> next;
    bool resolved = true;
    for (std::size_t p = 0; p < pieces.size(); ++p) {
      const Eigen::ArrayXd& x = xs[p];
      const Eigen::ArrayXd& g = gs[p];
      const double step = x(1) - x(0);
      Eigen::Index i = 0;
      while (i < x.size()) {
        if (g(i) < gmax - window) {
          excluded += std::exp(g(i) - gmax) * step;
          ++i;
          continue;
        }
        Eigen::Index j = i;
        while (j + 1 < x.size() && g(j + 1) >= gmax - window) ++j;
        if (j - i + 1 < kResolvedRun) resolved = false;
        next.push_back({x(std::max<Eigen::Index>(i - 1, 0)),
                        x(std::min<Eigen::Index>(j + 1, x.size() - 1))});
        i = j + 1;
      }
    }
    std::sort(next.begin(), next.end(), [](const Piece& a, const Piece& b) { return a.lo < b.lo; });
    pieces.clear();
    for (const Piece& piece : next) {
      if (!pieces.empty() && piece.lo <= pieces.back().hi)
        pieces.back().hi = std::max(pieces.back().hi, piece.hi);
      else
        pieces.push_back(piece);
    }
    if (resolved) break;
  }

  double span = 0.0;
  for (const Piece& piece : pieces) span += piece.hi - piece.lo;
  std::vector<double> node_list;
  breaks_.clear();
  for (const Piece& piece : pieces) {
    const auto count = std::max<Eigen::Index>(
        64, static_cast<Eigen::Index>(kAuxFineNodes * (piece.hi - piece.lo) / span));
    breaks_.push_back(static_cast<Eigen::Index>(node_list.size()));
    const Eigen::ArrayXd x = Eigen::ArrayXd::LinSpaced(count, piece.lo, piece.hi);
    node_list.insert(node_list.end(), x.begin(), x.end());
  }
  nodes_ = Eigen::Map<const Eigen::ArrayXd>(node_list.data(),
                                            static_cast<Eigen::Index>(node_list.size()));
  const Eigen::ArrayXd g = nodes_.unaryExpr([this](double v) { return log_density(v); });
  const double top = std::max(gmax, g.maxCoeff());
  const Eigen::ArrayXd w = (g - top).exp();
  excluded *= std::exp(gmax - top);

  cdf_.resize(nodes_.size());
  cdf_(0) = 0.0;
  std::size_t piece = 1;
  for (Eigen::Index i = 1; i < nodes_.size(); ++i) {
    const bool starts_piece = piece < breaks_.size() && breaks_[piece] == i;
    if (starts_piece) {
      ++piece;
      cdf_(i) = cdf_(i - 1);
    } else {
      cdf_(i) = cdf_(i - 1) + 0.5 * (w(i) + w(i - 1)) * (nodes_(i) - nodes_(i - 1));
    }
  }
  // Piece endpoints lie outside the window, so their density also bounds the
  // mass lost at the edges.
  double edge = 0.0;
  for (std::size_t p = 0; p < breaks_.size(); ++p) {
    const Eigen::Index first = breaks_[p];
    const Eigen::Index last =
        (p + 1 < breaks_.size() ? breaks_[p + 1] : nodes_.size()) - 1;
    edge += w(first) + w(last);
  }
  const double total = cdf_(cdf_.size() - 1);
  if (!(total > 0.0) || (excluded + edge) / total > kAuxTailTolerance)
    throw Error(ErrorCode::GridUnderflow, "auxiliary density mass escapes the grid");
}

double AuxiliaryGrid::draw(Rng& rng) const {
  const double target = uniform01(rng) * cdf_(cdf_.size() - 1);
  const auto* begin = cdf_.data();
  const auto* end = begin + cdf_.size();
  auto idx = static_cast<Eigen::Index>(std::upper_bound(begin, end, target) - begin);
  idx = std::clamp<Eigen::Index>(idx, 1, cdf_.size() - 1);
  const double lo = cdf_(idx - 1), hi = cdf_(idx);
  const double frac = hi > lo ? (target - lo) / (hi - lo) : 0.5;
  return nodes_(idx - 1) + frac * (nodes_(idx) - nodes_(idx - 1));
}

SpinSample sample(const ModelSpec& spec, Eigen::Index m, std::uint64_t seed,
                  const SampleOptions& options) {
  spec.validate();
  if (m < 1) throw Error(ErrorCode::InvalidSpec, "m must be positive");
  const int n = spec.n;
  const bool quenched = spec.field_mode == FieldMode::QuenchedSharedRealization;
  const double coupling = coupling_of(spec);
  const std::vector<char> in_clique = clique_mask(spec);

  SpinSample out;
  out.spins.resize(m, n);
  out.seed = seed;
  out.spec_digest = spec.digest();
  if (options.record_aux) out.aux = Eigen::VectorXd::Zero(m);

  Eigen::VectorXd fixed_field;
  std::optional<AuxiliaryGrid> fixed_grid;
  if (quenched) {
    fixed_field = quenched_realization(spec, seed);
    if (!spec.is_null()) {
      std::vector<double> values;
      for (int i : spec.clique) values.push_back(fixed_field(i));
      fixed_grid.emplace(group_values(values), coupling);
    }
  }

  const Eigen::Index blocks = (m + kObservationBlock - 1) / kObservationBlock;
  parallel_for(blocks, [&](std::int64_t b) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(b)));
    GridCache cache(coupling);
    Eigen::VectorXd h;
    std::vector<double> clique_values(spec.clique.size());
    const Eigen::Index first = b * kObservationBlock;
    const Eigen::Index last = std::min(m, first + kObservationBlock);
    for (Eigen::Index row = first; row < last; ++row) {
      h = quenched ? fixed_field : sample_field(spec.field, n, rng);
      double x = 0.0;
      if (!spec.is_null()) {
        if (quenched) {
          x = fixed_grid->draw(rng);
        } else {
          for (std::size_t j = 0; j < spec.clique.size(); ++j) clique_values[j] = h(spec.clique[j]);
          x = cache.get(group_values(clique_values)).draw(rng);
        }
      }
      if (options.record_aux) out.aux(row) = x;
      const double shift = coupling * x;
      for (int i = 0; i < n; ++i) {
        const double p = logistic2(in_clique[i] ? shift + h(i) : h(i));
        out.spins(row, i) = uniform01(rng) < p ? 1 : -1;
      }
    }
  });
  return out;
}

SpinSample sample(const ModelSpec& spec, Eigen::Index m, Rng& rng,
                  const SampleOptions& options) {
  return sample(spec, m, rng(), options);
}

MagnetizationSample sample_magnetization(const ModelSpec& spec, Eigen::Index m,
                                         std::uint64_t seed, const SampleOptions& options) {
  spec.validate();
  if (m < 1) throw Error(ErrorCode::InvalidSpec, "m must be positive");
  const bool quenched = spec.field_mode == FieldMode::QuenchedSharedRealization;
  const double coupling = coupling_of(spec);
  const auto k = static_cast<std::int64_t>(spec.clique.size());
  const std::int64_t outside = spec.n - k;
  const bool discrete = spec.field.is_discrete();
  const std::vector<Atom> atoms = discrete ? spec.field.atoms() : std::vector<Atom>{};

  MagnetizationSample out;
  out.seed = seed;
  out.clique_sum.resize(m);
  out.total_sum.resize(m);
  if (options.record_aux) out.aux = Eigen::VectorXd::Zero(m);

  Groups fixed_in, fixed_out;
  if (quenched) {
    const Eigen::VectorXd h = quenched_realization(spec, seed);
    const std::vector<char> mask = clique_mask(spec);
    std::vector<double> in, rest;
    for (int i = 0; i < spec.n; ++i) (mask[i] ? in : rest).push_back(h(i));
    fixed_in = group_values(in);
    fixed_out = group_values(rest);
  }

  auto counts_to_groups = [&](const std::vector<std::int64_t>& counts) {
    Groups groups;
    for (std::size_t j = 0; j < counts.size(); ++j)
      if (counts[j] > 0) groups.emplace_back(atoms[j].value, static_cast<int>(counts[j]));
    return groups;
  };

  const Eigen::Index blocks = (m + kObservationBlock - 1) / kObservationBlock;
  parallel_for(blocks, [&](std::int64_t b) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(b)));
    GridCache cache(coupling);
    const Eigen::Index first = b * kObservationBlock;
    const Eigen::Index last = std::min(m, first + kObservationBlock);
    for (Eigen::Index row = first; row < last; ++row) {
      Groups in, rest;
      if (quenched) {
        in = fixed_in;
        rest = fixed_out;
      } else if (discrete) {
        in = counts_to_groups(multinomial(k, atoms, rng));
        rest = counts_to_groups(multinomial(outside, atoms, rng));
      } else {
        const Eigen::VectorXd hin = sample_field(spec.field, k, rng);
        const Eigen::VectorXd hout = sample_field(spec.field, outside, rng);
        in = group_values({hin.data(), hin.data() + hin.size()});
        rest = group_values({hout.data(), hout.data() + hout.size()});
      }
      double x = 0.0;
      if (k > 0) x = cache.get(in).draw(rng);
      if (options.record_aux) out.aux(row) = x;
      std::int64_t clique_sum = 0, rest_sum = 0;
      for (const auto& [value, count] : in)
        clique_sum += binomial_spin_sum(count, logistic2(coupling * x + value), rng);
      for (const auto& [value, count] : rest)
        rest_sum += binomial_spin_sum(count, logistic2(value), rng);
      out.clique_sum(row) = clique_sum;
      out.total_sum(row) = clique_sum + rest_sum;
    }
  });
  return out;
}

Eigen::VectorXd enumerate_distribution(const ModelSpec& spec,
                                       const Eigen::VectorXd& field_realization) {
  spec.validate();
  if (spec.n > 20) throw Error(ErrorCode::TooLarge, "enumeration is limited to n <= 20");
  if (field_realization.size() != spec.n)
    throw Error(ErrorCode::InvalidSpec, "field realization must have n entries");
  const int n = spec.n;
  const std::vector<char> in_clique = clique_mask(spec);
  const double scale = spec.is_null() ? 0.0 : spec.theta1 / (2.0 * spec.k);
  const Eigen::Index states = Eigen::Index{1} << n;
  Eigen::VectorXd logw(states);
  for (Eigen::Index s = 0; s < states; ++s) {
    double field_term = 0.0;
    int clique_sum = 0;
    for (int i = 0; i < n; ++i) {
      const int sigma = (s >> i) & 1 ? 1 : -1;
      field_term += field_realization(i) * sigma;
      if (in_clique[i]) clique_sum += sigma;
    }
    logw(s) = scale * clique_sum * clique_sum + field_term;
  }
  const double top = logw.maxCoeff();
  Eigen::VectorXd p = (logw.array() - top).exp().matrix();
  return p / p.sum();
}

double log_auxiliary_density(const ModelSpec& spec, const Eigen::VectorXd& field_realization,
                             double x) {
  const double coupling = coupling_of(spec);
  double g = -0.5 * x * x;
  for (int i : spec.clique) g += log_cosh(coupling * x + field_realization(i));
  return g;
}

double auxiliary_density(const ModelSpec& spec, const Eigen::VectorXd& field_realization,
                         double x) {
  return std::exp(log_auxiliary_density(spec, field_realization, x));
}

namespace {

void put_u64(std::ostream& out, std::uint64_t v) {
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(bytes, 8);
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char bytes[8];
  if (!in.read(reinterpret_cast<char*>(bytes), 8))
    throw Error(ErrorCode::IoError, "truncated sample header");
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | bytes[i];
  return v;
}

}  // namespace

void write_binary(const SpinSample& sample, std::ostream& out) {
  out.write(kMagic.data(), kMagic.size());
  put_u64(out, static_cast<std::uint64_t>(sample.n()));
  put_u64(out, static_cast<std::uint64_t>(sample.m()));
  put_u64(out, sample.seed);
  put_u64(out, sample.spec_digest);
  const std::size_t bits = static_cast<std::size_t>(sample.m() * sample.n());
  std::vector<char> packed((bits + 7) / 8, 0);
  const std::int8_t* data = sample.spins.data();
  for (std::size_t t = 0; t < bits; ++t)
    if (data[t] > 0) packed[t / 8] = static_cast<char>(packed[t / 8] | (1 << (t % 8)));
  out.write(packed.data(), static_cast<std::streamsize>(packed.size()));
  if (!out) throw Error(ErrorCode::IoError, "failed to write sample");
}

SpinSample read_binary(std::istream& in) {
  std::array<char, 6> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic)
    throw Error(ErrorCode::IoError, "not a PRFCW1 sample file");
  const std::uint64_t n = get_u64(in);
  const std::uint64_t m = get_u64(in);
  SpinSample sample;
  sample.seed = get_u64(in);
  sample.spec_digest = get_u64(in);
  constexpr std::uint64_t kMaxEntries = std::uint64_t{1} << 40;
  if (n == 0 || m == 0 || n > kMaxEntries / m)
    throw Error(ErrorCode::IoError, "implausible sample dimensions");
  sample.spins.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
  const std::size_t bits = static_cast<std::size_t>(m * n);
  std::vector<char> packed((bits + 7) / 8);
  if (!in.read(packed.data(), static_cast<std::streamsize>(packed.size())))
    throw Error(ErrorCode::IoError, "truncated sample body");
  std::int8_t* data = sample.spins.data();
  for (std::size_t t = 0; t < bits; ++t) data[t] = (packed[t / 8] >> (t % 8)) & 1 ? 1 : -1;
  return sample;
}

void write_csv(const SpinSample& sample, std::ostream& out) {
  for (Eigen::Index r = 0; r < sample.m(); ++r) {
    for (Eigen::Index c = 0; c < sample.n(); ++c) {
      if (c) out << ',';
      out << static_cast<int>(sample.spins(r, c));
    }
    out << '\n';
  }
  if (!out) throw Error(ErrorCode::IoError, "failed to write csv");
}

}  // namespace prfcw
