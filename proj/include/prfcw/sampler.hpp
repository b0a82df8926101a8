#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "prfcw/field.hpp"
#include "prfcw/rng.hpp"

namespace prfcw {

enum class FieldMode { FreshPerObservation, QuenchedSharedRealization };

/// One hypothesis. Indices are 0-based. An empty clique is the null model.
struct ModelSpec {
  int n = 1;
  int k = 0;
  double theta1 = 0.0;
  FieldDistribution field;
  std::vector<int> clique;
  FieldMode field_mode = FieldMode::FreshPerObservation;
  // Quenched mode only; drawn once per call when absent.
  std::optional<Eigen::VectorXd> realization;

  bool is_null() const { return clique.empty(); }
  /// Throws InvalidSpec.
  void validate() const;
  /// Stable text form hashed into spec_digest.
  std::string canonical_text() const;
  std::uint64_t digest() const;

  static ModelSpec null_model(int n, FieldDistribution field);
  static ModelSpec planted(int n, std::vector<int> clique, double theta1,
                           FieldDistribution field);
};

using SpinMatrix =
    Eigen::Array<std::int8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct SpinSample {
  SpinMatrix spins;  // m x n, entries +-1
  std::uint64_t seed = 0;
  std::uint64_t spec_digest = 0;
  Eigen::VectorXd aux;  // auxiliary draws, filled in debug mode only

  Eigen::Index m() const { return spins.rows(); }
  Eigen::Index n() const { return spins.cols(); }
};

struct SampleOptions {
  bool record_aux = false;
};

// Observations per random sub-stream.
inline constexpr Eigen::Index kObservationBlock = 256;

/// m i.i.d. observations. Observation block b uses the stream
/// derive_seed(seed, b), so the result does not depend on the thread count.
SpinSample sample(const ModelSpec& spec, Eigen::Index m, std::uint64_t seed,
                  const SampleOptions& options = {});
SpinSample sample(const ModelSpec& spec, Eigen::Index m, Rng& rng,
                  const SampleOptions& options = {});

/// Per-observation sums without materialising spins: clique_sum over the
/// clique (zero under the null), total_sum over all n spins.
struct MagnetizationSample {
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1> clique_sum;
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1> total_sum;
  Eigen::VectorXd aux;
  std::uint64_t seed = 0;
};

MagnetizationSample sample_magnetization(const ModelSpec& spec, Eigen::Index m,
                                         std::uint64_t seed,
                                         const SampleOptions& options = {});

/// Exact Gibbs probabilities; entry s has spin i = +1 iff bit i of s is set.
/// Throws TooLarge for n > 20.
Eigen::VectorXd enumerate_distribution(const ModelSpec& spec,
                                       const Eigen::VectorXd& field_realization);

double log_auxiliary_density(const ModelSpec& spec,
                             const Eigen::VectorXd& field_realization, double x);
/// exp(-x^2/2 + sum_{i in clique} log cosh(sqrt(theta1/k) x + h_i)).
double auxiliary_density(const ModelSpec& spec,
                         const Eigen::VectorXd& field_realization, double x);

/**
 * Inverse-CDF sampler for the auxiliary density of one clique field
 * configuration, given as (value, multiplicity) groups. The support is found
 * by a coarse scan, then covered by a fine grid over the region where the log
 * density is within kAuxLogWindow of its maximum.
 */
class AuxiliaryGrid {
 public:
  AuxiliaryGrid(const std::vector<std::pair<double, int>>& groups, double coupling);

  double draw(Rng& rng) const;
  double log_density(double x) const;
  const Eigen::ArrayXd& nodes() const { return nodes_; }

 private:
  void build(double window);

  std::vector<std::pair<double, int>> groups_;
  double coupling_;
  Eigen::ArrayXd nodes_;
  Eigen::ArrayXd cdf_;  // unnormalised, cdf_(0) = 0
  std::vector<Eigen::Index> breaks_;  // first node of each disjoint piece
};

inline constexpr Eigen::Index kAuxCoarseNodes = 512;
inline constexpr Eigen::Index kAuxFineNodes = 4096;
// 72 = 12^2 / 2: the +-12 sd window of a Gaussian lobe.
inline constexpr double kAuxLogWindow = 72.0;
inline constexpr double kAuxTailTolerance = 1e-12;

void write_binary(const SpinSample& sample, std::ostream& out);
SpinSample read_binary(std::istream& in);
void write_csv(const SpinSample& sample, std::ostream& out);

}  // namespace prfcw
