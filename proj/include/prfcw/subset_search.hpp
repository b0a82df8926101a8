#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "prfcw/sampler.hpp"

namespace prfcw {

// Largest C(n, k) enumerated outright by the absolute-mean scan.
inline constexpr double kScanGate = 1e6;
inline constexpr std::int64_t kDefaultNodeBudget = 20'000'000;

/// C(n, k) as a double (inf on overflow).
double binomial_coefficient(int n, int k);

struct SubsetResult {
  std::vector<int> subset;  // sorted
  double value = 0.0;
  bool exact = false;
  std::int64_t nodes = 0;
};

/// Indices of the k largest scores, sorted; ties go to the lower index.
std::vector<int> top_k(const Eigen::VectorXd& scores, int k);

/// sum_{i<j in S} a(i, j) for symmetric a.
double pair_sum(const Eigen::MatrixXd& a, const std::vector<int>& subset);

/// Local-search maximiser of pair_sum over k-subsets: row-sum and spectral
/// starts improved by best-swap moves.
SubsetResult max_pair_sum_heuristic(const Eigen::MatrixXd& a, int k);

/// Exact maximiser of pair_sum over k-subsets by branch and bound; ties go to
/// the lexicographically smallest subset. When the node budget runs out the
/// best subset found is returned with exact = false.
SubsetResult max_pair_sum(const Eigen::MatrixXd& a, int k,
                          std::int64_t node_budget = kDefaultNodeBudget);

/// sum_j |sum_{i in S} spins(j, i)| maximised over k-subsets: exhaustive when
/// C(n, k) <= kScanGate, alternating sign maximisation otherwise.
SubsetResult max_abs_sum(const SpinMatrix& spins, int k);

}  // namespace prfcw
