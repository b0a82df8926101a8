#include "prfcw/subset_search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "prfcw/eigen_power.hpp"

namespace prfcw {

namespace {

// Flat prefix tables for the bound use n * n * k doubles; beyond this the
// search falls back to the heuristic.
constexpr double kMaxBoundTable = 4e7;

Eigen::MatrixXd off_diagonal(const Eigen::MatrixXd& a) {
  Eigen::MatrixXd off = a;
  off.diagonal().setZero();
  return off;
}

bool better(double value, const std::vector<int>& subset, double best,
            const std::vector<int>& best_subset) {
  const double tol = 1e-12 * std::max(1.0, std::abs(best));
  if (value > best + tol) return true;
  if (value < best - tol) return false;
  return best_subset.empty() || subset < best_subset;
}

std::vector<int> all_indices(int n) {
  std::vector<int> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

std::vector<int> swap_search(const Eigen::MatrixXd& off, std::vector<int> subset) {
  const auto n = static_cast<int>(off.rows());
  std::vector<char> in(n, 0);
  for (int i : subset) in[i] = 1;
  Eigen::VectorXd link = Eigen::VectorXd::Zero(n);
  for (int i : subset) link += off.col(i);
  constexpr int kMaxSwaps = 10000;
  for (int step = 0; step < kMaxSwaps; ++step) {
    double best_gain = 0.0;
    int out_pos = -1, add = -1;
    const double tol = 1e-12 * std::max(1.0, link.cwiseAbs().maxCoeff());
    for (std::size_t p = 0; p < subset.size(); ++p) {
      const int i = subset[p];
      for (int j = 0; j < n; ++j) {
        if (in[j]) continue;
        const double gain = link(j) - off(j, i) - link(i);
        if (gain > best_gain + tol) {
          best_gain = gain;
          out_pos = static_cast<int>(p);
          add = j;
        }
      }
    }
    if (add < 0) break;
    const int drop = subset[out_pos];
    in[drop] = 0;
    in[add] = 1;
    subset[out_pos] = add;
    link += off.col(add) - off.col(drop);
  }
  std::sort(subset.begin(), subset.end());
  return subset;
}

}  // namespace

double binomial_coefficient(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  double c = 1.0;
  for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
  return std::round(c);
}

std::vector<int> top_k(const Eigen::VectorXd& scores, int k) {
  std::vector<int> idx = all_indices(static_cast<int>(scores.size()));
  k = std::clamp(k, 0, static_cast<int>(idx.size()));
  std::partial_sort(idx.begin(), idx.begin() + k, idx.end(), [&](int a, int b) {
    return scores(a) > scores(b) || (scores(a) == scores(b) && a < b);
  });
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

double pair_sum(const Eigen::MatrixXd& a, const std::vector<int>& subset) {
  double total = 0.0;
  for (std::size_t p = 0; p < subset.size(); ++p)
    for (std::size_t q = p + 1; q < subset.size(); ++q) total += a(subset[p], subset[q]);
  return total;
}

SubsetResult max_pair_sum_heuristic(const Eigen::MatrixXd& a, int k) {
  const auto n = static_cast<int>(a.rows());
  SubsetResult result;
  if (k >= n) {
    result.subset = all_indices(n);
    result.value = pair_sum(a, result.subset);
    result.exact = true;
    return result;
  }
  if (k <= 0) {
    result.exact = true;
    return result;
  }
  const Eigen::MatrixXd off = off_diagonal(a);
  std::vector<std::vector<int>> starts;
  starts.push_back(top_k(off.rowwise().sum(), k));
  try {
    const auto pair = largest_eigenpair(off, 1e-8, 5000);
    starts.push_back(top_k(pair.vector.cwiseAbs(), k));
  } catch (const Error&) {
  }
  {
    Eigen::Index bi = 0, bj = 1;
    double best = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (off(i, j) > best) {
          best = off(i, j);
          bi = i;
          bj = j;
        }
    std::vector<int> greedy = {static_cast<int>(bi)};
    if (k > 1) greedy.push_back(static_cast<int>(bj));
    Eigen::VectorXd link = off.col(bi);
    if (k > 1) link += off.col(bj);
    std::vector<char> in(n, 0);
    for (int i : greedy) in[i] = 1;
    while (static_cast<int>(greedy.size()) < k) {
      int pick = -1;
      for (int j = 0; j < n; ++j)
        if (!in[j] && (pick < 0 || link(j) > link(pick))) pick = j;
      greedy.push_back(pick);
      in[pick] = 1;
      link += off.col(pick);
    }
    starts.push_back(greedy);
  }
  result.value = -std::numeric_limits<double>::infinity();
  for (const auto& start : starts) {
    std::vector<int> s = swap_search(off, start);
    const double v = pair_sum(a, s);
    if (better(v, s, result.value, result.subset)) {
      result.value = v;
      result.subset = std::move(s);
    }
  }
  return result;
}

SubsetResult max_pair_sum(const Eigen::MatrixXd& a, int k, std::int64_t node_budget) {
  const auto n = static_cast<int>(a.rows());
  SubsetResult incumbent = max_pair_sum_heuristic(a, k);
  if (incumbent.exact) return incumbent;
  if (static_cast<double>(n) * n * k > kMaxBoundTable) return incumbent;

  const Eigen::MatrixXd off = off_diagonal(a);
  std::vector<int> order = all_indices(n);
  const Eigen::VectorXd rows = off.rowwise().sum();
  std::sort(order.begin(), order.end(),
            [&](int x, int y) { return rows(x) > rows(y) || (rows(x) == rows(y) && x < y); });
  Eigen::MatrixXd b(n, n);
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q) b(p, q) = off(order[p], order[q]);

  // tops[(p * n + j) * k + q]: sum of the q largest b(j, l) over l >= p, l != j.
  std::vector<double> tops(static_cast<std::size_t>(n) * n * k, 0.0);
  std::vector<double> kept;
  for (int j = 0; j < n; ++j) {
    kept.clear();
    for (int p = n - 1; p >= 0; --p) {
      if (p != j) {
        const double v = b(j, p);
        auto it = std::lower_bound(kept.begin(), kept.end(), v, std::greater<double>());
        kept.insert(it, v);
        if (static_cast<int>(kept.size()) > k) kept.pop_back();
      }
      if (p > j) continue;
      double acc = 0.0;
      const std::size_t base = (static_cast<std::size_t>(p) * n + j) * k;
      for (int q = 0; q < k; ++q) {
        tops[base + q] = acc;
        if (q < static_cast<int>(kept.size())) acc += kept[q];
      }
    }
  }

  double best = incumbent.value;
  std::vector<int> best_subset = incumbent.subset;
  std::vector<int> chosen;
  Eigen::VectorXd link = Eigen::VectorXd::Zero(n);
  std::vector<double> gains(n);
  std::int64_t nodes = 0;
  bool aborted = false;
  double value = 0.0;

  auto bound = [&](int p, int r) {
    const int count = n - p;
    for (int j = p; j < n; ++j)
      gains[j - p] = link(j) + 0.5 * tops[(static_cast<std::size_t>(p) * n + j) * k + (r - 1)];
    std::nth_element(gains.begin(), gains.begin() + (r - 1), gains.begin() + count,
                     std::greater<double>());
    double total = 0.0;
    for (int q = 0; q < r; ++q) total += gains[q];
    return value + total;
  };

  auto dfs = [&](auto&& self, int p) -> void {
    if (aborted) return;
    if (++nodes > node_budget) {
      aborted = true;
      return;
    }
    const int r = k - static_cast<int>(chosen.size());
    if (r == 0) {
      std::vector<int> subset;
      for (int pos : chosen) subset.push_back(order[pos]);
      std::sort(subset.begin(), subset.end());
      const double exact_value = pair_sum(a, subset);
      if (better(exact_value, subset, best, best_subset)) {
        best = exact_value;
        best_subset = std::move(subset);
      }
      return;
    }
    if (n - p < r) return;
    const double tol = 1e-9 * std::max(1.0, std::abs(best));
    if (bound(p, r) < best - tol) return;
    value += link(p);
    chosen.push_back(p);
    link += b.col(p);
    self(self, p + 1);
    link -= b.col(p);
    chosen.pop_back();
    value -= link(p);
    self(self, p + 1);
  };
  dfs(dfs, 0);

  SubsetResult result;
  result.subset = std::move(best_subset);
  result.value = best;
  result.exact = !aborted;
  result.nodes = nodes;
  return result;
}

SubsetResult max_abs_sum(const SpinMatrix& spins, int k) {
  const auto n = static_cast<int>(spins.cols());
  const Eigen::Index m = spins.rows();
  auto evaluate = [&](const std::vector<int>& subset) {
    Eigen::VectorXi s = Eigen::VectorXi::Zero(m);
    for (int i : subset) s += spins.col(i).cast<int>().matrix();
    return static_cast<double>(s.cwiseAbs().sum());
  };

  SubsetResult result;
  if (k >= n || k <= 0) {
    result.subset = k <= 0 ? std::vector<int>{} : all_indices(n);
    result.value = evaluate(result.subset);
    result.exact = true;
    return result;
  }

  if (binomial_coefficient(n, k) <= kScanGate) {
    std::vector<Eigen::VectorXi> partial(k + 1, Eigen::VectorXi::Zero(m));
    std::vector<int> current;
    result.value = -1.0;
    auto dfs = [&](auto&& self, int start) -> void {
      const int depth = static_cast<int>(current.size());
      if (depth == k) {
        ++result.nodes;
        const double v = partial[k].cwiseAbs().sum();
        if (v > result.value) {
          result.value = v;
          result.subset = current;
        }
        return;
      }
      for (int i = start; i <= n - (k - depth); ++i) {
        partial[depth + 1] = partial[depth] + spins.col(i).cast<int>().matrix();
        current.push_back(i);
        self(self, i + 1);
        current.pop_back();
      }
    };
    dfs(dfs, 0);
    result.exact = true;
    return result;
  }

  const Eigen::MatrixXd x = spins.cast<double>().matrix();
  const Eigen::MatrixXd corr = (x.transpose() * x) / static_cast<double>(m);
  std::vector<std::vector<int>> starts = {max_pair_sum_heuristic(corr, k).subset,
                                          top_k(corr.cwiseAbs().rowwise().sum(), k)};
  {
    // signs of the whole-sample sums
    Eigen::VectorXd eps = x.rowwise().sum().unaryExpr([](double v) { return v >= 0 ? 1.0 : -1.0; });
    starts.push_back(top_k(x.transpose() * eps, k));
  }
  result.value = -1.0;
  for (std::vector<int> subset : starts) {
    for (int round = 0; round < 100; ++round) {
      Eigen::VectorXd s = Eigen::VectorXd::Zero(m);
      for (int i : subset) s += x.col(i);
      const Eigen::VectorXd eps = s.unaryExpr([](double v) { return v >= 0 ? 1.0 : -1.0; });
      std::vector<int> next = top_k(x.transpose() * eps, k);
      if (next == subset) break;
      subset = std::move(next);
    }
    const double v = evaluate(subset);
    if (better(v, subset, result.value, result.subset)) {
      result.value = v;
      result.subset = std::move(subset);
    }
  }
  result.exact = false;
  return result;
}

}  // namespace prfcw
