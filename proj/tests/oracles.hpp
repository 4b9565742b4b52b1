#pragma once

// Reference implementations used to check the library. They follow the
// definitions directly and share no code with src/.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <tuple>
#include <vector>

namespace oracle {

inline std::vector<double> regret(const std::vector<double>& p) {
  double best = p[0];
  for (double v : p) best = std::max(best, v);
  std::vector<double> q;
  for (double v : p) q.push_back(best - v);
  return q;
}

inline std::size_t argmax(const std::vector<double>& p) {
  std::size_t b = 0;
  for (std::size_t a = 1; a < p.size(); ++a) {
    if (p[a] > p[b]) b = a;
  }
  return b;
}

// Solves sum_{b != a} k[b] = K q[a] + L for all a by Gaussian elimination
// with partial pivoting.
inline std::vector<double> solve_weights(const std::vector<double>& q, double K, double L) {
  const std::size_t n = q.size();
  std::vector<std::vector<double>> m(n, std::vector<double>(n + 1, 1.0));
  for (std::size_t a = 0; a < n; ++a) {
    m[a][a] = 0.0;
    m[a][n] = K * q[a] + L;
  }
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r) {
      if (std::abs(m[r][c]) > std::abs(m[piv][c])) piv = r;
    }
    std::swap(m[c], m[piv]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = m[r][c] / m[c][c];
      for (std::size_t j = c; j <= n; ++j) m[r][j] -= f * m[c][j];
    }
  }
  std::vector<double> k(n);
  for (std::size_t a = 0; a < n; ++a) k[a] = m[a][n] / m[a][a];
  return k;
}

// Smallest L >= 0 with every solved weight >= -tol, by bisection.
inline double min_shift(const std::vector<std::vector<double>>& qs, double K) {
  auto feasible = [&](double L) {
    for (const auto& q : qs) {
      for (double w : solve_weights(q, K, L)) {
        if (w < -1e-12) return false;
      }
    }
    return true;
  };
  if (feasible(0.0)) return 0.0;
  double lo = 0.0, hi = 1.0;
  while (!feasible(hi)) hi *= 2.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (feasible(mid) ? hi : lo) = mid;
  }
  return hi;
}

inline double gini(const std::vector<double>& w) {
  double total = 0.0, sq = 0.0;
  for (double v : w) total += v;
  if (total <= 0.0) return 0.0;
  for (double v : w) sq += (v / total) * (v / total);
  return 1.0 - sq;
}

// Minimum weighted misclassification over all axis-aligned trees with at
// most `budget` leaves on binary features (splits at 0.5). point_weights[i]
// holds the per-action weight totals of the point whose bits encode its
// feature values (bit j = feature j).
class BinaryTreeEnumerator {
 public:
  BinaryTreeEnumerator(std::size_t d, std::vector<std::vector<double>> point_weights)
      : d_(d), w_(std::move(point_weights)) {}

  double best(std::size_t budget) { return solve(0, 0, budget); }

 private:
  // Region: features in `fixed` are pinned to the bits in `value`.
  double leaf_cost(unsigned fixed, unsigned value) const {
    std::vector<double> tot(w_[0].size(), 0.0);
    for (unsigned p = 0; p < w_.size(); ++p) {
      if ((p & fixed) != value) continue;
      for (std::size_t a = 0; a < tot.size(); ++a) tot[a] += w_[p][a];
    }
    double sum = 0.0, mx = 0.0;
    for (double v : tot) {
      sum += v;
      mx = std::max(mx, v);
    }
    return sum - mx;
  }

  double solve(unsigned fixed, unsigned value, std::size_t budget) {
    const auto key = std::make_tuple(fixed, value, budget);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    double best = leaf_cost(fixed, value);
    for (std::size_t f = 0; f < d_ && budget >= 2; ++f) {
      const unsigned bit = 1u << f;
      if (fixed & bit) continue;
      for (std::size_t b1 = 1; b1 < budget; ++b1) {
        const double c = solve(fixed | bit, value, b1) + solve(fixed | bit, value | bit, budget - b1);
        best = std::min(best, c);
      }
    }
    memo_[key] = best;
    return best;
  }

  std::size_t d_;
  std::vector<std::vector<double>> w_;
  std::map<std::tuple<unsigned, unsigned, std::size_t>, double> memo_;
};

}  // namespace oracle
