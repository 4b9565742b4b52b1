#include "rulerec/transform.hpp"

#include <algorithm>
#include <cmath>

#include "rulerec/random.hpp"

namespace rulerec {

namespace {

// K * sum_b q[b] - K * (|A|-1) * q[a], the L-free part of the numerator.
std::vector<double> unshifted_numerators(const RegretRow& row, double k_scale) {
  const std::size_t n = row.q.size();
  const double others = static_cast<double>(n - 1);
  double sum = 0.0;
  for (double q : row.q) sum += q;
  std::vector<double> t(n);
  for (std::size_t a = 0; a < n; ++a) {
    t[a] = k_scale * sum - k_scale * others * row.q[a];
  }
  return t;
}

void check_k(double k_scale) {
  if (!std::isfinite(k_scale) || k_scale <= 0.0) {
    throw InvalidInput("scale K must be positive and finite");
  }
}

std::vector<RegretRow> regret_rows(const ProbTable& probs) {
  std::vector<RegretRow> rows;
  rows.reserve(probs.rows());
  for (std::size_t n = 0; n < probs.rows(); ++n) rows.push_back(regret_row(probs.row(n)));
  return rows;
}

}  // namespace

TransformMode parse_transform_mode(const std::string& s) {
  if (s == "proposed") return TransformMode::kProposed;
  if (s == "benchmark") return TransformMode::kBenchmark;
  if (s == "naive") return TransformMode::kNaive;
  throw InvalidInput("unknown transform mode '" + s + "'");
}

Replication parse_replication(const std::string& s) {
  if (s == "weights") return Replication::kWeights;
  if (s == "round") return Replication::kRound;
  if (s == "floor-bernoulli") return Replication::kFloorBernoulli;
  throw InvalidInput("unknown replication scheme '" + s + "'");
}

std::string to_string(TransformMode mode) {
  switch (mode) {
    case TransformMode::kProposed: return "proposed";
    case TransformMode::kBenchmark: return "benchmark";
    case TransformMode::kNaive: return "naive";
  }
  return "?";
}

std::string to_string(Replication scheme) {
  switch (scheme) {
    case Replication::kWeights: return "weights";
    case Replication::kRound: return "round";
    case Replication::kFloorBernoulli: return "floor-bernoulli";
  }
  return "?";
}

NegativeWeight::NegativeWeight(Action action, double weight)
    : Error("negative weight " + std::to_string(weight) + " for action " +
            std::to_string(action) + "; shift L is too small"),
      action_(action) {}

double TransformConfig::resolved_k() const {
  if (k_scale) return *k_scale;
  return replication == Replication::kWeights ? 1.0 : 100.0;
}

void TransformConfig::validate() const {
  check_k(resolved_k());
  if (l_shift && (!std::isfinite(*l_shift) || *l_shift < 0.0)) {
    throw InvalidInput("shift L must be finite and >= 0");
  }
}

double min_shift(std::span<const RegretRow> rows, double k_scale) {
  check_k(k_scale);
  if (rows.empty()) throw InvalidInput("min_shift needs at least one row");
  double shift = 0.0;
  for (const auto& row : rows) {
    for (double t : unshifted_numerators(row, k_scale)) shift = std::max(shift, -t);
  }
  return shift;
}

std::vector<double> weights_for_row(const RegretRow& row, double k_scale,
                                    double l_shift) {
  check_k(k_scale);
  if (row.q.size() < 2) throw InvalidInput("regret row needs at least 2 actions");
  const double others = static_cast<double>(row.q.size() - 1);
  auto k = unshifted_numerators(row, k_scale);
  for (std::size_t a = 0; a < k.size(); ++a) {
    const double numerator = k[a] + l_shift;
    if (numerator < 0.0) throw NegativeWeight(a, numerator / others);
    k[a] = numerator / others;
  }
  return k;
}

ProposedTransform transform_proposed(const FeatureMatrix& features,
                                     const ProbTable& probs,
                                     const TransformConfig& cfg) {
  cfg.validate();
  if (probs.rows() != features.rows()) {
    throw DimensionMismatch("transform: probability and feature row counts differ");
  }
  if (probs.rows() == 0) throw InvalidInput("transform: empty input");
  const double k_scale = cfg.resolved_k();
  const auto rows = regret_rows(probs);
  const double l_shift = cfg.l_shift ? *cfg.l_shift : min_shift(rows, k_scale);

  ProposedTransform out{WeightedSet(features.dim(), probs.actions()), k_scale,
                        l_shift, probs.rows()};
  for (std::size_t n = 0; n < rows.size(); ++n) {
    const auto k = weights_for_row(rows[n], k_scale, l_shift);
    for (Action a = 0; a < k.size(); ++a) out.samples.add(features.row(n), a, k[a]);
  }
  if (cfg.replication != Replication::kWeights) {
    out.samples = replicate(out.samples, cfg.replication, cfg.seed);
  }
  return out;
}

WeightedSet transform_benchmark(const FeatureMatrix& features,
                                const ProbTable& probs) {
  if (probs.rows() != features.rows()) {
    throw DimensionMismatch("transform: probability and feature row counts differ");
  }
  WeightedSet out(features.dim(), probs.actions());
  for (std::size_t n = 0; n < probs.rows(); ++n) {
    out.add(features.row(n), optimal_action(probs.row(n)), 1.0);
  }
  return out;
}

WeightedSet transform_naive(std::span<const HistoryRecord> records,
                            std::size_t n_actions) {
  validate_records(records, n_actions);
  WeightedSet out(records.empty() ? 0 : records.front().features.size(), n_actions);
  for (const auto& r : records) {
    if (r.outcome == 1) out.add(r.features, r.action, 1.0);
  }
  return out;
}

WeightedSet replicate(const WeightedSet& samples, Replication scheme,
                      std::uint64_t seed) {
  if (scheme == Replication::kWeights) return samples;
  WeightedSet out(samples.dim(), samples.n_actions());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double k = samples.weight(i);
    double copies;
    if (scheme == Replication::kRound) {
      copies = std::round(k);
    } else {
      copies = std::floor(k);
      const double frac = k - copies;
      if (frac > 0.0 && uniform_at(seed, "replicate", i) < frac) copies += 1.0;
    }
    const auto count = static_cast<std::size_t>(copies);
    for (std::size_t c = 0; c < count; ++c) {
      out.add(samples.features(i), samples.action(i), 1.0);
    }
  }
  return out;
}

}  // namespace rulerec
