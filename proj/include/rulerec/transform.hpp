#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rulerec/core.hpp"

namespace rulerec {

enum class TransformMode { kProposed, kBenchmark, kNaive };
enum class Replication { kWeights, kRound, kFloorBernoulli };

TransformMode parse_transform_mode(const std::string& s);
Replication parse_replication(const std::string& s);
std::string to_string(TransformMode mode);
std::string to_string(Replication scheme);

class NegativeWeight : public Error {
 public:
  NegativeWeight(Action action, double weight);
  Action action() const { return action_; }

 private:
  Action action_;
};

struct TransformConfig {
  // Scale K. Unset means the mode default: 1 for weights, 100 for replication.
  std::optional<double> k_scale;
  // Shift L. Unset means "auto": the smallest feasible global shift.
  std::optional<double> l_shift;
  TransformMode mode = TransformMode::kProposed;
  Replication replication = Replication::kWeights;
  std::uint64_t seed = 0;

  double resolved_k() const;
  void validate() const;
};

/// Smallest L >= 0 that keeps every closed-form weight nonnegative for all
/// rows under scale K. Computed from the same expression weights_for_row
/// uses, so the binding weight comes out as exactly 0.
double min_shift(std::span<const RegretRow> rows, double k_scale);

/// Closed-form solution of the per-row linear system
///   sum_{b != a} k[b] = K q[a] + L   for every action a.
/// Throws NegativeWeight when L is too small for this row.
std::vector<double> weights_for_row(const RegretRow& row, double k_scale,
                                    double l_shift);

struct ProposedTransform {
  WeightedSet samples;
  double k_scale = 0.0;
  double l_shift = 0.0;
  std::size_t source_rows = 0;
};

// Emits (x_n, a, k_n^a) for every row n and action a, ordered by row then
// action. Zero weights are kept in weights mode and dropped when replicating.
ProposedTransform transform_proposed(const FeatureMatrix& features,
                                     const ProbTable& probs,
                                     const TransformConfig& cfg);

// One unit-weight sample per row carrying the row's optimal action.
WeightedSet transform_benchmark(const FeatureMatrix& features,
                                const ProbTable& probs);

// Keeps converted records with their logged action; ignores the others.
WeightedSet transform_naive(std::span<const HistoryRecord> records,
                            std::size_t n_actions);

// Expands weights into unit-weight copies. kRound emits round(k) copies;
// kFloorBernoulli emits floor(k) copies plus one more with probability
// k - floor(k), drawn from a stream keyed by (seed, sample index).
WeightedSet replicate(const WeightedSet& samples, Replication scheme,
                      std::uint64_t seed);

}  // namespace rulerec
