#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "rulerec/core.hpp"

namespace rulerec {

struct LoggingPolicy {
  enum class Kind { kUniform, kSkewed };
  Kind kind = Kind::kUniform;
  // kSkewed: `action` is logged with probability `share`, the remaining mass
  // is spread uniformly over the other actions.
  Action action = 0;
  double share = 0.0;

  static LoggingPolicy uniform() { return {}; }
  static LoggingPolicy skewed(Action a, double share) {
    return {Kind::kSkewed, a, share};
  }
};

struct SynthConfig {
  std::size_t n_samples = 30000;
  std::size_t d = 6;
  std::size_t n_actions = 8;
  std::size_t n_segments = 6;
  LoggingPolicy logging_policy;
  double noise = 0.05;  // jitter amplitude, in [0, 0.2]
  std::uint64_t seed = 0;
  double p_hi = 0.30;
  double p_lo_min = 0.05;
  double p_lo_max = 0.15;
  unsigned threads = 0;

  void validate() const;
  // Stable text form, used for config digests.
  std::string describe() const;
};

// Axis-aligned box [lower, upper]; points on a shared face belong to the box
// on the lower side.
struct Segment {
  std::vector<double> lower;
  std::vector<double> upper;
  Action best_action = 0;
  std::vector<double> base;  // per-action probability before jitter
};

// Ground-truth world: segment partition plus a smooth per-action jitter
//   jitter_a(x) = noise * sum_j c_aj sin(2 pi (f_aj x_j + phase_aj)) / sum_j |c_aj|.
class SynthWorld {
 public:
  explicit SynthWorld(const SynthConfig& cfg);

  const std::vector<Segment>& segments() const { return segments_; }
  std::size_t segment_of(std::span<const double> x) const;
  std::vector<double> probabilities(std::span<const double> x) const;

 private:
  SynthConfig cfg_;
  std::vector<Segment> segments_;
  std::vector<double> coef_, freq_, phase_;  // n_actions x d each
};

struct SynthData {
  std::vector<HistoryRecord> records;
  ProbTable truth;
  std::vector<std::size_t> segment;  // segment index per row
};

/// Features uniform on [0,1]^d, ground-truth probabilities from SynthWorld,
/// logged actions from the logging policy and Bernoulli outcomes. Each row
/// draws from its own stream keyed by (seed, row), so the output does not
/// depend on cfg.threads.
SynthData generate(const SynthConfig& cfg);

/// Appends the column max(min_a p, alpha * max_a p) as a new last action.
ProbTable add_fictitious(const ProbTable& truth, double alpha);

}  // namespace rulerec
