#include "rulerec/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rulerec/format.hpp"
#include "rulerec/parallel.hpp"
#include "rulerec/random.hpp"

namespace rulerec {

namespace {

constexpr double kProbFloor = 0.02;
constexpr double kProbCeil = 0.98;

}  // namespace

void SynthConfig::validate() const {
  if (n_samples == 0) throw InvalidInput("synth: n_samples must be positive");
  if (d == 0) throw InvalidInput("synth: d must be positive");
  if (n_actions < 2) throw InvalidInput("synth: need at least 2 actions");
  if (n_segments == 0) throw InvalidInput("synth: need at least 1 segment");
  if (!(noise >= 0.0 && noise <= 0.2)) throw InvalidInput("synth: noise must be in [0, 0.2]");
  if (!(p_lo_min >= 0.0 && p_lo_min <= p_lo_max && p_lo_max <= 1.0 && p_hi <= 1.0)) {
    throw InvalidInput("synth: base probabilities out of range");
  }
  if (logging_policy.kind == LoggingPolicy::Kind::kSkewed) {
    if (logging_policy.action >= n_actions) {
      throw InvalidInput("synth: skewed logging action out of range");
    }
    if (!(logging_policy.share >= 0.0 && logging_policy.share <= 1.0)) {
      throw InvalidInput("synth: skewed logging share must be in [0, 1]");
    }
  }
}

std::string SynthConfig::describe() const {
  std::string s = "n=" + std::to_string(n_samples) + ";d=" + std::to_string(d) +
                  ";actions=" + std::to_string(n_actions) +
                  ";segments=" + std::to_string(n_segments) +
                  ";noise=" + format_double(noise) + ";p_hi=" + format_double(p_hi) +
                  ";p_lo=" + format_double(p_lo_min) + ".." + format_double(p_lo_max);
  if (logging_policy.kind == LoggingPolicy::Kind::kSkewed) {
    s += ";policy=skewed(" + std::to_string(logging_policy.action) + "," +
         format_double(logging_policy.share) + ")";
  } else {
    s += ";policy=uniform";
  }
  return s + ";seed=" + std::to_string(seed);
}

SynthWorld::SynthWorld(const SynthConfig& cfg) : cfg_(cfg) {
  cfg.validate();
  Stream layout(cfg.seed, "layout");

  // Recursive axis-aligned partition: repeatedly cut a box chosen with
  // probability proportional to its volume.
  segments_.push_back({std::vector<double>(cfg.d, 0.0), std::vector<double>(cfg.d, 1.0), 0, {}});
  auto volume = [](const Segment& s) {
    double v = 1.0;
    for (std::size_t j = 0; j < s.lower.size(); ++j) v *= s.upper[j] - s.lower[j];
    return v;
  };
  while (segments_.size() < cfg.n_segments) {
    double total = 0.0;
    for (const auto& seg : segments_) total += volume(seg);
    double u = layout.uniform() * total;
    std::size_t target = segments_.size() - 1;
    for (std::size_t i = 0; i < segments_.size(); ++i) {
      u -= volume(segments_[i]);
      if (u < 0.0) {
        target = i;
        break;
      }
    }
    const std::size_t dim = layout.below(cfg.d);
    Segment& box = segments_[target];
    const double cut = box.lower[dim] +
                       layout.uniform(0.35, 0.65) * (box.upper[dim] - box.lower[dim]);
    Segment upper_part = box;
    box.upper[dim] = cut;
    upper_part.lower[dim] = cut;
    segments_.push_back(std::move(upper_part));
  }

  // Best actions are drawn independently, so neighbouring segments may share one.
  for (std::size_t s = 0; s < segments_.size(); ++s) {
    auto& seg = segments_[s];
    seg.best_action = layout.below(cfg.n_actions);
    seg.base.resize(cfg.n_actions);
    for (Action a = 0; a < cfg.n_actions; ++a) {
      seg.base[a] = a == seg.best_action ? cfg.p_hi : layout.uniform(cfg.p_lo_min, cfg.p_lo_max);
    }
  }

  const std::size_t n = cfg.n_actions * cfg.d;
  coef_.resize(n);
  freq_.resize(n);
  phase_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    coef_[i] = layout.uniform(-1.0, 1.0);
    freq_[i] = layout.uniform(0.5, 1.5);
    phase_[i] = layout.uniform();
  }
}

std::size_t SynthWorld::segment_of(std::span<const double> x) const {
  for (std::size_t s = 0; s < segments_.size(); ++s) {
    const auto& seg = segments_[s];
    bool inside = true;
    for (std::size_t j = 0; j < x.size() && inside; ++j) {
      // Lower faces are open except at the domain edge.
      const bool above_lower = seg.lower[j] == 0.0 ? x[j] >= 0.0 : x[j] > seg.lower[j];
      inside = above_lower && x[j] <= seg.upper[j];
    }
    if (inside) return s;
  }
  throw InvalidInput("synth: point outside the unit cube");
}

std::vector<double> SynthWorld::probabilities(std::span<const double> x) const {
  const auto& seg = segments_[segment_of(x)];
  std::vector<double> p(cfg_.n_actions);
  for (Action a = 0; a < cfg_.n_actions; ++a) {
    double jitter = 0.0, norm = 0.0;
    for (std::size_t j = 0; j < cfg_.d; ++j) {
      const std::size_t k = a * cfg_.d + j;
      jitter += coef_[k] * std::sin(2.0 * std::numbers::pi * (freq_[k] * x[j] + phase_[k]));
      norm += std::abs(coef_[k]);
    }
    if (norm > 0.0) jitter *= cfg_.noise / norm;
    p[a] = std::clamp(seg.base[a] + jitter, kProbFloor, kProbCeil);
  }
  return p;
}

SynthData generate(const SynthConfig& cfg) {
  const SynthWorld world(cfg);
  SynthData out;
  out.records.resize(cfg.n_samples);
  out.segment.resize(cfg.n_samples);
  std::vector<double> truth(cfg.n_samples * cfg.n_actions);

  parallel_for(cfg.n_samples, cfg.threads, [&](std::size_t n) {
    Stream rng(cfg.seed, "sample", n);
    auto& rec = out.records[n];
    rec.features.resize(cfg.d);
    for (double& v : rec.features) v = rng.uniform();
    const auto p = world.probabilities(rec.features);
    std::copy(p.begin(), p.end(), truth.begin() + n * cfg.n_actions);
    out.segment[n] = world.segment_of(rec.features);

    const auto& policy = cfg.logging_policy;
    if (policy.kind == LoggingPolicy::Kind::kSkewed) {
      if (rng.bernoulli(policy.share)) {
        rec.action = policy.action;
      } else {
        const Action other = rng.below(cfg.n_actions - 1);
        rec.action = other >= policy.action ? other + 1 : other;
      }
    } else {
      rec.action = rng.below(cfg.n_actions);
    }
    rec.outcome = rng.bernoulli(p[rec.action]) ? 1 : 0;
  });
  out.truth = ProbTable(cfg.n_samples, cfg.n_actions, std::move(truth));
  return out;
}

ProbTable add_fictitious(const ProbTable& truth, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw InvalidInput("fictitious promotion: alpha must be in [0, 1]");
  }
  const std::size_t a = truth.actions();
  std::vector<double> flat;
  flat.reserve(truth.rows() * (a + 1));
  for (std::size_t n = 0; n < truth.rows(); ++n) {
    const auto row = truth.row(n);
    const auto [lo, hi] = std::minmax_element(row.begin(), row.end());
    flat.insert(flat.end(), row.begin(), row.end());
    flat.push_back(std::max(*lo, alpha * *hi));
  }
  return ProbTable(truth.rows(), a + 1, std::move(flat));
}

}  // namespace rulerec
