#include "rulerec/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "rulerec/format.hpp"
#include "rulerec/parallel.hpp"

namespace rulerec {

double conversion_rate(const Classifier& h, const ProbTable& probs,
                       const FeatureMatrix& features) {
  if (probs.rows() != features.rows()) {
    throw DimensionMismatch("conversion_rate: probability and feature row counts differ");
  }
  if (probs.rows() == 0) throw InvalidInput("conversion_rate: no rows");
  double total = 0.0;
  for (std::size_t m = 0; m < probs.rows(); ++m) {
    total += probs.at(m, checked_prediction(h, features.row(m), probs.actions()));
  }
  return total / static_cast<double>(probs.rows());
}

Bounds bounds(const ProbTable& probs) {
  if (probs.rows() == 0) throw InvalidInput("bounds: no rows");
  double lo = 0.0, hi = 0.0;
  for (std::size_t n = 0; n < probs.rows(); ++n) {
    const auto row = probs.row(n);
    const auto [mn, mx] = std::minmax_element(row.begin(), row.end());
    lo += *mn;
    hi += *mx;
  }
  const double m = static_cast<double>(probs.rows());
  return {lo / m, hi / m};
}

RuleTree random_tree(const FeatureMatrix& features, std::size_t n_actions, Stream& rng) {
  if (features.rows() == 0 || features.dim() == 0) {
    throw InvalidInput("random_tree: need at least one feature row");
  }
  std::vector<TreeNode> nodes;
  auto grow = [&](auto&& self, std::size_t depth) -> std::size_t {
    const std::size_t id = nodes.size();
    nodes.emplace_back();
    if (depth < 4 && rng.uniform() < 0.7) {
      const std::size_t f = rng.below(features.dim());
      const double t = features.at(rng.below(features.rows()), f);
      const std::size_t l = self(self, depth + 1);
      const std::size_t r = self(self, depth + 1);
      nodes[id].feature = f;
      nodes[id].threshold = t;
      nodes[id].left = l;
      nodes[id].right = r;
    } else {
      nodes[id].action = rng.below(n_actions);
      nodes[id].weights.assign(n_actions, 0.0);
      nodes[id].weights[nodes[id].action] = 1.0;
    }
    return id;
  };
  grow(grow, 0);
  return RuleTree(features.dim(), n_actions, std::move(nodes));
}

Classifier random_classifier(const FeatureMatrix& features, std::size_t n_actions,
                             Stream& rng) {
  if (rng.uniform() < 0.5) return constant_policy(rng.below(n_actions));
  return random_tree(features, n_actions, rng).as_classifier();
}

IdentityReport verify_loss_identity(const ProbTable& probs, const FeatureMatrix& features,
                                    const TransformConfig& cfg, std::size_t trials,
                                    std::uint64_t seed) {
  TransformConfig weights_cfg = cfg;
  weights_cfg.mode = TransformMode::kProposed;
  weights_cfg.replication = Replication::kWeights;
  const auto transformed = transform_proposed(features, probs, weights_cfg);

  IdentityReport report;
  report.trials = trials;
  report.rows = probs.rows();
  report.k_scale = transformed.k_scale;
  report.l_shift = transformed.l_shift;
  report.tolerance = 1e-9 * static_cast<double>(probs.rows());
  const double floor = static_cast<double>(probs.rows()) * transformed.l_shift;
  Stream rng(seed, "verify");
  for (std::size_t t = 0; t < trials; ++t) {
    const auto h = random_classifier(features, probs.actions(), rng);
    const double lt = loss_t(h, transformed.samples);
    const double ls = loss_s(h, probs, features);
    report.max_deviation =
        std::max(report.max_deviation, std::abs(lt - (transformed.k_scale * ls + floor)));
  }
  report.passed = report.max_deviation <= report.tolerance;
  return report;
}

std::string ExperimentCurve::digest() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(label_hash(config)));
  return buf;
}

std::string ExperimentCurve::to_csv() const {
  std::string out = "# seed=" + std::to_string(seed) + " digest=" + digest() + "\n";
  out += "# config " + config + "\n";
  for (const auto& note : notes) out += "# " + note + "\n";
  out += "x,proposed,benchmark,upper,lower\n";
  for (std::size_t i = 0; i < x.size(); ++i) {
    out += format_double(x[i]) + "," + format_double(proposed[i]) + "," +
           format_double(benchmark[i]) + "," + format_double(upper[i]) + "," +
           format_double(lower[i]) + "\n";
  }
  return out;
}

namespace {

std::string describe(const ExperimentCommon& c) {
  SynthConfig synth = c.synth;
  synth.seed = c.seed;
  std::string s = synth.describe();
  s += ";k=" + (c.k_scale ? format_double(*c.k_scale) : std::string("default"));
  s += ";l=" + (c.l_shift ? format_double(*c.l_shift) : std::string("auto"));
  s += ";train_fraction=" + format_double(c.train_fraction);
  s += c.estimated ? ";probs=estimated" : ";probs=oracle";
  if (c.estimated) {
    s += ";l2=" + format_double(c.fit.l2) + ";max_iters=" + std::to_string(c.fit.max_iters) +
         ";tol=" + format_double(c.fit.tolerance);
  }
  return s;
}

TransformConfig proposed_config(const ExperimentCommon& c) {
  TransformConfig cfg;
  cfg.k_scale = c.k_scale;
  cfg.l_shift = c.l_shift;
  cfg.mode = TransformMode::kProposed;
  cfg.replication = Replication::kWeights;
  cfg.seed = c.seed;
  return cfg;
}

std::string identity_note(const IdentityReport& r) {
  return std::string("loss identity ") + (r.passed ? "passed" : "FAILED") +
         " max_dev=" + format_double(r.max_deviation) +
         " tol=" + format_double(r.tolerance) + " L=" + format_double(r.l_shift);
}

}  // namespace

ExperimentData prepare_experiment(const ExperimentCommon& common) {
  if (!(common.train_fraction > 0.0 && common.train_fraction < 1.0)) {
    throw InvalidInput("experiment: train fraction must be in (0, 1)");
  }
  SynthConfig synth = common.synth;
  synth.seed = common.seed;
  synth.threads = common.threads;
  const SynthData data = generate(synth);

  const std::size_t n = data.records.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Stream rng(common.seed, "split");
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  const auto n_train = static_cast<std::size_t>(
      std::llround(static_cast<double>(n) * common.train_fraction));
  if (n_train == 0 || n_train >= n) throw InvalidInput("experiment: empty train or test split");
  std::vector<std::size_t> train_idx(order.begin(), order.begin() + n_train);
  std::vector<std::size_t> test_idx(order.begin() + n_train, order.end());

  const FeatureMatrix all_features = features_of(data.records);
  ExperimentData out;
  out.train_features = all_features.select(train_idx);
  out.test_features = all_features.select(test_idx);
  out.test_truth = data.truth.select(test_idx);
  if (common.estimated) {
    std::vector<HistoryRecord> train_records;
    train_records.reserve(n_train);
    for (std::size_t i : train_idx) train_records.push_back(data.records[i]);
    FitOptions fit_options = common.fit;
    fit_options.threads = common.threads;
    const auto model = fit(train_records, synth.n_actions, fit_options);
    out.train_probs = model.predict(out.train_features);
  } else {
    out.train_probs = data.truth.select(train_idx);
  }
  return out;
}

ExperimentCurve experiment_rule_count(const RuleCountConfig& cfg) {
  if (cfg.rule_counts.empty()) throw InvalidInput("experiment: no rule counts");
  for (std::size_t i = 0; i < cfg.rule_counts.size(); ++i) {
    if (cfg.rule_counts[i] < 1 || (i > 0 && cfg.rule_counts[i] < cfg.rule_counts[i - 1])) {
      throw InvalidInput("experiment: rule counts must be >= 1 and ascending");
    }
  }
  const auto& common = cfg.common;
  const ExperimentData data = prepare_experiment(common);
  const auto tcfg = proposed_config(common);
  const auto proposed = transform_proposed(data.train_features, data.train_probs, tcfg);
  const auto benchmark = transform_benchmark(data.train_features, data.train_probs);

  const std::size_t m = cfg.rule_counts.size();
  std::vector<double> rates(2 * m);
  parallel_for(2 * m, common.threads, [&](std::size_t cell) {
    const WeightedSet& set = cell < m ? proposed.samples : benchmark;
    const auto tree = train(set, {cfg.rule_counts[cell % m], 0.0});
    rates[cell] = conversion_rate(tree.as_classifier(), data.test_truth, data.test_features);
  });

  ExperimentCurve curve;
  curve.x_label = "rules";
  curve.seed = common.seed;
  curve.config = describe(common) + ";experiment=rules";
  const Bounds b = bounds(data.test_truth);
  for (std::size_t i = 0; i < m; ++i) {
    curve.x.push_back(static_cast<double>(cfg.rule_counts[i]));
    curve.proposed.push_back(rates[i]);
    curve.benchmark.push_back(rates[m + i]);
    curve.upper.push_back(b.upper);
    curve.lower.push_back(b.lower);
  }
  if (common.identity_trials > 0) {
    curve.notes.push_back(identity_note(verify_loss_identity(
        data.train_probs, data.train_features, tcfg, common.identity_trials, common.seed)));
  }
  return curve;
}

ExperimentCurve experiment_alpha(const AlphaConfig& cfg) {
  if (cfg.alphas.empty()) throw InvalidInput("experiment: no alpha values");
  for (double a : cfg.alphas) {
    if (!(a >= 0.0 && a <= 1.0)) throw InvalidInput("experiment: alpha must be in [0, 1]");
  }
  if (cfg.rules < 1) throw InvalidInput("experiment: rule count must be >= 1");
  const auto& common = cfg.common;
  const ExperimentData data = prepare_experiment(common);
  const auto tcfg = proposed_config(common);

  const std::size_t m = cfg.alphas.size();
  std::vector<double> proposed(m), benchmark(m);
  std::vector<Bounds> bnds(m);
  std::vector<WeightedSet> benchmark_sets(m);
  std::vector<IdentityReport> reports(m);
  parallel_for(m, common.threads, [&](std::size_t i) {
    const ProbTable train_probs = add_fictitious(data.train_probs, cfg.alphas[i]);
    const ProbTable test_truth = add_fictitious(data.test_truth, cfg.alphas[i]);
    const auto prop = transform_proposed(data.train_features, train_probs, tcfg);
    benchmark_sets[i] = transform_benchmark(data.train_features, train_probs);
    const TrainOptions options{cfg.rules, 0.0};
    proposed[i] = conversion_rate(train(prop.samples, options).as_classifier(), test_truth,
                                  data.test_features);
    benchmark[i] = conversion_rate(train(benchmark_sets[i], options).as_classifier(),
                                   test_truth, data.test_features);
    bnds[i] = bounds(test_truth);
    if (common.identity_trials > 0) {
      reports[i] = verify_loss_identity(train_probs, data.train_features, tcfg,
                                        common.identity_trials, common.seed);
    }
  });

  ExperimentCurve curve;
  curve.x_label = "alpha";
  curve.seed = common.seed;
  curve.config = describe(common) + ";experiment=alpha;rules=" + std::to_string(cfg.rules);
  curve.x = cfg.alphas;
  curve.proposed = proposed;
  curve.benchmark = benchmark;
  for (const auto& b : bnds) {
    curve.upper.push_back(b.upper);
    curve.lower.push_back(b.lower);
  }
  const bool invariant = std::all_of(benchmark_sets.begin(), benchmark_sets.end(),
                                     [&](const WeightedSet& s) { return s == benchmark_sets[0]; });
  curve.notes.push_back(std::string("benchmark set identical across alpha: ") +
                        (invariant ? "yes" : "no"));
  if (common.identity_trials > 0) {
    for (std::size_t i = 0; i < m; ++i) {
      curve.notes.push_back("alpha=" + format_double(cfg.alphas[i]) + " " +
                            identity_note(reports[i]));
    }
  }
  return curve;
}

}  // namespace rulerec
