#include "rulerec/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <sstream>

#include "rulerec/csv_io.hpp"
#include "rulerec/eval.hpp"
#include "rulerec/format.hpp"
#include "rulerec/prob_model.hpp"
#include "rulerec/synth.hpp"
#include "rulerec/transform.hpp"
#include "rulerec/tree.hpp"

namespace rulerec::cli {

namespace {

struct Options {
  std::uint64_t seed = 0;
  unsigned threads = 0;

  // generate / experiments
  std::size_t n = SynthConfig{}.n_samples;
  std::size_t d = SynthConfig{}.d;
  std::size_t actions = SynthConfig{}.n_actions;
  std::size_t segments = SynthConfig{}.n_segments;
  double noise = SynthConfig{}.noise;
  std::string policy = "uniform";
  std::size_t skew_action = 0;
  double skew_share = 0.5;

  // file paths
  std::string records, truth, model, probs, features, weighted, tree, out;
  std::string oracle;
  std::size_t action_count = 0;  // 0 = infer from the records

  // estimate
  double l2 = FitOptions{}.l2;
  std::size_t max_iters = FitOptions{}.max_iters;
  double tol = FitOptions{}.tolerance;

  // transform / verify
  std::string mode = "proposed";
  std::string k = "default";
  std::string l = "auto";
  std::string replication = "weights";
  std::size_t trials = 100;

  // train / rules
  std::size_t leaves = TrainOptions{}.max_leaves;
  double min_leaf_weight = 0.0;
  std::vector<std::string> names;

  // experiments
  std::vector<std::size_t> rule_counts = RuleCountConfig{}.rule_counts;
  std::vector<double> alphas = AlphaConfig{}.alphas;
  double train_fraction = ExperimentCommon{}.train_fraction;
  bool estimated = false;
};

// Output paths must land in an existing directory.
const CLI::Validator kWritable(
    [](std::string& path) -> std::string {
      const auto parent = std::filesystem::path(path).parent_path();
      if (!parent.empty() && !std::filesystem::is_directory(parent)) {
        return "directory does not exist: " + parent.string();
      }
      if (std::filesystem::is_directory(path)) return "path is a directory: " + path;
      return {};
    },
    "WRITABLE", "writable path");

FeatureMatrix features_from_csv(const CsvTable& t) {
  std::size_t d = 0;
  while (d < t.header.size() && t.header[d] == "f" + std::to_string(d)) ++d;
  if (d == 0) throw DataError(t.file, 1, "", "expected leading feature columns f0,f1,...");
  FeatureMatrix m(0, d);
  for (const auto& row : t.rows) m.append(std::span<const double>(row.data(), d));
  return m;
}

std::optional<double> parse_optional(const std::string& flag, const std::string& text,
                                     const std::string& unset_word) {
  if (text == unset_word) return std::nullopt;
  double v;
  if (!parse_double(text, v)) throw CLI::ValidationError(flag, "expected a number or '" + unset_word + "'");
  return v;
}

void emit(const Options& o, const std::string& text) {
  if (o.out.empty()) {
    std::cout << text;
  } else {
    write_file(o.out, text);
  }
}

SynthConfig synth_config(const Options& o) {
  SynthConfig cfg;
  cfg.n_samples = o.n;
  cfg.d = o.d;
  cfg.n_actions = o.actions;
  cfg.n_segments = o.segments;
  cfg.noise = o.noise;
  cfg.seed = o.seed;
  cfg.threads = o.threads;
  if (o.policy == "skewed") {
    cfg.logging_policy = LoggingPolicy::skewed(o.skew_action, o.skew_share);
  } else if (o.policy != "uniform") {
    throw InvalidInput("unknown logging policy '" + o.policy + "'");
  }
  return cfg;
}

void cmd_generate(const Options& o) {
  const SynthData data = generate(synth_config(o));
  write_file(o.records, records_to_csv(data.records));
  write_file(o.truth, table_to_csv(data.truth));
}

void cmd_estimate(const Options& o) {
  ConversionModel model;
  ProbTable probs;
  if (!o.oracle.empty()) {
    const ProbTable table = table_from_csv(read_csv(o.oracle));
    const std::size_t dim = o.records.empty() ? 0 : features_from_csv(read_csv(o.records)).dim();
    model = ConversionModel::oracle(table, dim);
    probs = table;
  } else {
    if (o.records.empty()) throw CLI::RequiredError("--records");
    std::size_t inferred = 0;
    const auto records = records_from_csv(read_csv(o.records), &inferred);
    const std::size_t n_actions = o.action_count ? o.action_count : inferred;
    FitOptions fo;
    fo.l2 = o.l2;
    fo.max_iters = o.max_iters;
    fo.tolerance = o.tol;
    fo.seed = o.seed;
    fo.threads = o.threads;
    model = fit(records, n_actions, fo);
    probs = model.predict(features_of(records));
  }
  write_file(o.model, model.to_json());
  write_file(o.probs, table_to_csv(probs));
}

void cmd_transform(const Options& o) {
  const TransformMode mode = parse_transform_mode(o.mode);
  std::vector<std::string> comments;
  WeightedSet set(0, 2);
  if (mode == TransformMode::kNaive) {
    if (o.records.empty()) throw CLI::RequiredError("--records");
    std::size_t inferred = 0;
    const auto records = records_from_csv(read_csv(o.records), &inferred);
    const std::size_t n_actions = o.action_count ? o.action_count : inferred;
    set = transform_naive(records, n_actions);
    comments.push_back("mode=naive");
  } else {
    if (o.probs.empty()) throw CLI::RequiredError("--probs");
    const std::string feature_path = o.features.empty() ? o.records : o.features;
    if (feature_path.empty()) throw CLI::RequiredError("--features");
    const ProbTable probs = table_from_csv(read_csv(o.probs));
    const FeatureMatrix features = features_from_csv(read_csv(feature_path));
    if (mode == TransformMode::kBenchmark) {
      set = transform_benchmark(features, probs);
      comments.push_back("mode=benchmark");
    } else {
      TransformConfig cfg;
      cfg.mode = mode;
      cfg.replication = parse_replication(o.replication);
      cfg.k_scale = parse_optional("--k", o.k, "default");
      cfg.l_shift = parse_optional("--l", o.l, "auto");
      cfg.seed = o.seed;
      auto result = transform_proposed(features, probs, cfg);
      comments.push_back("mode=proposed k=" + format_double(result.k_scale) +
                         " l=" + format_double(result.l_shift) +
                         " replication=" + to_string(cfg.replication) +
                         " rows=" + std::to_string(result.source_rows));
      set = std::move(result.samples);
    }
  }
  write_file(o.out, weighted_to_csv(set, comments));
}

void cmd_train(const Options& o) {
  const WeightedSet set = weighted_from_csv(read_csv(o.weighted));
  const RuleTree tree = train(set, {o.leaves, o.min_leaf_weight});
  write_file(o.out, tree.to_json());
}

void cmd_rules(const Options& o) {
  const RuleTree tree = RuleTree::from_json(read_file(o.tree));
  std::string text;
  for (const auto& line : extract_rules(tree, o.names)) text += line + "\n";
  emit(o, text);
}

void cmd_evaluate(const Options& o) {
  const RuleTree tree = RuleTree::from_json(read_file(o.tree));
  const ProbTable probs = table_from_csv(read_csv(o.probs));
  const FeatureMatrix features = features_from_csv(read_csv(o.features));
  if (tree.dim() != features.dim()) {
    throw DimensionMismatch("tree expects " + std::to_string(tree.dim()) + " features, '" +
                            o.features + "' has " + std::to_string(features.dim()));
  }
  if (tree.n_actions() != probs.actions()) {
    throw DimensionMismatch("tree has " + std::to_string(tree.n_actions()) + " actions, '" +
                            o.probs + "' has " + std::to_string(probs.actions()));
  }
  const Bounds b = bounds(probs);
  emit(o, "conversion_rate=" + format_double(conversion_rate(tree.as_classifier(), probs, features)) +
              "\nlower=" + format_double(b.lower) + "\nupper=" + format_double(b.upper) + "\n");
}

int cmd_verify(const Options& o) {
  const ProbTable probs = table_from_csv(read_csv(o.probs));
  const FeatureMatrix features = features_from_csv(read_csv(o.features));
  TransformConfig cfg;
  cfg.k_scale = parse_optional("--k", o.k, "default");
  cfg.l_shift = parse_optional("--l", o.l, "auto");
  const IdentityReport r = verify_loss_identity(probs, features, cfg, o.trials, o.seed);
  emit(o, "trials=" + std::to_string(r.trials) + "\nrows=" + std::to_string(r.rows) +
              "\nk=" + format_double(r.k_scale) + "\nl=" + format_double(r.l_shift) +
              "\nmax_deviation=" + format_double(r.max_deviation) +
              "\ntolerance=" + format_double(r.tolerance) +
              "\nresult=" + (r.passed ? "PASS" : "FAIL") + "\n");
  return r.passed ? 0 : 2;
}

ExperimentCommon experiment_common(const Options& o) {
  ExperimentCommon c;
  c.synth = synth_config(o);
  c.k_scale = parse_optional("--k", o.k, "default");
  c.l_shift = parse_optional("--l", o.l, "auto");
  c.train_fraction = o.train_fraction;
  c.seed = o.seed;
  c.estimated = o.estimated;
  c.fit.l2 = o.l2;
  c.fit.max_iters = o.max_iters;
  c.fit.tolerance = o.tol;
  c.threads = o.threads;
  return c;
}

void cmd_exp_rules(const Options& o) {
  RuleCountConfig cfg;
  cfg.common = experiment_common(o);
  cfg.rule_counts = o.rule_counts;
  emit(o, experiment_rule_count(cfg).to_csv());
}

void cmd_exp_alpha(const Options& o) {
  AlphaConfig cfg;
  cfg.common = experiment_common(o);
  cfg.alphas = o.alphas;
  cfg.rules = o.leaves;
  emit(o, experiment_alpha(cfg).to_csv());
}

void add_synth_flags(CLI::App* sub, Options& o) {
  sub->add_option("--n", o.n, "number of rows")->check(CLI::PositiveNumber);
  sub->add_option("--d", o.d, "feature dimension")->check(CLI::PositiveNumber);
  sub->add_option("--actions", o.actions, "number of actions")->check(CLI::Range(2, 1000));
  sub->add_option("--segments", o.segments, "number of ground-truth segments")
      ->check(CLI::PositiveNumber);
  sub->add_option("--noise", o.noise, "jitter amplitude")->check(CLI::Range(0.0, 0.2));
  sub->add_option("--policy", o.policy, "logging policy")
      ->check(CLI::IsMember({"uniform", "skewed"}));
  sub->add_option("--skew-action", o.skew_action, "favoured action of the skewed policy");
  sub->add_option("--skew-share", o.skew_share, "probability of the favoured action")
      ->check(CLI::Range(0.0, 1.0));
}

void add_fit_flags(CLI::App* sub, Options& o) {
  sub->add_option("--l2", o.l2, "L2 penalty")->check(CLI::NonNegativeNumber);
  sub->add_option("--max-iters", o.max_iters, "gradient descent iteration cap");
  sub->add_option("--tol", o.tol, "gradient max-norm tolerance")->check(CLI::PositiveNumber);
}

void add_kl_flags(CLI::App* sub, Options& o) {
  sub->add_option("--k", o.k, "scale K (number or 'default')");
  sub->add_option("--l", o.l, "shift L (number or 'auto')");
}

}  // namespace

int run(const std::vector<std::string>& args) {
  Options o;
  CLI::App app{"Rule-tree recommendations from logged conversion data", "rulerec"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  app.add_option("--seed", o.seed, "seed for every random draw");
  app.add_option("--threads", o.threads, "worker threads (0 = all cores)");

  auto* gen = app.add_subcommand("generate", "synthesize records.csv and truth.csv");
  add_synth_flags(gen, o);
  gen->add_option("--records", o.records, "output records CSV")->required()->check(kWritable);
  gen->add_option("--truth", o.truth, "output ground-truth probability CSV")
      ->required()
      ->check(kWritable);

  auto* est = app.add_subcommand("estimate", "fit conversion models; write model and probs.csv");
  est->add_option("--records", o.records, "input records CSV")->check(CLI::ExistingFile);
  est->add_option("--oracle", o.oracle, "use this probability CSV verbatim as an oracle model")
      ->check(CLI::ExistingFile);
  est->add_option("--actions", o.action_count, "number of actions (default: max action + 1)");
  add_fit_flags(est, o);
  est->add_option("--model", o.model, "output model document")->required()->check(kWritable);
  est->add_option("--probs", o.probs, "output probability CSV")->required()->check(kWritable);

  auto* tr = app.add_subcommand("transform", "build a weighted training set");
  tr->add_option("--mode", o.mode, "proposed, benchmark or naive")
      ->check(CLI::IsMember({"proposed", "benchmark", "naive"}));
  tr->add_option("--probs", o.probs, "input probability CSV")->check(CLI::ExistingFile);
  tr->add_option("--features", o.features, "CSV with leading f0.. columns")
      ->check(CLI::ExistingFile);
  tr->add_option("--records", o.records, "input records CSV (naive mode, or features)")
      ->check(CLI::ExistingFile);
  tr->add_option("--actions", o.action_count, "number of actions for naive mode");
  add_kl_flags(tr, o);
  tr->add_option("--replication", o.replication, "weights, round or floor-bernoulli")
      ->check(CLI::IsMember({"weights", "round", "floor-bernoulli"}));
  tr->add_option("--out", o.out, "output weighted CSV")->required()->check(kWritable);

  auto* tn = app.add_subcommand("train", "grow a leaf-budgeted tree");
  tn->add_option("--weighted", o.weighted, "input weighted CSV")
      ->required()
      ->check(CLI::ExistingFile);
  tn->add_option("--leaves", o.leaves, "leaf budget R")->check(CLI::PositiveNumber);
  tn->add_option("--min-leaf-weight", o.min_leaf_weight, "minimum weight per leaf")
      ->check(CLI::NonNegativeNumber);
  tn->add_option("--out", o.out, "output tree document")->required()->check(kWritable);

  auto* ru = app.add_subcommand("rules", "print one rule per leaf");
  ru->add_option("--tree", o.tree, "input tree document")->required()->check(CLI::ExistingFile);
  ru->add_option("--names", o.names, "feature names")->delimiter(',');
  ru->add_option("--out", o.out, "output file (default: stdout)")->check(kWritable);

  auto* ev = app.add_subcommand("evaluate", "conversion rate of a tree and its bounds");
  ev->add_option("--tree", o.tree, "input tree document")->required()->check(CLI::ExistingFile);
  ev->add_option("--probs", o.probs, "probability CSV")->required()->check(CLI::ExistingFile);
  ev->add_option("--features", o.features, "CSV with leading f0.. columns")
      ->required()
      ->check(CLI::ExistingFile);
  ev->add_option("--out", o.out, "output file (default: stdout)")->check(kWritable);

  auto* ve = app.add_subcommand("verify", "check the weighted-loss identity on random classifiers");
  ve->add_option("--probs", o.probs, "probability CSV")->required()->check(CLI::ExistingFile);
  ve->add_option("--features", o.features, "CSV with leading f0.. columns")
      ->required()
      ->check(CLI::ExistingFile);
  add_kl_flags(ve, o);
  ve->add_option("--trials", o.trials, "number of random classifiers")
      ->check(CLI::PositiveNumber);
  ve->add_option("--out", o.out, "output file (default: stdout)")->check(kWritable);

  auto* er = app.add_subcommand("exp-rules", "conversion rate against rule count");
  auto* ea = app.add_subcommand("exp-alpha", "conversion rate against fictitious-action strength");
  for (auto* sub : {er, ea}) {
    add_synth_flags(sub, o);
    add_fit_flags(sub, o);
    add_kl_flags(sub, o);
    sub->add_option("--train-fraction", o.train_fraction, "share of rows used for training")
        ->check(CLI::Range(0.0, 1.0));
    sub->add_flag("--estimated", o.estimated, "train on fitted logistic probabilities");
    sub->add_option("--out", o.out, "output curve CSV (default: stdout)")->check(kWritable);
  }
  er->add_option("--rules", o.rule_counts, "rule counts")->delimiter(',');
  ea->add_option("--alphas", o.alphas, "alpha values")->delimiter(',');
  ea->add_option("--leaves", o.leaves, "rule count")->check(CLI::PositiveNumber);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e);
      return 0;
    }
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    const CLI::App* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    if (name == "generate") cmd_generate(o);
    else if (name == "estimate") cmd_estimate(o);
    else if (name == "transform") cmd_transform(o);
    else if (name == "train") cmd_train(o);
    else if (name == "rules") cmd_rules(o);
    else if (name == "evaluate") cmd_evaluate(o);
    else if (name == "verify") return cmd_verify(o);
    else if (name == "exp-rules") cmd_exp_rules(o);
    else if (name == "exp-alpha") cmd_exp_alpha(o);
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace rulerec::cli
