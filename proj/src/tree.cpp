#include "rulerec/tree.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <numeric>

#include <nlohmann/json.hpp>

#include "rulerec/format.hpp"
#include "rulerec/prob_model.hpp"

namespace rulerec {

namespace {

using nlohmann::json;

Action argmax_lowest(std::span<const double> w) {
  Action best = 0;
  for (Action a = 1; a < w.size(); ++a) {
    if (w[a] > w[best]) best = a;
  }
  return best;
}

// W * gini = W - sum w_a^2 / W.
double scaled_impurity(std::span<const double> w, double total) {
  if (total <= 0.0) return 0.0;
  double sq = 0.0;
  for (double x : w) sq += x * x;
  return std::max(0.0, total - sq / total);
}

// A node under construction: positive-weight sample indices presorted by
// each feature.
struct WorkNode {
  std::vector<std::vector<std::uint32_t>> sorted;
  std::vector<double> totals;
  double weight = 0.0;
};

class SplitFinder {
 public:
  SplitFinder(const WeightedSet& samples, double min_leaf_weight)
      : samples_(samples), min_leaf_weight_(min_leaf_weight) {}

  std::optional<SplitCandidate> find(const WorkNode& node) const {
    const double parent = scaled_impurity(node.totals, node.weight);
    const double eps = 1e-12 * node.weight;
    if (parent <= eps || node.sorted.empty() || node.sorted.front().size() < 2) {
      return std::nullopt;
    }
    const std::size_t n_actions = node.totals.size();
    std::optional<SplitCandidate> best;
    std::vector<double> left(n_actions), right(n_actions);
    for (std::size_t f = 0; f < node.sorted.size(); ++f) {
      const auto& order = node.sorted[f];
      std::fill(left.begin(), left.end(), 0.0);
      double left_weight = 0.0;
      for (std::size_t i = 0; i + 1 < order.size(); ++i) {
        const std::uint32_t s = order[i];
        left[samples_.action(s)] += samples_.weight(s);
        left_weight += samples_.weight(s);
        const double here = samples_.features(s)[f];
        const double next = samples_.features(order[i + 1])[f];
        if (!(here < next)) continue;
        const double right_weight = node.weight - left_weight;
        if (min_leaf_weight_ > 0.0 &&
            (left_weight < min_leaf_weight_ || right_weight < min_leaf_weight_)) {
          continue;
        }
        for (std::size_t a = 0; a < n_actions; ++a) {
          right[a] = std::max(0.0, node.totals[a] - left[a]);
        }
        const double decrease = parent - scaled_impurity(left, left_weight) -
                                scaled_impurity(right, right_weight);
        if (decrease <= eps) continue;
        if (!best || decrease > best->decrease + eps) {
          double mid = 0.5 * (here + next);
          if (!(mid < next)) mid = here;
          best = SplitCandidate{f, mid, decrease};
        }
      }
    }
    return best;
  }

 private:
  const WeightedSet& samples_;
  double min_leaf_weight_;
};

WorkNode make_root(const WeightedSet& samples) {
  WorkNode root;
  root.totals.assign(samples.n_actions(), 0.0);
  std::vector<std::uint32_t> active;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples.weight(i) > 0.0) {
      active.push_back(static_cast<std::uint32_t>(i));
      root.totals[samples.action(i)] += samples.weight(i);
      root.weight += samples.weight(i);
    }
  }
  root.sorted.resize(samples.dim());
  for (std::size_t f = 0; f < samples.dim(); ++f) {
    auto& order = root.sorted[f];
    order = active;
    std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
      return samples.features(a)[f] < samples.features(b)[f];
    });
  }
  return root;
}

std::pair<WorkNode, WorkNode> partition(const WeightedSet& samples,
                                        const WorkNode& node,
                                        const SplitCandidate& split) {
  WorkNode left, right;
  left.totals.assign(node.totals.size(), 0.0);
  right.totals.assign(node.totals.size(), 0.0);
  left.sorted.resize(node.sorted.size());
  right.sorted.resize(node.sorted.size());
  auto goes_left = [&](std::uint32_t s) {
    return samples.features(s)[split.feature] <= split.threshold;
  };
  for (std::uint32_t s : node.sorted[split.feature]) {
    WorkNode& side = goes_left(s) ? left : right;
    side.totals[samples.action(s)] += samples.weight(s);
    side.weight += samples.weight(s);
  }
  for (std::size_t f = 0; f < node.sorted.size(); ++f) {
    for (std::uint32_t s : node.sorted[f]) {
      (goes_left(s) ? left : right).sorted[f].push_back(s);
    }
  }
  return {std::move(left), std::move(right)};
}

// Renumbers nodes in depth-first preorder, the layout from_json produces.
std::vector<TreeNode> preorder(const std::vector<TreeNode>& nodes) {
  std::vector<TreeNode> out;
  out.reserve(nodes.size());
  auto visit = [&](auto&& self, std::size_t id) -> std::size_t {
    const std::size_t mine = out.size();
    out.push_back(nodes[id]);
    if (!nodes[id].is_leaf()) {
      const std::size_t l = self(self, nodes[id].left);
      const std::size_t r = self(self, nodes[id].right);
      out[mine].left = l;
      out[mine].right = r;
    }
    return mine;
  };
  visit(visit, 0);
  return out;
}

std::string position(const std::string& path) { return path.empty() ? "/" : path; }

std::size_t parse_node(const json& j, const std::string& path, std::size_t n_actions,
                       std::vector<TreeNode>& nodes) {
  if (!j.is_object()) {
    throw MalformedDocument("tree document " + position(path) + ": node must be an object");
  }
  const std::size_t id = nodes.size();
  nodes.emplace_back();
  try {
    if (j.contains("feature")) {
      TreeNode node;
      node.feature = j.at("feature").get<std::size_t>();
      node.threshold = j.at("threshold").get<double>();
      if (!j.contains("left") || !j.contains("right")) {
        throw MalformedDocument("tree document " + position(path) +
                                ": internal node needs left and right");
      }
      node.left = parse_node(j.at("left"), path + "/left", n_actions, nodes);
      node.right = parse_node(j.at("right"), path + "/right", n_actions, nodes);
      nodes[id] = std::move(node);
    } else {
      TreeNode leaf;
      leaf.action = j.at("action").get<Action>();
      leaf.weights = j.at("weights").get<std::vector<double>>();
      if (leaf.weights.size() != n_actions) {
        throw MalformedDocument("tree document " + position(path) +
                                ": weights must have one entry per action");
      }
      nodes[id] = std::move(leaf);
    }
  } catch (const json::exception& e) {
    throw MalformedDocument("tree document " + position(path) + ": " + e.what());
  }
  return id;
}

json node_to_json(const std::vector<TreeNode>& nodes, std::size_t id) {
  const auto& n = nodes[id];
  if (n.is_leaf()) return json{{"action", n.action}, {"weights", n.weights}};
  return json{{"feature", n.feature},
              {"threshold", n.threshold},
              {"left", node_to_json(nodes, n.left)},
              {"right", node_to_json(nodes, n.right)}};
}

struct Interval {
  double lo = -std::numeric_limits<double>::infinity();  // exclusive
  double hi = std::numeric_limits<double>::infinity();   // inclusive
};

void collect_rules(const RuleTree& tree, std::size_t id,
                   std::vector<std::pair<std::size_t, Interval>>& path,
                   const std::vector<std::string>& names,
                   std::vector<std::string>& out) {
  const auto& node = tree.nodes()[id];
  if (node.is_leaf()) {
    std::string cond;
    for (const auto& [f, iv] : path) {
      const std::string name = names.empty() ? "f" + std::to_string(f) : names[f];
      std::string term;
      if (std::isfinite(iv.lo) && std::isfinite(iv.hi)) {
        term = format_double(iv.lo) + " < " + name + " <= " + format_double(iv.hi);
      } else if (std::isfinite(iv.hi)) {
        term = name + " <= " + format_double(iv.hi);
      } else {
        term = name + " > " + format_double(iv.lo);
      }
      cond += cond.empty() ? term : " AND " + term;
    }
    if (cond.empty()) cond = "TRUE";
    out.push_back("IF " + cond + " THEN action " + std::to_string(node.action));
    return;
  }
  auto descend = [&](std::size_t child, bool go_left) {
    const auto saved = path;
    auto it = std::find_if(path.begin(), path.end(),
                           [&](const auto& p) { return p.first == node.feature; });
    if (it == path.end()) {
      path.emplace_back(node.feature, Interval{});
      it = path.end() - 1;
    }
    if (go_left) {
      it->second.hi = std::min(it->second.hi, node.threshold);
    } else {
      it->second.lo = std::max(it->second.lo, node.threshold);
    }
    collect_rules(tree, child, path, names, out);
    path = saved;
  };
  descend(node.left, true);
  descend(node.right, false);
}

}  // namespace

RuleTree::RuleTree(std::size_t dim, std::size_t n_actions, std::vector<TreeNode> nodes)
    : dim_(dim), n_actions_(n_actions), nodes_(std::move(nodes)) {
  if (nodes_.empty()) throw InvalidInput("tree has no nodes");
  std::vector<int> parents(nodes_.size(), 0);
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& n = nodes_[i];
    if (n.is_leaf()) {
      if (n.action >= n_actions_ || n.weights.size() != n_actions_) {
        throw InvalidInput("tree node " + std::to_string(i) + ": bad leaf");
      }
      if (n.action != argmax_lowest(n.weights)) {
        throw InvalidInput("tree node " + std::to_string(i) +
                           ": leaf action is not the argmax of its weights");
      }
      continue;
    }
    if (n.feature >= dim_ || !std::isfinite(n.threshold)) {
      throw InvalidInput("tree node " + std::to_string(i) + ": bad split");
    }
    if (n.left >= nodes_.size() || n.right >= nodes_.size() || n.left == 0 ||
        n.right == 0 || n.left == n.right) {
      throw InvalidInput("tree node " + std::to_string(i) + ": bad children");
    }
    ++parents[n.left];
    ++parents[n.right];
  }
  for (std::size_t i = 1; i < nodes_.size(); ++i) {
    if (parents[i] != 1) {
      throw InvalidInput("tree node " + std::to_string(i) + " is not reachable exactly once");
    }
  }
}

std::size_t RuleTree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

std::size_t RuleTree::leaf_of(std::span<const double> x) const {
  if (x.size() != dim_) {
    throw DimensionMismatch("tree expects " + std::to_string(dim_) +
                            " features, got " + std::to_string(x.size()));
  }
  std::size_t id = 0;
  while (!nodes_[id].is_leaf()) {
    const auto& n = nodes_[id];
    id = x[n.feature] <= n.threshold ? n.left : n.right;
  }
  return id;
}

Action RuleTree::predict(std::span<const double> x) const {
  return nodes_[leaf_of(x)].action;
}

Classifier RuleTree::as_classifier() const {
  auto shared = std::make_shared<const RuleTree>(*this);
  return [shared](std::span<const double> x) { return shared->predict(x); };
}

std::string RuleTree::to_json() const {
  json doc{{"dim", dim_}, {"actions", n_actions_}, {"tree", node_to_json(nodes_, 0)}};
  return doc.dump(2) + "\n";
}

RuleTree RuleTree::from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw MalformedDocument("tree document: parse error at byte " +
                            std::to_string(e.byte) + ": " + e.what());
  }
  std::size_t dim = 0, n_actions = 0;
  try {
    dim = doc.at("dim").get<std::size_t>();
    n_actions = doc.at("actions").get<std::size_t>();
    if (!doc.contains("tree")) throw MalformedDocument("tree document /: missing 'tree'");
  } catch (const json::exception& e) {
    throw MalformedDocument(std::string("tree document /: ") + e.what());
  }
  std::vector<TreeNode> nodes;
  parse_node(doc.at("tree"), "/tree", n_actions, nodes);
  try {
    return RuleTree(dim, n_actions, std::move(nodes));
  } catch (const InvalidInput& e) {
    throw MalformedDocument(std::string("tree document: ") + e.what());
  }
}

double weighted_gini(std::span<const double> class_weights) {
  double total = 0.0;
  for (double w : class_weights) total += w;
  if (total <= 0.0) return 0.0;
  return scaled_impurity(class_weights, total) / total;
}

std::optional<SplitCandidate> best_split(const WeightedSet& samples,
                                         double min_leaf_weight) {
  return SplitFinder(samples, min_leaf_weight).find(make_root(samples));
}

RuleTree train(const WeightedSet& samples, const TrainOptions& options) {
  if (options.max_leaves < 1) throw InvalidInput("train: leaf budget must be >= 1");
  if (samples.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw InvalidInput("train: too many samples");
  }
  WorkNode root = make_root(samples);
  if (!(root.weight > 0.0)) throw InvalidInput("train: no sample with positive weight");

  const SplitFinder finder(samples, options.min_leaf_weight);
  std::vector<TreeNode> nodes(1);
  struct Pending {
    std::size_t id;
    WorkNode work;
    std::optional<SplitCandidate> split;
  };
  std::vector<Pending> frontier;
  auto open_leaf = [&](std::size_t id, WorkNode work) {
    nodes[id].action = argmax_lowest(work.totals);
    nodes[id].weights = work.totals;
    auto split = options.max_leaves > 1 ? finder.find(work) : std::nullopt;
    frontier.push_back({id, std::move(work), split});
  };
  open_leaf(0, std::move(root));

  std::size_t leaves = 1;
  while (leaves < options.max_leaves) {
    // Largest decrease wins; among equal decreases the earliest-created leaf.
    auto chosen = frontier.end();
    for (auto it = frontier.begin(); it != frontier.end(); ++it) {
      if (!it->split) continue;
      if (chosen == frontier.end() || it->split->decrease > chosen->split->decrease ||
          (it->split->decrease == chosen->split->decrease && it->id < chosen->id)) {
        chosen = it;
      }
    }
    if (chosen == frontier.end()) break;
    Pending parent = std::move(*chosen);
    frontier.erase(chosen);

    auto [left, right] = partition(samples, parent.work, *parent.split);
    parent.work = {};
    const std::size_t left_id = nodes.size();
    nodes.resize(nodes.size() + 2);
    TreeNode& node = nodes[parent.id];
    node.feature = parent.split->feature;
    node.threshold = parent.split->threshold;
    node.left = left_id;
    node.right = left_id + 1;
    node.action = 0;
    node.weights.clear();
    open_leaf(left_id, std::move(left));
    open_leaf(left_id + 1, std::move(right));
    ++leaves;
  }
  return RuleTree(samples.dim(), samples.n_actions(), preorder(nodes));
}

std::vector<std::string> extract_rules(const RuleTree& tree,
                                       const std::vector<std::string>& feature_names) {
  if (!feature_names.empty() && feature_names.size() != tree.dim()) {
    throw InvalidInput("extract_rules: need one name per feature");
  }
  std::vector<std::string> out;
  std::vector<std::pair<std::size_t, Interval>> path;
  collect_rules(tree, 0, path, feature_names, out);
  return out;
}

}  // namespace rulerec
