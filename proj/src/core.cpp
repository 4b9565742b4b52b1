#include "rulerec/core.hpp"

#include <cmath>
#include <string>

namespace rulerec {

namespace {

void require_finite(std::span<const double> values, const char* what) {
  for (std::size_t j = 0; j < values.size(); ++j) {
    if (!std::isfinite(values[j])) {
      throw InvalidInput(std::string(what) + ": non-finite value at column " +
                         std::to_string(j));
    }
  }
}

void require_probability_row(std::span<const double> p_row) {
  if (p_row.size() < 2) {
    throw InvalidInput("probability row needs at least 2 actions, got " +
                       std::to_string(p_row.size()));
  }
  for (std::size_t a = 0; a < p_row.size(); ++a) {
    const double p = p_row[a];
    if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
      throw InvalidInput("probability out of [0,1] for action " +
                         std::to_string(a));
    }
  }
}

}  // namespace

FeatureMatrix::FeatureMatrix(std::size_t rows, std::size_t dim)
    : rows_(rows), dim_(dim), values_(rows * dim, 0.0) {}

FeatureMatrix::FeatureMatrix(std::size_t rows, std::size_t dim,
                             std::vector<double> values)
    : rows_(rows), dim_(dim), values_(std::move(values)) {
  if (values_.size() != rows_ * dim_) {
    throw DimensionMismatch("feature matrix: expected " +
                            std::to_string(rows_ * dim_) + " values, got " +
                            std::to_string(values_.size()));
  }
  require_finite(values_, "feature matrix");
}

FeatureMatrix FeatureMatrix::from_rows(
    const std::vector<std::vector<double>>& rows) {
  const std::size_t dim = rows.empty() ? 0 : rows.front().size();
  FeatureMatrix m(0, dim);
  for (const auto& r : rows) m.append(r);
  return m;
}

void FeatureMatrix::append(std::span<const double> row) {
  if (row.size() != dim_) {
    throw DimensionMismatch("feature row of length " +
                            std::to_string(row.size()) + ", expected " +
                            std::to_string(dim_));
  }
  require_finite(row, "feature row");
  values_.insert(values_.end(), row.begin(), row.end());
  ++rows_;
}

FeatureMatrix FeatureMatrix::select(std::span<const std::size_t> indices) const {
  FeatureMatrix out(0, dim_);
  out.values_.reserve(indices.size() * dim_);
  for (std::size_t i : indices) out.append(row(i));
  return out;
}

void validate_records(std::span<const HistoryRecord> records,
                      std::size_t n_actions) {
  if (records.empty()) return;
  const std::size_t dim = records.front().features.size();
  for (std::size_t n = 0; n < records.size(); ++n) {
    const auto& r = records[n];
    if (r.features.size() != dim) {
      throw DimensionMismatch("record " + std::to_string(n) + " has " +
                              std::to_string(r.features.size()) +
                              " features, expected " + std::to_string(dim));
    }
    require_finite(r.features, ("record " + std::to_string(n)).c_str());
    if (r.action >= n_actions) {
      throw InvalidInput("record " + std::to_string(n) + ": action " +
                         std::to_string(r.action) + " out of range");
    }
    if (r.outcome != 0 && r.outcome != 1) {
      throw InvalidInput("record " + std::to_string(n) + ": outcome must be 0 or 1");
    }
  }
}

FeatureMatrix features_of(std::span<const HistoryRecord> records) {
  FeatureMatrix m(0, records.empty() ? 0 : records.front().features.size());
  for (const auto& r : records) m.append(r.features);
  return m;
}

ProbTable::ProbTable(std::size_t rows, std::size_t actions, std::vector<double> p)
    : rows_(rows), actions_(actions), p_(std::move(p)) {
  if (p_.size() != rows_ * actions_) {
    throw DimensionMismatch("probability table: expected " +
                            std::to_string(rows_ * actions_) + " values, got " +
                            std::to_string(p_.size()));
  }
  for (std::size_t i = 0; i < p_.size(); ++i) {
    if (!std::isfinite(p_[i]) || p_[i] < 0.0 || p_[i] > 1.0) {
      throw InvalidInput("probability table: entry (" +
                         std::to_string(i / actions_) + ", " +
                         std::to_string(i % actions_) + ") outside [0,1]");
    }
  }
}

ProbTable ProbTable::from_rows(const std::vector<std::vector<double>>& rows) {
  const std::size_t actions = rows.empty() ? 0 : rows.front().size();
  std::vector<double> flat;
  flat.reserve(rows.size() * actions);
  for (const auto& r : rows) {
    if (r.size() != actions) {
      throw DimensionMismatch("probability rows of unequal length");
    }
    flat.insert(flat.end(), r.begin(), r.end());
  }
  return ProbTable(rows.size(), actions, std::move(flat));
}

ProbTable ProbTable::select(std::span<const std::size_t> indices) const {
  std::vector<double> flat;
  flat.reserve(indices.size() * actions_);
  for (std::size_t n : indices) {
    auto r = row(n);
    flat.insert(flat.end(), r.begin(), r.end());
  }
  return ProbTable(indices.size(), actions_, std::move(flat));
}

void WeightedSet::add(std::span<const double> x, Action action, double weight) {
  if (action >= n_actions_) {
    throw InvalidInput("weighted sample action " + std::to_string(action) +
                       " out of range [0, " + std::to_string(n_actions_) + ")");
  }
  if (!std::isfinite(weight) || weight < 0.0) {
    throw InvalidInput("weighted sample weight must be finite and >= 0");
  }
  features_.append(x);
  actions_.push_back(action);
  weights_.push_back(weight);
}

double WeightedSet::total_weight() const {
  double total = 0.0;
  for (double w : weights_) total += w;
  return total;
}

WeightedSample WeightedSet::sample(std::size_t i) const {
  auto x = features(i);
  return {std::vector<double>(x.begin(), x.end()), actions_[i], weights_[i]};
}

Classifier constant_policy(Action a) {
  return [a](std::span<const double>) { return a; };
}

Action optimal_action(std::span<const double> p_row) {
  require_probability_row(p_row);
  Action best = 0;
  for (Action a = 1; a < p_row.size(); ++a) {
    if (p_row[a] > p_row[best]) best = a;
  }
  return best;
}

RegretRow regret_row(std::span<const double> p_row) {
  RegretRow out;
  out.best = optimal_action(p_row);
  const double top = p_row[out.best];
  out.q.resize(p_row.size());
  for (std::size_t a = 0; a < p_row.size(); ++a) out.q[a] = top - p_row[a];
  return out;
}

Action checked_prediction(const Classifier& h, std::span<const double> x,
                          std::size_t n_actions) {
  const Action a = h(x);
  if (a >= n_actions) {
    throw InvalidClassifier("classifier returned action " + std::to_string(a) +
                            " but only " + std::to_string(n_actions) +
                            " actions exist");
  }
  return a;
}

double loss_s(const Classifier& h, const ProbTable& probs,
              const FeatureMatrix& features) {
  if (probs.rows() != features.rows()) {
    throw DimensionMismatch("loss_s: " + std::to_string(probs.rows()) +
                            " probability rows vs " +
                            std::to_string(features.rows()) + " feature rows");
  }
  double total = 0.0;
  for (std::size_t n = 0; n < probs.rows(); ++n) {
    const auto p = probs.row(n);
    const Action chosen = checked_prediction(h, features.row(n), probs.actions());
    total += p[optimal_action(p)] - p[chosen];
  }
  return total;
}

double loss_t(const Classifier& h, const WeightedSet& weighted) {
  double total = 0.0;
  for (std::size_t i = 0; i < weighted.size(); ++i) {
    const Action chosen =
        checked_prediction(h, weighted.features(i), weighted.n_actions());
    if (chosen != weighted.action(i)) total += weighted.weight(i);
  }
  return total;
}

}  // namespace rulerec
