#include "rulerec/prob_model.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "rulerec/parallel.hpp"

namespace rulerec {

namespace {

using nlohmann::json;

double softplus(double z) {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

LogisticObjective::LogisticObjective(FeatureMatrix design,
                                     std::vector<double> outcomes, double l2)
    : design_(std::move(design)), outcomes_(std::move(outcomes)), l2_(l2) {
  if (design_.rows() != outcomes_.size()) {
    throw DimensionMismatch("logistic objective: design and outcome sizes differ");
  }
  if (design_.rows() == 0) throw InvalidInput("logistic objective: no rows");
}

double LogisticObjective::value(std::span<const double> w) const {
  const std::size_t d = design_.dim();
  double total = 0.0;
  for (std::size_t i = 0; i < design_.rows(); ++i) {
    const auto x = design_.row(i);
    double z = w[0];
    for (std::size_t j = 0; j < d; ++j) z += w[j + 1] * x[j];
    total += softplus(z) - outcomes_[i] * z;
  }
  double penalty = 0.0;
  for (std::size_t j = 1; j <= d; ++j) penalty += w[j] * w[j];
  return total / static_cast<double>(design_.rows()) + 0.5 * l2_ * penalty;
}

double LogisticObjective::value_and_gradient(std::span<const double> w,
                                             std::span<double> grad) const {
  const std::size_t d = design_.dim();
  const double inv_n = 1.0 / static_cast<double>(design_.rows());
  std::fill(grad.begin(), grad.end(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < design_.rows(); ++i) {
    const auto x = design_.row(i);
    double z = w[0];
    for (std::size_t j = 0; j < d; ++j) z += w[j + 1] * x[j];
    total += softplus(z) - outcomes_[i] * z;
    const double residual = sigmoid(z) - outcomes_[i];
    grad[0] += residual;
    for (std::size_t j = 0; j < d; ++j) grad[j + 1] += residual * x[j];
  }
  double penalty = 0.0;
  for (std::size_t j = 0; j <= d; ++j) grad[j] *= inv_n;
  for (std::size_t j = 1; j <= d; ++j) {
    grad[j] += l2_ * w[j];
    penalty += w[j] * w[j];
  }
  return total * inv_n + 0.5 * l2_ * penalty;
}

std::vector<double> LogisticObjective::curvature_bounds() const {
  std::vector<double> d(n_params(), 0.0);
  d[0] = 0.25;
  for (std::size_t i = 0; i < design_.rows(); ++i) {
    const auto x = design_.row(i);
    for (std::size_t j = 0; j < x.size(); ++j) d[j + 1] += x[j] * x[j];
  }
  const double n = static_cast<double>(design_.rows());
  for (std::size_t j = 1; j < d.size(); ++j) d[j] = 0.25 * d[j] / n + l2_;
  for (double& v : d) v = std::max(v, 1e-12);
  return d;
}

std::vector<double> minimize_logistic(const LogisticObjective& objective,
                                      const FitOptions& options,
                                      DescentTrace* trace) {
  constexpr double kArmijo = 1e-4;
  constexpr double kMinStep = 1e-20;
  const std::size_t p = objective.n_params();
  const std::vector<double> precond = objective.curvature_bounds();
  std::vector<double> w(p, 0.0), grad(p), candidate(p);
  double loss = objective.value_and_gradient(w, grad);
  if (trace) {
    *trace = {};
    trace->losses.push_back(loss);
  }
  double step = 1.0;
  std::size_t iter = 0;
  bool converged = max_abs(grad) <= options.tolerance;
  while (!converged && iter < options.max_iters) {
    double decrease = 0.0;
    for (std::size_t j = 0; j < p; ++j) decrease += grad[j] * grad[j] / precond[j];
    double next_loss;
    while (true) {
      for (std::size_t j = 0; j < p; ++j) candidate[j] = w[j] - step * grad[j] / precond[j];
      next_loss = objective.value(candidate);
      if (next_loss <= loss - kArmijo * step * decrease) break;
      step *= 0.5;
      if (step < kMinStep) break;
    }
    if (step < kMinStep) break;  // no further decrease representable
    w.swap(candidate);
    loss = objective.value_and_gradient(w, grad);
    ++iter;
    if (trace) trace->losses.push_back(loss);
    converged = max_abs(grad) <= options.tolerance;
    step = std::min(step * 2.0, 1e6);
  }
  if (trace) {
    trace->iterations = iter;
    trace->converged = converged;
  }
  return w;
}

ConversionModel ConversionModel::oracle(ProbTable table, std::size_t dim) {
  ConversionModel m;
  m.kind_ = ModelKind::kOracle;
  m.dim_ = dim;
  m.n_actions_ = table.actions();
  m.table_ = std::move(table);
  return m;
}

ConversionModel ConversionModel::logistic(std::size_t dim, std::size_t n_actions,
                                          std::vector<double> mean,
                                          std::vector<double> scale,
                                          std::vector<std::vector<double>> params) {
  if (mean.size() != dim || scale.size() != dim) {
    throw DimensionMismatch("logistic model: standardization vectors must have length d");
  }
  if (params.size() != n_actions) {
    throw DimensionMismatch("logistic model: need one parameter vector per action");
  }
  for (const auto& w : params) {
    if (w.size() != dim + 1) {
      throw DimensionMismatch("logistic model: parameter vector length must be d+1");
    }
  }
  ConversionModel m;
  m.kind_ = ModelKind::kLogistic;
  m.dim_ = dim;
  m.n_actions_ = n_actions;
  m.mean_ = std::move(mean);
  m.scale_ = std::move(scale);
  m.params_ = std::move(params);
  return m;
}

std::vector<double> ConversionModel::predict_row(std::span<const double> x,
                                                 std::size_t row_id) const {
  if (x.size() != dim_) {
    throw DimensionMismatch("model expects " + std::to_string(dim_) +
                            " features, got " + std::to_string(x.size()));
  }
  if (kind_ == ModelKind::kOracle) {
    if (row_id >= table_.rows()) {
      throw MissingRow("oracle model has no row " +
                       (row_id == kNoRow ? std::string("(none given)")
                                         : std::to_string(row_id)));
    }
    const auto r = table_.row(row_id);
    return {r.begin(), r.end()};
  }
  std::vector<double> out(n_actions_);
  for (std::size_t a = 0; a < n_actions_; ++a) {
    const auto& w = params_[a];
    double z = w[0];
    for (std::size_t j = 0; j < dim_; ++j) z += w[j + 1] * (x[j] - mean_[j]) / scale_[j];
    // Clamped so predictions stay strictly inside (0, 1).
    out[a] = sigmoid(std::clamp(z, -36.0, 36.0));
  }
  return out;
}

ProbTable ConversionModel::predict(const FeatureMatrix& features) const {
  std::vector<double> flat;
  flat.reserve(features.rows() * n_actions_);
  for (std::size_t n = 0; n < features.rows(); ++n) {
    const auto p = predict_row(features.row(n), n);
    flat.insert(flat.end(), p.begin(), p.end());
  }
  return ProbTable(features.rows(), n_actions_, std::move(flat));
}

std::string ConversionModel::to_json() const {
  json doc;
  doc["kind"] = kind_ == ModelKind::kOracle ? "oracle" : "logistic";
  doc["dim"] = dim_;
  doc["actions"] = n_actions_;
  if (kind_ == ModelKind::kOracle) {
    json rows = json::array();
    for (std::size_t n = 0; n < table_.rows(); ++n) {
      const auto r = table_.row(n);
      rows.push_back(std::vector<double>(r.begin(), r.end()));
    }
    doc["probs"] = std::move(rows);
  } else {
    doc["mean"] = mean_;
    doc["scale"] = scale_;
    doc["params"] = params_;
  }
  return doc.dump(2) + "\n";
}

ConversionModel ConversionModel::from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw MalformedDocument("model document: parse error at byte " +
                            std::to_string(e.byte) + ": " + e.what());
  }
  try {
    const auto kind = doc.at("kind").get<std::string>();
    const auto dim = doc.at("dim").get<std::size_t>();
    const auto actions = doc.at("actions").get<std::size_t>();
    if (kind == "oracle") {
      auto rows = doc.at("probs").get<std::vector<std::vector<double>>>();
      auto table = ProbTable::from_rows(rows);
      if (!rows.empty() && table.actions() != actions) {
        throw MalformedDocument("model document: /probs row width != actions");
      }
      return oracle(std::move(table), dim);
    }
    if (kind != "logistic") {
      throw MalformedDocument("model document: /kind must be oracle or logistic");
    }
    return logistic(dim, actions, doc.at("mean").get<std::vector<double>>(),
                    doc.at("scale").get<std::vector<double>>(),
                    doc.at("params").get<std::vector<std::vector<double>>>());
  } catch (const json::exception& e) {
    throw MalformedDocument(std::string("model document: ") + e.what());
  }
}

ConversionModel fit(std::span<const HistoryRecord> records, std::size_t n_actions,
                    const FitOptions& options) {
  if (records.empty()) throw InvalidInput("fit: no records");
  validate_records(records, n_actions);
  const std::size_t d = records.front().features.size();
  const double n = static_cast<double>(records.size());

  std::vector<double> mean(d, 0.0), scale(d, 1.0);
  for (const auto& r : records) {
    for (std::size_t j = 0; j < d; ++j) mean[j] += r.features[j];
  }
  for (double& m : mean) m /= n;
  std::vector<double> var(d, 0.0);
  for (const auto& r : records) {
    for (std::size_t j = 0; j < d; ++j) {
      const double c = r.features[j] - mean[j];
      var[j] += c * c;
    }
  }
  for (std::size_t j = 0; j < d; ++j) {
    const double sd = std::sqrt(var[j] / n);
    // Constant columns standardize to 0 and drop out of the fit.
    if (sd > 0.0) scale[j] = sd;
  }

  std::vector<std::vector<std::size_t>> by_action(n_actions);
  for (std::size_t i = 0; i < records.size(); ++i) by_action[records[i].action].push_back(i);
  for (std::size_t a = 0; a < n_actions; ++a) {
    if (by_action[a].empty()) {
      throw InvalidInput("fit: action " + std::to_string(a) + " has no records");
    }
  }

  std::vector<std::vector<double>> params(n_actions);
  parallel_for(n_actions, options.threads, [&](std::size_t a) {
    FeatureMatrix design(by_action[a].size(), d);
    std::vector<double> y(by_action[a].size());
    for (std::size_t i = 0; i < by_action[a].size(); ++i) {
      const auto& r = records[by_action[a][i]];
      auto row = design.row(i);
      for (std::size_t j = 0; j < d; ++j) row[j] = (r.features[j] - mean[j]) / scale[j];
      y[i] = r.outcome;
    }
    LogisticObjective objective(std::move(design), std::move(y), options.l2);
    params[a] = minimize_logistic(objective, options);
  });
  return ConversionModel::logistic(d, n_actions, std::move(mean), std::move(scale),
                                   std::move(params));
}

}  // namespace rulerec
