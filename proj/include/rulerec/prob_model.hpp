#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "rulerec/core.hpp"

namespace rulerec {

class MissingRow : public Error {
 public:
  using Error::Error;
};

class MalformedDocument : public Error {
 public:
  using Error::Error;
};

struct FitOptions {
  double l2 = 1e-2;
  std::size_t max_iters = 10000;
  double tolerance = 1e-8;
  std::uint64_t seed = 0;  // unused: the optimizer is deterministic
  unsigned threads = 0;
};

// Regularized mean logistic loss over one action's records:
//   (1/n) sum_i [log(1 + e^{z_i}) - y_i z_i] + (l2/2) sum_{j>=1} w_j^2,
// with z_i = w_0 + sum_j w_j x_ij. The bias w_0 is not penalized.
class LogisticObjective {
 public:
  LogisticObjective(FeatureMatrix design, std::vector<double> outcomes, double l2);

  std::size_t n_params() const { return design_.dim() + 1; }
  double value(std::span<const double> w) const;
  // Writes the gradient into grad (size n_params) and returns the value.
  double value_and_gradient(std::span<const double> w, std::span<double> grad) const;
  // Per-parameter upper bounds on the Hessian diagonal: 1/4 mean(x_j^2) plus
  // the penalty. Used as a fixed diagonal preconditioner.
  std::vector<double> curvature_bounds() const;

 private:
  FeatureMatrix design_;
  std::vector<double> outcomes_;
  double l2_;
};

struct DescentTrace {
  std::vector<double> losses;  // objective after each accepted step, [0] = start
  std::size_t iterations = 0;
  bool converged = false;
};

// Full-batch gradient descent, diagonally preconditioned by the curvature
// bounds, with Armijo backtracking, starting from zero.
// Stops when max |gradient| <= tolerance or after max_iters steps.
std::vector<double> minimize_logistic(const LogisticObjective& objective,
                                      const FitOptions& options,
                                      DescentTrace* trace = nullptr);

enum class ModelKind { kOracle, kLogistic };

class ConversionModel {
 public:
  static constexpr std::size_t kNoRow = std::numeric_limits<std::size_t>::max();

  static ConversionModel oracle(ProbTable table, std::size_t dim);
  static ConversionModel logistic(std::size_t dim, std::size_t n_actions,
                                  std::vector<double> mean, std::vector<double> scale,
                                  std::vector<std::vector<double>> params);

  ModelKind kind() const { return kind_; }
  std::size_t dim() const { return dim_; }
  std::size_t n_actions() const { return n_actions_; }
  const std::vector<double>& mean() const { return mean_; }
  const std::vector<double>& scale() const { return scale_; }
  const std::vector<std::vector<double>>& params() const { return params_; }
  const ProbTable& table() const { return table_; }

  // Oracle models look rows up by row_id and return them verbatim.
  std::vector<double> predict_row(std::span<const double> x,
                                  std::size_t row_id = kNoRow) const;
  // Predicts every row, using the row index as the oracle key.
  ProbTable predict(const FeatureMatrix& features) const;

  std::string to_json() const;
  static ConversionModel from_json(const std::string& text);

  friend bool operator==(const ConversionModel&, const ConversionModel&) = default;

 private:
  ModelKind kind_ = ModelKind::kLogistic;
  std::size_t dim_ = 0;
  std::size_t n_actions_ = 0;
  std::vector<double> mean_;
  std::vector<double> scale_;
  std::vector<std::vector<double>> params_;  // per action: bias, then d coefficients
  ProbTable table_;
};

/// Fits one L2-regularized logistic regression per action on that action's
/// records, over features standardized with statistics from all records.
ConversionModel fit(std::span<const HistoryRecord> records, std::size_t n_actions,
                    const FitOptions& options = {});

}  // namespace rulerec
