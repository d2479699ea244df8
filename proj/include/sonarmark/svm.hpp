#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "sonarmark/eval.hpp"
#include "sonarmark/parallel.hpp"

namespace sonarmark {

/// Dense row-major sample matrix.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}
  static FeatureMatrix from_rows(const std::vector<std::vector<double>>& rows);

  [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
  [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
  [[nodiscard]] std::span<const double> row(std::size_t i) const noexcept {
    return {data_.data() + i * cols_, cols_};
  }
  [[nodiscard]] std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }

  void append_row(std::span<const double> values);
  /// Rows selected by index, in the given order.
  [[nodiscard]] FeatureMatrix select(std::span<const std::size_t> indices) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// decision(x) = <weights, x> + bias; positive side is classes.first.
struct LinearModel {
  std::vector<double> weights;
  double bias = 0.0;
  std::pair<int, int> classes{+1, -1};

  [[nodiscard]] double decision(std::span<const double> x) const;
};

struct TrainConfig {
  double c = 1.0;
  double tolerance = 1e-4;         // KKT tolerance and maximal-violating-pair stopping gap
  std::size_t max_passes = 1000;   // iteration cap is max_passes * n
  std::uint64_t seed = 0;          // fixes the scan order used to break working-set ties
};

/// Passed to the optional observer after every SMO step.
struct SolverStep {
  std::size_t iteration = 0;
  std::span<const double> alpha;
  double dual_objective = 0.0;
};

struct BinaryTrainResult {
  LinearModel model;
  std::vector<double> alpha;
  double dual_objective = 0.0;  // sum(alpha) - 1/2 |w|^2
  std::size_t iterations = 0;
  bool converged = false;       // stopping gap reached and every sample meets KKT at tolerance
};

/// Soft-margin linear SVM dual solved by SMO with second-order working-set selection.
/// Labels must be +1 / -1 with at least one of each.
[[nodiscard]] BinaryTrainResult train_binary(const FeatureMatrix& x, std::span<const int> y,
                                             const TrainConfig& config,
                                             const std::function<void(const SolverStep&)>& observer = {});

/// sum(alpha) - 1/2 sum_ij alpha_i alpha_j y_i y_j <x_i, x_j>.
[[nodiscard]] double dual_objective(const FeatureMatrix& x, std::span<const int> y,
                                    std::span<const double> alpha);

/// Largest violation of the soft-margin KKT conditions for a given (alpha, model).
[[nodiscard]] double max_kkt_violation(const FeatureMatrix& x, std::span<const int> y,
                                       std::span<const double> alpha, const LinearModel& model, double c);

struct BinaryPrediction {
  int label = +1;  // +1 or -1; an exact zero decision counts as +1
  double value = 0.0;
};

[[nodiscard]] BinaryPrediction predict_binary(const LinearModel& model, std::span<const double> x);

/// One model per unordered class pair (class_list[i], class_list[j]), i < j, in that order.
struct OvOEnsemble {
  std::vector<int> class_list;
  std::vector<LinearModel> models;
  bool converged = true;

  [[nodiscard]] std::size_t dimension() const noexcept {
    return models.empty() ? 0 : models.front().weights.size();
  }
};

/// class_order defaults to the sorted distinct labels; when given it must cover every label.
[[nodiscard]] OvOEnsemble train_ovo(const FeatureMatrix& x, std::span<const int> y,
                                    const TrainConfig& config, execution policy = execution::parallel,
                                    std::optional<std::vector<int>> class_order = std::nullopt);

struct OvOPrediction {
  int label = 0;
  std::vector<std::size_t> votes;  // per class_list entry
  std::vector<double> evidence;    // summed |decision| over each class's pairwise wins
  std::vector<double> decisions;   // per model, in ensemble order
};

/// Majority vote; ties go to the larger evidence, then to the earlier class in class_list.
[[nodiscard]] OvOPrediction predict_ovo(const OvOEnsemble& ensemble, std::span<const double> x);

enum class CvScheme {
  k_fold,            // folds disjoint and covering every sample
  repeated_holdout,  // `folds` independent random splits holding out holdout_fraction
};

struct CvConfig {
  std::size_t folds = 20;
  bool stratified = true;
  std::uint64_t seed = 0;
  CvScheme scheme = CvScheme::k_fold;
  double holdout_fraction = 0.2;
};

struct CvResult {
  std::vector<ConfusionMatrix> folds;
  std::vector<std::vector<std::size_t>> held_out;  // test indices per fold, ascending
  bool converged = true;
};

/// Held-out index sets per fold; throws error(too_few_samples) when stratification is impossible.
[[nodiscard]] std::vector<std::vector<std::size_t>> assign_folds(std::span<const int> y, const CvConfig& cv);

[[nodiscard]] CvResult cross_validate(const FeatureMatrix& x, std::span<const int> y, const CvConfig& cv,
                                      const TrainConfig& config, execution policy = execution::parallel);

}  // namespace sonarmark
