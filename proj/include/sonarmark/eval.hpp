#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "sonarmark/labels.hpp"

namespace sonarmark {

/// Rows are true classes, columns predicted classes, both in class_list order.
class ConfusionMatrix {
 public:
  ConfusionMatrix() = default;
  explicit ConfusionMatrix(std::vector<int> class_list);

  [[nodiscard]] const std::vector<int>& class_list() const noexcept { return classes_; }
  [[nodiscard]] std::size_t size() const noexcept { return classes_.size(); }
  [[nodiscard]] std::size_t at(std::size_t row, std::size_t col) const { return counts_.at(row * size() + col); }
  [[nodiscard]] std::size_t& at(std::size_t row, std::size_t col) { return counts_.at(row * size() + col); }
  [[nodiscard]] std::size_t index_of(int class_id) const;
  [[nodiscard]] bool contains(int class_id) const noexcept;
  [[nodiscard]] std::size_t total() const noexcept;
  [[nodiscard]] std::size_t trace() const noexcept;
  [[nodiscard]] std::size_t row_total(std::size_t row) const;

  void add(int truth, int predicted, std::size_t count = 1);
  ConfusionMatrix& operator+=(const ConfusionMatrix& other);

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  std::vector<int> classes_;
  std::vector<std::size_t> counts_;
};

/// Throws error(dimension_mismatch) on length mismatch, error(unknown_label) on stray labels.
[[nodiscard]] ConfusionMatrix confusion(std::span<const int> truth, std::span<const int> predicted,
                                        std::vector<int> class_list);

/// Merges every landmark class into kPresentClass; result is ordered {none, present}.
[[nodiscard]] ConfusionMatrix collapse_detection(const ConfusionMatrix& m,
                                                 int none_class = class_id(Label::None));

/// The landmark-by-landmark block (None row and column dropped).
[[nodiscard]] ConfusionMatrix landmark_submatrix(const ConfusionMatrix& m,
                                                 int none_class = class_id(Label::None));

/// trace / total; throws error(empty_matrix) when total is zero.
[[nodiscard]] double accuracy(const ConfusionMatrix& m);

/// Size accuracy over landmark rows only; predicting None for a landmark counts as an error.
[[nodiscard]] double classification_accuracy(const ConfusionMatrix& m,
                                             int none_class = class_id(Label::None));

/// Per-row recall; NaN for rows with no samples.
[[nodiscard]] std::vector<double> per_class_recall(const ConfusionMatrix& m);

enum class Task { detection, classification, overall };
[[nodiscard]] const char* to_string(Task task) noexcept;

struct MetricReport {
  Task task = Task::overall;
  double accuracy_mean = 0.0;
  double accuracy_std = 0.0;  // sample standard deviation across folds
  std::vector<double> fold_accuracies;
  std::vector<int> class_list;
  std::vector<double> per_class_recall;  // from the fold-summed matrix of this task's view
};

[[nodiscard]] ConfusionMatrix sum_matrices(std::span<const ConfusionMatrix> matrices);

/// One report per task in the order detection, classification, overall. Needs >= 2 folds.
[[nodiscard]] std::vector<MetricReport> aggregate_folds(std::span<const ConfusionMatrix> folds,
                                                        int none_class = class_id(Label::None));

/// Header row = class names, then one row of counts per true class.
void write_confusion_csv(std::ostream& out, const ConfusionMatrix& m);
[[nodiscard]] ConfusionMatrix read_confusion_csv(std::istream& in);

/// Fixed-width text grid with row/column labels, for terminal reports.
[[nodiscard]] std::string render_grid(const ConfusionMatrix& m, const std::string& title = {});

}  // namespace sonarmark
