#include "sonarmark/eval.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "sonarmark/error.hpp"

namespace sonarmark {

ConfusionMatrix::ConfusionMatrix(std::vector<int> class_list)
    : classes_(std::move(class_list)), counts_(classes_.size() * classes_.size(), 0) {
  auto sorted = classes_;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw error(errc::invalid_spec, "confusion matrix classes must be distinct");
  }
}

std::size_t ConfusionMatrix::index_of(int class_id) const {
  const auto it = std::find(classes_.begin(), classes_.end(), class_id);
  if (it == classes_.end()) throw error(errc::unknown_label, "class " + class_name(class_id) + " not in matrix");
  return static_cast<std::size_t>(it - classes_.begin());
}

bool ConfusionMatrix::contains(int class_id) const noexcept {
  return std::find(classes_.begin(), classes_.end(), class_id) != classes_.end();
}

std::size_t ConfusionMatrix::total() const noexcept {
  return std::accumulate(counts_.begin(), counts_.end(), std::size_t{0});
}

std::size_t ConfusionMatrix::trace() const noexcept {
  std::size_t t = 0;
  for (std::size_t i = 0; i < size(); ++i) t += counts_[i * size() + i];
  return t;
}

std::size_t ConfusionMatrix::row_total(std::size_t row) const {
  std::size_t t = 0;
  for (std::size_t j = 0; j < size(); ++j) t += at(row, j);
  return t;
}

void ConfusionMatrix::add(int truth, int predicted, std::size_t count) {
  at(index_of(truth), index_of(predicted)) += count;
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  if (other.classes_ != classes_) throw error(errc::dimension_mismatch, "adding matrices over different classes");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  return *this;
}

ConfusionMatrix confusion(std::span<const int> truth, std::span<const int> predicted,
                          std::vector<int> class_list) {
  if (truth.size() != predicted.size()) {
    throw error(errc::dimension_mismatch, "truth and prediction lengths differ");
  }
  ConfusionMatrix m(std::move(class_list));
  for (std::size_t i = 0; i < truth.size(); ++i) m.add(truth[i], predicted[i]);
  return m;
}

ConfusionMatrix collapse_detection(const ConfusionMatrix& m, int none_class) {
  if (!m.contains(none_class)) throw error(errc::missing_none_class, "detection view needs a None class");
  if (m.size() < 2) throw error(errc::missing_none_class, "detection view needs a landmark class");
  ConfusionMatrix out({none_class, kPresentClass});
  for (std::size_t i = 0; i < m.size(); ++i) {
    const int row = m.class_list()[i] == none_class ? none_class : kPresentClass;
    for (std::size_t j = 0; j < m.size(); ++j) {
      const int col = m.class_list()[j] == none_class ? none_class : kPresentClass;
      out.add(row, col, m.at(i, j));
    }
  }
  return out;
}

ConfusionMatrix landmark_submatrix(const ConfusionMatrix& m, int none_class) {
  std::vector<int> keep;
  for (const int c : m.class_list()) {
    if (c != none_class) keep.push_back(c);
  }
  ConfusionMatrix out(keep);
  for (const int r : keep) {
    for (const int c : keep) out.at(out.index_of(r), out.index_of(c)) = m.at(m.index_of(r), m.index_of(c));
  }
  return out;
}

double accuracy(const ConfusionMatrix& m) {
  const std::size_t total = m.total();
  if (total == 0) throw error(errc::empty_matrix, "accuracy of an empty matrix");
  return static_cast<double>(m.trace()) / static_cast<double>(total);
}

double classification_accuracy(const ConfusionMatrix& m, int none_class) {
  std::size_t correct = 0;
  std::size_t total = 0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m.class_list()[i] == none_class) continue;
    correct += m.at(i, i);
    total += m.row_total(i);
  }
  if (total == 0) throw error(errc::empty_matrix, "no landmark samples to classify");
  return static_cast<double>(correct) / static_cast<double>(total);
}

std::vector<double> per_class_recall(const ConfusionMatrix& m) {
  std::vector<double> recall(m.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (const std::size_t row = m.row_total(i)) {
      recall[i] = static_cast<double>(m.at(i, i)) / static_cast<double>(row);
    }
  }
  return recall;
}

const char* to_string(Task task) noexcept {
  switch (task) {
    case Task::detection: return "detection";
    case Task::classification: return "classification";
    case Task::overall: return "overall";
  }
  return "?";
}

ConfusionMatrix sum_matrices(std::span<const ConfusionMatrix> matrices) {
  if (matrices.empty()) throw error(errc::empty_matrix, "nothing to sum");
  ConfusionMatrix total(matrices.front().class_list());
  for (const auto& m : matrices) total += m;
  return total;
}

namespace {

void fill_stats(MetricReport& report) {
  // Shifted two-pass variance; identical folds give exactly zero.
  const auto& acc = report.fold_accuracies;
  const auto n = static_cast<double>(acc.size());
  const double shift = acc.front();
  double offset = 0.0;
  for (const double a : acc) offset += a - shift;
  offset /= n;
  double ss = 0.0;
  for (const double a : acc) ss += (a - shift - offset) * (a - shift - offset);
  report.accuracy_mean = shift + offset;
  report.accuracy_std = std::sqrt(ss / (n - 1.0));
}

}  // namespace

std::vector<MetricReport> aggregate_folds(std::span<const ConfusionMatrix> folds, int none_class) {
  if (folds.size() < 2) throw error(errc::too_few_folds, "need at least two folds for mean and std");
  const ConfusionMatrix pooled = sum_matrices(folds);

  MetricReport detection;
  detection.task = Task::detection;
  MetricReport classification;
  classification.task = Task::classification;
  MetricReport overall;
  overall.task = Task::overall;
  for (const auto& fold : folds) {
    detection.fold_accuracies.push_back(accuracy(collapse_detection(fold, none_class)));
    classification.fold_accuracies.push_back(classification_accuracy(fold, none_class));
    overall.fold_accuracies.push_back(accuracy(fold));
  }

  const ConfusionMatrix pooled_detection = collapse_detection(pooled, none_class);
  detection.class_list = pooled_detection.class_list();
  detection.per_class_recall = per_class_recall(pooled_detection);

  // Recall here keeps None predictions in the denominator, matching classification_accuracy.
  for (std::size_t i = 0; i < pooled.size(); ++i) {
    if (pooled.class_list()[i] == none_class) continue;
    classification.class_list.push_back(pooled.class_list()[i]);
    classification.per_class_recall.push_back(per_class_recall(pooled)[i]);
  }

  overall.class_list = pooled.class_list();
  overall.per_class_recall = per_class_recall(pooled);

  std::vector<MetricReport> reports{std::move(detection), std::move(classification), std::move(overall)};
  for (auto& r : reports) fill_stats(r);
  return reports;
}

void write_confusion_csv(std::ostream& out, const ConfusionMatrix& m) {
  for (std::size_t j = 0; j < m.size(); ++j) out << (j ? "," : "") << class_name(m.class_list()[j]);
  out << '\n';
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t j = 0; j < m.size(); ++j) out << (j ? "," : "") << m.at(i, j);
    out << '\n';
  }
}

ConfusionMatrix read_confusion_csv(std::istream& in) {
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      if (!cell.empty() && cell.back() == '\r') cell.pop_back();
      cells.push_back(cell);
    }
    return cells;
  };
  std::string line;
  if (!std::getline(in, line)) throw error(errc::corrupt_file, "confusion CSV is empty");
  std::vector<int> classes;
  for (const auto& name : split(line)) classes.push_back(parse_class(name));
  ConfusionMatrix m(classes);
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (!std::getline(in, line)) throw error(errc::corrupt_file, "confusion CSV has too few rows");
    const auto cells = split(line);
    if (cells.size() != classes.size()) throw error(errc::corrupt_file, "confusion CSV row has wrong width");
    for (std::size_t j = 0; j < cells.size(); ++j) {
      try {
        if (cells[j].empty() || cells[j].front() == '-') throw std::invalid_argument(cells[j]);
        std::size_t used = 0;
        const unsigned long long v = std::stoull(cells[j], &used);
        if (used != cells[j].size()) throw std::invalid_argument(cells[j]);
        m.at(i, j) = static_cast<std::size_t>(v);
      } catch (const std::exception&) {
        throw error(errc::corrupt_file, "bad count '" + cells[j] + "' in confusion CSV");
      }
    }
  }
  return m;
}

std::string render_grid(const ConfusionMatrix& m, const std::string& title) {
  std::string out;
  if (!title.empty()) out += title + '\n';
  std::size_t width = 7;
  for (const int c : m.class_list()) width = std::max(width, class_name(c).size() + 1);
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t j = 0; j < m.size(); ++j) width = std::max(width, std::to_string(m.at(i, j)).size() + 1);
  }
  out += fmt::format("{:>{}}", "true\\pred", width + 2);
  for (const int c : m.class_list()) out += fmt::format("{:>{}}", class_name(c), width);
  out += '\n';
  for (std::size_t i = 0; i < m.size(); ++i) {
    out += fmt::format("{:>{}}", class_name(m.class_list()[i]), width + 2);
    for (std::size_t j = 0; j < m.size(); ++j) out += fmt::format("{:>{}}", m.at(i, j), width);
    out += '\n';
  }
  return out;
}

}  // namespace sonarmark
