#include "sonarmark/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "sonarmark/error.hpp"
#include "sonarmark/rng.hpp"

namespace sonarmark {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTau = 1e-12;

double dot(std::span<const double> a, std::span<const double> b) noexcept {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

std::vector<int> distinct_sorted(std::span<const int> y) {
  std::vector<int> classes(y.begin(), y.end());
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  return classes;
}

void check_dimensions(const FeatureMatrix& x, std::span<const int> y) {
  if (x.rows() != y.size()) {
    throw error(errc::dimension_mismatch, fmt::format("{} samples but {} labels", x.rows(), y.size()));
  }
}

}  // namespace

FeatureMatrix FeatureMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
  FeatureMatrix m;
  for (const auto& r : rows) m.append_row(r);
  return m;
}

void FeatureMatrix::append_row(std::span<const double> values) {
  if (rows_ == 0 && data_.empty()) cols_ = values.size();
  if (values.size() != cols_) {
    throw error(errc::dimension_mismatch, fmt::format("row of {} values in a {}-column matrix", values.size(), cols_));
  }
  data_.insert(data_.end(), values.begin(), values.end());
  ++rows_;
}

FeatureMatrix FeatureMatrix::select(std::span<const std::size_t> indices) const {
  FeatureMatrix out(indices.size(), cols_);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto src = row(indices[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

double LinearModel::decision(std::span<const double> x) const {
  if (x.size() != weights.size()) {
    throw error(errc::dimension_mismatch,
                fmt::format("model expects {} features, got {}", weights.size(), x.size()));
  }
  return dot(weights, x) + bias;
}

double dual_objective(const FeatureMatrix& x, std::span<const int> y, std::span<const double> alpha) {
  check_dimensions(x, y);
  std::vector<double> w(x.cols(), 0.0);
  double sum_alpha = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    sum_alpha += alpha[i];
    const auto xi = x.row(i);
    for (std::size_t k = 0; k < w.size(); ++k) w[k] += alpha[i] * y[i] * xi[k];
  }
  return sum_alpha - 0.5 * dot(w, w);
}

double max_kkt_violation(const FeatureMatrix& x, std::span<const int> y, std::span<const double> alpha,
                         const LinearModel& model, double c) {
  check_dimensions(x, y);
  const double bound_eps = 1e-12 * c;
  double worst = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double margin = y[i] * model.decision(x.row(i));
    double violation = 0.0;
    if (alpha[i] <= bound_eps) {
      violation = std::max(0.0, 1.0 - margin);
    } else if (alpha[i] >= c - bound_eps) {
      violation = std::max(0.0, margin - 1.0);
    } else {
      violation = std::abs(margin - 1.0);
    }
    worst = std::max(worst, violation);
  }
  return worst;
}

BinaryTrainResult train_binary(const FeatureMatrix& x, std::span<const int> y, const TrainConfig& config,
                               const std::function<void(const SolverStep&)>& observer) {
  check_dimensions(x, y);
  if (!(config.c > 0.0)) throw error(errc::invalid_config, "C must be positive");
  if (!(config.tolerance > 0.0)) throw error(errc::invalid_config, "tolerance must be positive");
  const std::size_t n = x.rows();
  bool has_pos = false;
  bool has_neg = false;
  for (const int label : y) {
    if (label == +1) {
      has_pos = true;
    } else if (label == -1) {
      has_neg = true;
    } else {
      throw error(errc::unknown_label, "binary labels must be +1 or -1");
    }
  }
  if (!has_pos || !has_neg) throw error(errc::too_few_samples, "binary training needs both classes");

  const double c = config.c;
  const double eps = config.tolerance;
  std::vector<double> alpha(n, 0.0);
  std::vector<double> grad(n, -1.0);  // gradient of 1/2 a'Qa - e'a, Q_ij = y_i y_j <x_i, x_j>
  std::vector<double> diag(n);
  for (std::size_t i = 0; i < n; ++i) diag[i] = dot(x.row(i), x.row(i));

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(config.seed);
  shuffle(std::span<std::size_t>(order), rng);

  auto in_up = [&](std::size_t t) { return y[t] == +1 ? alpha[t] < c : alpha[t] > 0.0; };
  auto in_low = [&](std::size_t t) { return y[t] == +1 ? alpha[t] > 0.0 : alpha[t] < c; };

  std::vector<double> ki(n);
  std::vector<double> kj(n);
  auto kernel_column = [&](std::size_t i, std::vector<double>& out) {
    const auto xi = x.row(i);
    for (std::size_t t = 0; t < n; ++t) out[t] = dot(xi, x.row(t));
  };

  const std::size_t max_iterations = std::max<std::size_t>(1, config.max_passes) * std::max<std::size_t>(n, 1);
  std::size_t iteration = 0;
  bool gap_reached = false;
  double m_up = -kInf;
  double m_low = kInf;

  for (;;) {
    // First index: maximal violator in I_up.
    m_up = -kInf;
    std::size_t i = n;
    for (const std::size_t t : order) {
      if (in_up(t) && -y[t] * grad[t] >= m_up) {
        m_up = -y[t] * grad[t];
        i = t;
      }
    }
    m_low = kInf;
    for (const std::size_t t : order) {
      if (in_low(t)) m_low = std::min(m_low, -y[t] * grad[t]);
    }
    if (i == n || m_up - m_low < eps) {
      gap_reached = true;
      break;
    }
    if (iteration >= max_iterations) break;

    // Second index: largest guaranteed objective decrease (second-order selection).
    kernel_column(i, ki);
    std::size_t j = n;
    double best = kInf;
    for (const std::size_t t : order) {
      if (!in_low(t)) continue;
      const double grad_diff = m_up + y[t] * grad[t];
      if (grad_diff <= 0.0) continue;
      double quad = diag[i] + diag[t] - 2.0 * ki[t];
      if (quad <= 0.0) quad = kTau;
      const double obj_diff = -(grad_diff * grad_diff) / quad;
      if (obj_diff <= best) {
        best = obj_diff;
        j = t;
      }
    }
    if (j == n) {
      gap_reached = true;
      break;
    }
    kernel_column(j, kj);

    const double old_i = alpha[i];
    const double old_j = alpha[j];
    double quad = diag[i] + diag[j] - 2.0 * ki[j];
    if (quad <= 0.0) quad = kTau;
    if (y[i] != y[j]) {
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0.0) {
        if (alpha[j] < 0.0) {
          alpha[j] = 0.0;
          alpha[i] = diff;
        }
        if (alpha[i] > c) {
          alpha[i] = c;
          alpha[j] = c - diff;
        }
      } else {
        if (alpha[i] < 0.0) {
          alpha[i] = 0.0;
          alpha[j] = -diff;
        }
        if (alpha[j] > c) {
          alpha[j] = c;
          alpha[i] = c + diff;
        }
      }
    } else {
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > c) {
        if (alpha[i] > c) {
          alpha[i] = c;
          alpha[j] = sum - c;
        }
        if (alpha[j] > c) {
          alpha[j] = c;
          alpha[i] = sum - c;
        }
      } else {
        if (alpha[j] < 0.0) {
          alpha[j] = 0.0;
          alpha[i] = sum;
        }
        if (alpha[i] < 0.0) {
          alpha[i] = 0.0;
          alpha[j] = sum;
        }
      }
    }

    const double d_i = alpha[i] - old_i;
    const double d_j = alpha[j] - old_j;
    for (std::size_t t = 0; t < n; ++t) {
      grad[t] += y[t] * (y[i] * ki[t] * d_i + y[j] * kj[t] * d_j);
    }
    ++iteration;

    if (observer) {
      double half_quad = 0.0;
      double sum_alpha = 0.0;
      for (std::size_t t = 0; t < n; ++t) {
        half_quad += alpha[t] * (grad[t] + 1.0);
        sum_alpha += alpha[t];
      }
      observer(SolverStep{iteration, alpha, sum_alpha - 0.5 * half_quad});
    }
  }

  BinaryTrainResult result;
  result.model.weights.assign(x.cols(), 0.0);
  double sum_alpha = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    if (alpha[t] == 0.0) continue;
    sum_alpha += alpha[t];
    const auto xt = x.row(t);
    for (std::size_t k = 0; k < xt.size(); ++k) result.model.weights[k] += alpha[t] * y[t] * xt[k];
  }
  // KKT requires m_up <= b <= m_low; the midpoint keeps every violation within half the gap.
  result.model.bias = std::isfinite(m_up) && std::isfinite(m_low) ? 0.5 * (m_up + m_low)
                      : std::isfinite(m_up)                      ? m_up
                                                                 : m_low;
  result.dual_objective = sum_alpha - 0.5 * dot(result.model.weights, result.model.weights);
  result.iterations = iteration;
  result.converged = gap_reached && max_kkt_violation(x, y, alpha, result.model, c) <= config.tolerance;
  result.alpha = std::move(alpha);
  return result;
}

BinaryPrediction predict_binary(const LinearModel& model, std::span<const double> x) {
  const double value = model.decision(x);
  return {value >= 0.0 ? +1 : -1, value};
}

OvOEnsemble train_ovo(const FeatureMatrix& x, std::span<const int> y, const TrainConfig& config,
                      execution policy, std::optional<std::vector<int>> class_order) {
  check_dimensions(x, y);
  const std::vector<int> present = distinct_sorted(y);
  std::vector<int> classes = class_order ? *class_order : present;
  if (class_order) {
    auto sorted = classes;
    std::sort(sorted.begin(), sorted.end());
    if (sorted != present) {
      throw error(errc::invalid_config, "class order must list exactly the classes present in the labels");
    }
  }
  if (classes.size() < 2) throw error(errc::too_few_samples, "need >= 2 classes");

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t a = 0; a < classes.size(); ++a) {
    for (std::size_t b = a + 1; b < classes.size(); ++b) pairs.emplace_back(a, b);
  }

  OvOEnsemble ensemble;
  ensemble.class_list = classes;
  ensemble.models.resize(pairs.size());
  std::vector<char> converged(pairs.size(), 1);
  for_each_index(policy, pairs.size(), [&](std::size_t p) {
    const int pos = classes[pairs[p].first];
    const int neg = classes[pairs[p].second];
    std::vector<std::size_t> rows;
    std::vector<int> signs;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (y[i] == pos || y[i] == neg) {
        rows.push_back(i);
        signs.push_back(y[i] == pos ? +1 : -1);
      }
    }
    auto result = train_binary(x.select(rows), signs, config);
    result.model.classes = {pos, neg};
    ensemble.models[p] = std::move(result.model);
    converged[p] = result.converged ? 1 : 0;
  });
  ensemble.converged = std::all_of(converged.begin(), converged.end(), [](char c) { return c != 0; });
  return ensemble;
}

OvOPrediction predict_ovo(const OvOEnsemble& ensemble, std::span<const double> x) {
  const std::size_t k = ensemble.class_list.size();
  OvOPrediction out;
  out.votes.assign(k, 0);
  out.evidence.assign(k, 0.0);
  out.decisions.reserve(ensemble.models.size());
  auto index_of = [&](int label) {
    return static_cast<std::size_t>(
        std::find(ensemble.class_list.begin(), ensemble.class_list.end(), label) - ensemble.class_list.begin());
  };
  for (const LinearModel& model : ensemble.models) {
    const BinaryPrediction p = predict_binary(model, x);
    out.decisions.push_back(p.value);
    const std::size_t winner = index_of(p.label == +1 ? model.classes.first : model.classes.second);
    ++out.votes[winner];
    out.evidence[winner] += std::abs(p.value);
  }
  std::size_t best = 0;
  for (std::size_t c = 1; c < k; ++c) {
    if (out.votes[c] > out.votes[best] ||
        (out.votes[c] == out.votes[best] && out.evidence[c] > out.evidence[best])) {
      best = c;
    }
  }
  out.label = ensemble.class_list.at(best);
  return out;
}

std::vector<std::vector<std::size_t>> assign_folds(std::span<const int> y, const CvConfig& cv) {
  if (cv.folds < 2) throw error(errc::too_few_folds, "cross-validation needs >= 2 folds");
  const std::vector<int> classes = distinct_sorted(y);
  std::vector<std::vector<std::size_t>> by_class(classes.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    const auto c = static_cast<std::size_t>(std::lower_bound(classes.begin(), classes.end(), y[i]) - classes.begin());
    by_class[c].push_back(i);
  }

  std::vector<std::vector<std::size_t>> held_out(cv.folds);
  if (cv.scheme == CvScheme::k_fold) {
    if (cv.stratified) {
      for (std::size_t c = 0; c < classes.size(); ++c) {
        if (by_class[c].size() < cv.folds) {
          throw error(errc::too_few_samples,
                      fmt::format("class {} has {} samples, fewer than {} folds", class_name(classes[c]),
                                  by_class[c].size(), cv.folds));
        }
      }
      Rng rng(cv.seed);
      std::size_t position = 0;
      for (auto& members : by_class) {
        shuffle(std::span<std::size_t>(members), rng);
        for (const std::size_t idx : members) held_out[position++ % cv.folds].push_back(idx);
      }
    } else {
      if (y.size() < cv.folds) throw error(errc::too_few_samples, "fewer samples than folds");
      std::vector<std::size_t> all(y.size());
      std::iota(all.begin(), all.end(), std::size_t{0});
      Rng rng(cv.seed);
      shuffle(std::span<std::size_t>(all), rng);
      for (std::size_t p = 0; p < all.size(); ++p) held_out[p % cv.folds].push_back(all[p]);
    }
  } else {
    if (!(cv.holdout_fraction > 0.0 && cv.holdout_fraction < 1.0)) {
      throw error(errc::invalid_config, "holdout fraction must be in (0, 1)");
    }
    for (std::size_t r = 0; r < cv.folds; ++r) {
      Rng rng(mix_seed(cv.seed, r));
      auto take = [&](std::vector<std::size_t> members) {
        shuffle(std::span<std::size_t>(members), rng);
        const auto count = static_cast<std::size_t>(std::ceil(cv.holdout_fraction * static_cast<double>(members.size())));
        if (count == 0 || count >= members.size()) {
          throw error(errc::too_few_samples, "holdout split leaves no training or test samples");
        }
        held_out[r].insert(held_out[r].end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(count));
      };
      if (cv.stratified) {
        for (const auto& members : by_class) take(members);
      } else {
        std::vector<std::size_t> all(y.size());
        std::iota(all.begin(), all.end(), std::size_t{0});
        take(std::move(all));
      }
    }
  }
  for (auto& fold : held_out) std::sort(fold.begin(), fold.end());
  return held_out;
}

CvResult cross_validate(const FeatureMatrix& x, std::span<const int> y, const CvConfig& cv,
                        const TrainConfig& config, execution policy) {
  check_dimensions(x, y);
  const std::vector<int> classes = distinct_sorted(y);
  if (classes.size() < 2) throw error(errc::too_few_samples, "need >= 2 classes");

  CvResult result;
  result.held_out = assign_folds(y, cv);
  result.folds.resize(cv.folds);
  std::vector<char> converged(cv.folds, 1);

  for_each_index(policy, cv.folds, [&](std::size_t f) {
    const auto& test = result.held_out[f];
    std::vector<char> is_test(y.size(), 0);
    for (const std::size_t i : test) is_test[i] = 1;
    std::vector<std::size_t> train_rows;
    std::vector<int> train_labels;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (!is_test[i]) {
        train_rows.push_back(i);
        train_labels.push_back(y[i]);
      }
    }
    const OvOEnsemble model = train_ovo(x.select(train_rows), train_labels, config, execution::serial);
    std::vector<int> truth;
    std::vector<int> predicted;
    for (const std::size_t i : test) {
      truth.push_back(y[i]);
      predicted.push_back(predict_ovo(model, x.row(i)).label);
    }
    result.folds[f] = confusion(truth, predicted, classes);
    converged[f] = model.converged ? 1 : 0;
  });
  result.converged = std::all_of(converged.begin(), converged.end(), [](char c) { return c != 0; });
  return result;
}

}  // namespace sonarmark
