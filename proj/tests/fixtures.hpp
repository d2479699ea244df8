#pragma once

#include <vector>

#include <sonarmark/rng.hpp>
#include <sonarmark/svm.hpp>

namespace fixture {

struct SmallProblem {
  std::vector<std::vector<double>> rows;
  std::vector<int> y;
  double c = 1.0;
};

/// Random binary problem with n in [2, 10], d in [1, 3], labels of both signs and C from
/// {0.5, 1, 10}. Classes are shifted apart by a random amount, so some draws are separable.
inline SmallProblem random_problem(sonarmark::Rng& rng) {
  static constexpr double kCs[] = {0.5, 1.0, 10.0};
  SmallProblem p;
  const auto n = static_cast<std::size_t>(2 + rng.below(9));
  const auto d = static_cast<std::size_t>(1 + rng.below(3));
  p.c = kCs[rng.below(3)];
  const double shift = rng.uniform(0.0, 2.0);
  for (std::size_t i = 0; i < n; ++i) {
    const int label = i == 0 ? 1 : (i == 1 ? -1 : (rng.below(2) ? 1 : -1));
    std::vector<double> row(d);
    for (auto& v : row) v = rng.normal() + shift * label;
    p.rows.push_back(row);
    p.y.push_back(label);
  }
  return p;
}

}  // namespace fixture
