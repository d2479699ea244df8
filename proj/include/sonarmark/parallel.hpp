#pragma once

#include <cstddef>
#include <exception>
#include <utility>

#include <omp.h>

namespace sonarmark {

/// Selects between the OpenMP kernel and its serial reference. Both produce bit-identical
/// results; every parallel loop writes only to its own index.
enum class execution { serial, parallel };

inline int worker_count() noexcept { return omp_get_max_threads(); }

/// Runs body(i) for i in [0, n). Exceptions thrown by any iteration are rethrown after the
/// loop; when several iterations fail, the lowest index wins so errors are deterministic.
template <typename Body>
void for_each_index(execution policy, std::size_t n, Body&& body) {
  if (policy == execution::serial || n < 2) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::exception_ptr failure;
  std::size_t failed_index = n;
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(sonarmark_for_each_index)
      {
        if (static_cast<std::size_t>(i) < failed_index) {
          failed_index = static_cast<std::size_t>(i);
          failure = std::current_exception();
        }
      }
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace sonarmark
