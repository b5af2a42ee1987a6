#pragma once

#include <cstddef>
#include <span>

#include <omp.h>

namespace dsmfuse::detail {

inline int resolve_jobs(int jobs) { return jobs > 0 ? jobs : omp_get_max_threads(); }

// Pairwise summation in a fixed tree order, independent of thread count.
inline double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 16) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

}  // namespace dsmfuse::detail
