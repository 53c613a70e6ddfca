#pragma once

// Batched unscaled 1-D DFTs along one axis of a column-major complex matrix,
// backed by FFTW. Plans are created once per shape and shared between threads.

#include "isac/common.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>

namespace isac::fft {

enum class Direction { Forward, Inverse };  // e^{-j...} / e^{+j...}

namespace detail {

struct PlanCache {
  std::mutex mu;
  std::map<std::tuple<int, int, int, int, bool>, fftw_plan> plans;

  ~PlanCache() {
    for (auto& [key, plan] : plans) fftw_destroy_plan(plan);
  }
};

inline PlanCache& cache() {
  static PlanCache c;
  return c;
}

// n-point transforms, `howmany` of them, element stride `stride`, batch distance `dist`.
inline fftw_plan plan_for(int n, int howmany, int stride, int dist, Direction dir) {
  auto& c = cache();
  std::lock_guard lock(c.mu);
  const auto key = std::tuple{n, howmany, stride, dist, dir == Direction::Forward};
  if (auto it = c.plans.find(key); it != c.plans.end()) return it->second;
  // Planning with FFTW_ESTIMATE leaves the scratch buffer alone; execution uses the new-array interface.
  const std::size_t span = static_cast<std::size_t>(n - 1) * stride + static_cast<std::size_t>(howmany - 1) * dist + 1;
  auto* scratch = fftw_alloc_complex(span);
  fftw_plan p = fftw_plan_many_dft(1, &n, howmany, scratch, nullptr, stride, dist, scratch, nullptr, stride, dist,
                                   dir == Direction::Forward ? FFTW_FORWARD : FFTW_BACKWARD,
                                   FFTW_ESTIMATE | FFTW_UNALIGNED);
  fftw_free(scratch);
  if (!p) throw Error("fft: planning failed");
  c.plans.emplace(key, p);
  return p;
}

inline void run(fftw_plan p, cd* data) {
  auto* d = reinterpret_cast<fftw_complex*>(data);
  fftw_execute_dft(p, d, d);
}

}  // namespace detail

/// Transforms the first `count` columns of `a` in place (each of length a.rows()).
inline void columns(CMat& a, Direction dir, Eigen::Index count = -1) {
  if (count < 0) count = a.cols();
  if (count == 0 || a.rows() == 0) return;
  const auto p = detail::plan_for(static_cast<int>(a.rows()), static_cast<int>(count), 1, static_cast<int>(a.rows()), dir);
  detail::run(p, a.data());
}

/// Transforms every row of `a` in place (each of length a.cols()).
inline void rows(CMat& a, Direction dir) {
  if (a.rows() == 0 || a.cols() == 0) return;
  const auto p = detail::plan_for(static_cast<int>(a.cols()), static_cast<int>(a.rows()), static_cast<int>(a.rows()), 1, dir);
  detail::run(p, a.data());
}

}  // namespace isac::fft
