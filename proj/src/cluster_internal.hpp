#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <thread>
#include <vector>

#include "baryfactor/cluster.hpp"

namespace baryfactor::cluster::detail {

/// Moves the sample farthest from its own cluster mean into each empty
/// cluster until none is left.  Returns false when that is impossible
/// (fewer distinct samples than clusters).
bool reseed_empty(const Matrix& data, Labels& labels, int k);

/// Runs `run(r)` for r = 0 .. restarts-1 and keeps the lowest objective,
/// ties to the lowest r.  The reduction does not depend on the thread count.
template <class Result, class Run>
Result best_of(int restarts, int threads, Run run) {
  if (restarts < 1) throw InvalidArgument("restarts must be at least 1");
  std::vector<Result> results(static_cast<std::size_t>(restarts));
  const int workers = std::clamp(threads, 1, restarts);
  if (workers == 1) {
    for (int r = 0; r < restarts; ++r) results[static_cast<std::size_t>(r)] = run(r);
  } else {
    std::atomic<int> next{0};
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (int r = next++; r < restarts; r = next++) {
            results[static_cast<std::size_t>(r)] = run(r);
          }
        } catch (...) {
          errors[static_cast<std::size_t>(w)] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  std::size_t best = 0;
  for (std::size_t r = 1; r < results.size(); ++r) {
    if (results[r].objective < results[best].objective) best = r;
  }
  Result out = std::move(results[best]);
  out.restart = static_cast<int>(best);
  return out;
}

inline void check_problem(const Matrix& data, int k) {
  if (k < 2) throw InvalidArgument("K must be at least 2");
  if (data.rows() < k) throw InvalidArgument("need at least K samples");
}

}  // namespace baryfactor::cluster::detail
