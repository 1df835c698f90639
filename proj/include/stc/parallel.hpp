#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <span>
#include <thread>
#include <vector>

#include "stc/model.hpp"

namespace stc {

// Runs fn(k) for k in [0, n) on up to `workers` threads. Each index is
// processed exactly once; callers write results into slot k, so output does
// not depend on scheduling. The first exception is rethrown.
template <class Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn&& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers <= 1) {
    for (std::size_t k = 0; k < n; ++k) fn(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t k = next++; k < n; k = next++) {
          try {
            fn(k);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
            next = n;
          }
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
}

inline std::size_t default_workers() { return std::max(1u, std::thread::hardware_concurrency()); }

inline std::vector<Prediction> predict_batch(const Model& model, std::span<const EncodedObservation> queries,
                                             std::size_t workers = 1, bool with_contributions = false) {
  model.warm();
  std::vector<Prediction> out(queries.size());
  parallel_for(queries.size(), workers, [&](std::size_t k) { out[k] = model.predict(queries[k], with_contributions); });
  return out;
}

}  // namespace stc
