#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "conneckt/error.hpp"

namespace conneckt {

inline constexpr const char* kThreadsEnv = "CONNECKT_THREADS";

/// Worker count: explicit request, else $CONNECKT_THREADS, else 1.
inline std::size_t resolve_threads(std::optional<long long> requested) {
  long long n = 1;
  if (requested) {
    n = *requested;
  } else if (const char* env = std::getenv(kThreadsEnv); env && *env) {
    try {
      std::size_t used = 0;
      n = std::stoll(env, &used);
      if (used != std::string(env).size()) throw std::invalid_argument(env);
    } catch (const std::exception&) {
      fail(ErrorKind::Parameter,
           std::string(kThreadsEnv) + " must be an integer, got '" + env + "'");
    }
  }
  if (n < 1) {
    fail(ErrorKind::Parameter,
         "thread count must be >= 1, got " + std::to_string(n));
  }
  return static_cast<std::size_t>(n);
}

/// Runs body(k) for k in [0, count) on up to `threads` workers using a static
/// contiguous partition. Each index is handled exactly once, so bodies that
/// only write to slot k give results independent of the thread count. If
/// several indices throw, the exception from the smallest index is rethrown.
template <typename Body>
void parallel_for(std::size_t count, std::size_t threads, Body&& body) {
  threads = std::max<std::size_t>(1, std::min(threads, count));
  if (threads <= 1) {
    for (std::size_t k = 0; k < count; ++k) body(k);
    return;
  }

  struct Failure {
    std::size_t index = static_cast<std::size_t>(-1);
    std::exception_ptr error;
  };
  std::vector<Failure> failures(threads);
  {
    std::vector<std::jthread> workers;
    workers.reserve(threads);
    const std::size_t chunk = (count + threads - 1) / threads;
    for (std::size_t w = 0; w < threads; ++w) {
      const std::size_t begin = w * chunk;
      const std::size_t end = std::min(count, begin + chunk);
      workers.emplace_back([&, w, begin, end] {
        for (std::size_t k = begin; k < end; ++k) {
          try {
            body(k);
          } catch (...) {
            failures[w] = {k, std::current_exception()};
            return;
          }
        }
      });
    }
  }

  const Failure* first = nullptr;
  for (const auto& f : failures) {
    if (f.error && (!first || f.index < first->index)) first = &f;
  }
  if (first) std::rethrow_exception(first->error);
}

}  // namespace conneckt
