#pragma once

// Shared error types, RNG plumbing and the thread cap used by the
// parallel reductions in the rest of the library.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

namespace mixchar {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

#define MIXCHAR_ERROR(Name)                    \
  struct Name : Error {                        \
    using Error::Error;                        \
  }

MIXCHAR_ERROR(NotStochastic);
MIXCHAR_ERROR(Reducible);
MIXCHAR_ERROR(Disconnected);
MIXCHAR_ERROR(BadParams);
MIXCHAR_ERROR(NonPositiveRate);
MIXCHAR_ERROR(NumericalFailure);
MIXCHAR_ERROR(NegativeTime);
MIXCHAR_ERROR(BadTime);
MIXCHAR_ERROR(EmptyOrFullSet);
MIXCHAR_ERROR(CapExceeded);
MIXCHAR_ERROR(EmptySet);
MIXCHAR_ERROR(Singular);
MIXCHAR_ERROR(NotATree);
MIXCHAR_ERROR(BadMode);
MIXCHAR_ERROR(SupportViolation);
MIXCHAR_ERROR(DomainError);
MIXCHAR_ERROR(NegativeInput);
MIXCHAR_ERROR(BracketViolation);
MIXCHAR_ERROR(NotMixing);
MIXCHAR_ERROR(SpecParse);
MIXCHAR_ERROR(NotReversible);
MIXCHAR_ERROR(BadDelta);

#undef MIXCHAR_ERROR

constexpr std::uint64_t kDefaultSeed = 0xC0FFEE;

// splitmix64; used to derive independent per-task seeds so parallel
// restarts are schedule-independent.
inline std::uint64_t split_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline unsigned thread_cap() {
  if (const char* env = std::getenv("MIXCHAR_THREADS")) {
    long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<unsigned>(v);
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

// Runs fn(i) for i in [0, n). Results must be written to pre-sized
// storage indexed by i; reductions happen on the caller side so the
// outcome does not depend on the schedule.  Nested calls run serially.
inline bool& parallel_depth_flag() {
  thread_local bool inside = false;
  return inside;
}

inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  unsigned workers = std::min<std::size_t>(thread_cap(), n);
  if (workers <= 1 || parallel_depth_flag()) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::exception_ptr first_error;
  std::mutex err_mutex;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      parallel_depth_flag() = true;
      for (;;) {
        std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

inline double xlogx(double x) {
  return x > 0.0 ? x * std::log(x) : 0.0;
}

inline bool approx_leq(double a, double b, double slack) { return a <= b + slack; }

}  // namespace mixchar
