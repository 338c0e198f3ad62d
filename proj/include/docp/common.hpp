#pragma once

#include <Eigen/Dense>

#include <atomic>
#include <cstdlib>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace docp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Base class for all solver errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Input sizes do not match the problem definition.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A user callback produced a non-finite value.
class EvaluationError : public Error {
 public:
  using Error::Error;
};

/// A factorization or decomposition failed.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Conjugate-gradient breakdown (loss of positive definiteness).
class BreakdownError : public Error {
 public:
  BreakdownError(const std::string& msg, int iteration)
      : Error(msg), iteration(iteration) {}
  int iteration;
};

/// Iterates became non-finite.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw DimensionError(msg);
}

/// Worker count used when a caller passes workers = 0.
/// Reads DOCP_WORKERS once; falls back to the hardware concurrency.
inline unsigned default_workers() {
  static const unsigned value = [] {
    if (const char* env = std::getenv("DOCP_WORKERS")) {
      long n = std::strtol(env, nullptr, 10);
      if (n >= 1) return static_cast<unsigned>(n);
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1u : hw;
  }();
  return value;
}

/// Runs f(i) for i in [0, n) over contiguous index chunks.
/// Each index writes only its own output slot, so results are
/// bit-identical for any worker count.
template <typename F>
void parallel_for(std::size_t n, unsigned workers, F&& f) {
  if (workers == 0) workers = default_workers();
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::size_t chunk = (n + workers - 1) / workers;
  std::exception_ptr first_error;
  std::atomic<bool> failed{false};
  std::mutex guard;
  for (unsigned w = 0; w < workers; ++w) {
    std::size_t lo = w * chunk;
    std::size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&, lo, hi] {
      try {
        for (std::size_t i = lo; i < hi; ++i) f(i);
      } catch (...) {
        std::lock_guard<std::mutex> lk(guard);
        if (!failed.exchange(true)) first_error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

namespace stats {

/// Number of PCG system solves performed since process start.
/// Test instrumentation; does not affect solver behavior.
inline std::atomic<std::uint64_t>& pcg_invocations() {
  static std::atomic<std::uint64_t> count{0};
  return count;
}

}  // namespace stats

}  // namespace docp
