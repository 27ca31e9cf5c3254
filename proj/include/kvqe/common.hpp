#pragma once

#include <algorithm>
#include <atomic>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace kvqe {

using cplx = std::complex<double>;

inline constexpr double kHartreeToKcalMol = 627.5094740631;
inline constexpr double kPruneThreshold = 1e-14;

/// Malformed or out-of-contract input (bad indices, bad files, bad configs).
class InvalidInput : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A numerical routine could not certify its result.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

inline double hartree_to_kcalmol(double hartree) { return hartree * kHartreeToKcalMol; }

namespace detail {

inline std::atomic<int> &thread_setting() {
  static std::atomic<int> n{0};
  return n;
}

} // namespace detail

/// Thread count used by the internal parallel loops. Zero means "read
/// KVQE_THREADS, else 1".
inline void set_num_threads(int n) { detail::thread_setting().store(std::max(0, n)); }

inline int num_threads() {
  int n = detail::thread_setting().load();
  if (n > 0)
    return n;
  if (const char *env = std::getenv("KVQE_THREADS")) {
    int v = std::atoi(env);
    if (v > 0)
      return v;
  }
  return 1;
}

/// Runs body(begin, end) over [0, n) split into contiguous chunks. Each index
/// is visited by exactly one call, so per-index work is schedule independent.
template <class Body>
void parallel_for(std::size_t n, Body &&body, std::size_t min_chunk = 4096) {
  const auto threads = static_cast<std::size_t>(num_threads());
  if (threads <= 1 || n < 2 * min_chunk) {
    body(std::size_t{0}, n);
    return;
  }
  const std::size_t workers = std::min(threads, n / min_chunk);
  const std::size_t chunk = (n + workers - 1) / workers;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t b = w * chunk;
    const std::size_t e = std::min(n, b + chunk);
    if (b >= e)
      break;
    pool.emplace_back([&body, b, e] { body(b, e); });
  }
  for (auto &t : pool)
    t.join();
}

/// Sum of term(i) for i in [0, n). Partial sums are taken over fixed blocks of
/// `block` indices and combined pairwise, so the rounding pattern does not
/// depend on the thread count.
template <class T, class Term>
T deterministic_sum(std::size_t n, Term &&term, std::size_t block = 1024) {
  const std::size_t nblocks = (n + block - 1) / block;
  if (nblocks == 0)
    return T{};
  std::vector<T> partial(nblocks, T{});
  parallel_for(
      nblocks,
      [&](std::size_t b0, std::size_t b1) {
        for (std::size_t b = b0; b < b1; ++b) {
          T acc{};
          const std::size_t e = std::min(n, (b + 1) * block);
          for (std::size_t i = b * block; i < e; ++i)
            acc += term(i);
          partial[b] = acc;
        }
      },
      4);
  for (std::size_t width = 1; width < nblocks; width *= 2)
    for (std::size_t i = 0; i + width < nblocks; i += 2 * width)
      partial[i] += partial[i + width];
  return partial[0];
}

inline bool close_to_integer(double x, double tol) { return std::abs(x - std::round(x)) <= tol; }

} // namespace kvqe
