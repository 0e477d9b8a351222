#pragma once

// Deterministic trial parallelism.  Work is split into fixed-size blocks
// that threads claim from an atomic counter; per-block results are stored
// by block index and reduced sequentially afterwards, so the outcome is
// independent of the thread count.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace causalqt {

inline constexpr std::uint64_t kTrialBlockSize = 4096;

inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// Runs block_fn(begin, end) over [0, n_items) in kTrialBlockSize chunks and
// returns the per-block results in block order.  Exceptions from workers
// are rethrown on the calling thread.
template <typename R>
std::vector<R> run_blocks(std::uint64_t n_items, int threads,
                          const std::function<R(std::uint64_t, std::uint64_t)>& block_fn) {
  const std::uint64_t n_blocks =
      (n_items + kTrialBlockSize - 1) / kTrialBlockSize;
  std::vector<R> results(n_blocks);
  if (n_blocks == 0) return results;

  const int n_threads = std::min<std::uint64_t>(resolve_threads(threads), n_blocks);
  if (n_threads <= 1) {
    for (std::uint64_t b = 0; b < n_blocks; ++b) {
      const std::uint64_t begin = b * kTrialBlockSize;
      const std::uint64_t end = std::min(begin + kTrialBlockSize, n_items);
      results[b] = block_fn(begin, end);
    }
    return results;
  }

  std::atomic<std::uint64_t> next_block{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    while (true) {
      const std::uint64_t b = next_block.fetch_add(1);
      if (b >= n_blocks) return;
      const std::uint64_t begin = b * kTrialBlockSize;
      const std::uint64_t end = std::min(begin + kTrialBlockSize, n_items);
      try {
        results[b] = block_fn(begin, end);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(n_threads);
  for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
  return results;
}

}  // namespace causalqt
