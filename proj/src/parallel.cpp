#include "hef/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <thread>
#include <vector>

namespace hef {

namespace {
int g_threads = 1;
constexpr long kChunk = 4096;
}  // namespace

void set_thread_count(int k) { g_threads = std::max(1, k); }
int thread_count() { return g_threads; }

void parallel_for(long n, const std::function<void(long, long)>& fn) {
  if (n <= 0) return;
  const long chunks = (n + kChunk - 1) / kChunk;
  if (g_threads <= 1 || chunks <= 1) {
    fn(0, n);
    return;
  }
  std::atomic<long> next(0);
  auto worker = [&]() {
    for (;;) {
      const long c = next.fetch_add(1);
      if (c >= chunks) return;
      const long b = c * kChunk;
      fn(b, std::min(n, b + kChunk));
    }
  };
  const int k = static_cast<int>(std::min<long>(g_threads, chunks));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(k - 1));
  for (int i = 0; i + 1 < k; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
}

}  // namespace hef
