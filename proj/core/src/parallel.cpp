#include "sguq/parallel.hpp"

#include <atomic>
#include <exception>
#include <thread>
#include <vector>

namespace sguq {

void parallel_for(std::size_t count, int workers,
                  const std::function<void(std::size_t)>& body) {
  if (count == 0) return;
  if (workers <= 1 || count == 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }

  const auto thread_count =
      std::min<std::size_t>(static_cast<std::size_t>(workers), count);
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> failures(count);
  std::vector<std::thread> pool;
  pool.reserve(thread_count);
  for (std::size_t t = 0; t < thread_count; ++t) {
    pool.emplace_back([&] {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        try {
          body(i);
        } catch (...) {
          failures[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();

  // Rethrow the lowest-index failure so error reporting is deterministic.
  for (const auto& f : failures)
    if (f) std::rethrow_exception(f);
}

}  // namespace sguq
