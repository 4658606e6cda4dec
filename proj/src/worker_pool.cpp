#include "oamsq/worker_pool.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "oamsq/error.hpp"

namespace oamsq {

WorkerPool::WorkerPool(int workers) : workers_(workers) {
  if (workers < 1) throw Error(ErrorKind::InvalidArgument, "worker count must be >= 1");
}

void WorkerPool::run(std::size_t n, const std::function<void(std::size_t)>& task) const {
  if (n == 0) return;
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto loop = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        task(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  const auto count = std::min<std::size_t>(static_cast<std::size_t>(workers_), n);
  if (count == 1) {
    loop();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(count);
    for (std::size_t t = 0; t < count; ++t) threads.emplace_back(loop);
    for (auto& t : threads) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace oamsq
