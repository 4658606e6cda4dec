#pragma once

#include <cstddef>
#include <functional>

namespace oamsq {

// Runs task(i) for i in [0, n) on `workers` threads. Tasks are handed out in
// index order; callers write results into slot i so ordering never depends
// on completion order. The first exception escaping a task is rethrown after
// all threads join.
class WorkerPool {
 public:
  explicit WorkerPool(int workers);
  int workers() const { return workers_; }
  void run(std::size_t n, const std::function<void(std::size_t)>& task) const;

 private:
  int workers_;
};

}  // namespace oamsq
