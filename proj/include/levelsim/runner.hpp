#pragma once

#include <atomic>
#include <cstdint>
#include <thread>
#include <vector>

namespace levelsim {

inline unsigned resolve_workers(unsigned requested) {
  if (requested > 0) return requested;
  unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

// Runs fn(replicate_index) for replicate_index in [0, reps), pulling indices
// from a shared atomic counter. Each replicate is confined to one worker and
// must write only to its own output slot; aggregation stays deterministic
// because callers fold the slots in index order afterwards.
template <class Fn>
void run_replicates(std::size_t reps, unsigned workers, Fn&& fn) {
  workers = resolve_workers(workers);
  if (workers <= 1 || reps <= 1) {
    for (std::size_t i = 0; i < reps; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= reps) return;
      fn(i);
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();
}

}  // namespace levelsim
