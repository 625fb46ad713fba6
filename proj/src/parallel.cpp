#include "lfdeblur/parallel.hpp"

#include <omp.h>

#include <algorithm>
#include <atomic>

namespace lfdeblur {

namespace {
std::atomic<int> g_workers{0};
}

void set_worker_count(int n) { g_workers.store(std::max(0, n)); }

int worker_count() {
  int n = g_workers.load();
  return n > 0 ? n : omp_get_max_threads();
}

namespace detail {

void parallel_for_impl(int n, void* ctx, void (*fn)(void*, int)) {
  const int workers = std::min(worker_count(), n);
  if (workers <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(ctx, i);
    return;
  }
#pragma omp parallel for schedule(dynamic, 1) num_threads(workers)
  for (int i = 0; i < n; ++i) fn(ctx, i);
}

}  // namespace detail
}  // namespace lfdeblur
