#pragma once

#include <type_traits>

namespace lfdeblur {

/// Caps the worker count for all parallel maps (0 = hardware default).
void set_worker_count(int n);
int worker_count();

namespace detail {
void parallel_for_impl(int n, void* ctx, void (*fn)(void*, int));
}

/// Parallel map over [0, n). Tasks must write disjoint state; results are
/// order-independent so output is identical for any worker count.
template <typename Fn>
void parallel_for(int n, Fn&& fn) {
  using F = std::remove_reference_t<Fn>;
  detail::parallel_for_impl(n, const_cast<void*>(static_cast<const void*>(&fn)),
                            [](void* ctx, int i) { (*static_cast<F*>(ctx))(i); });
}

}  // namespace lfdeblur
