#pragma once

#include <cstdint>
#include <functional>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace faceanon {

inline int& thread_count_ref() {
#ifdef _OPENMP
    static int n = omp_get_max_threads();
#else
    static int n = 1;
#endif
    return n;
}

inline void set_thread_count(int n) { thread_count_ref() = n < 1 ? 1 : n; }
inline int thread_count() { return thread_count_ref(); }

/// Runs body(i) for i in [0, n). Iterations must write disjoint outputs;
/// under that contract results are bit-identical for any thread count.
template <typename F>
void parallel_for(std::int64_t n, F&& body) {
#ifdef _OPENMP
    if (thread_count() > 1 && n > 1) {
#pragma omp parallel for schedule(static) num_threads(thread_count())
        for (std::int64_t i = 0; i < n; ++i) body(i);
        return;
    }
#endif
    for (std::int64_t i = 0; i < n; ++i) body(i);
}

}  // namespace faceanon
