#pragma once

// Worker-count control. Every parallel loop in the library writes disjoint
// outputs per iteration and performs any reduction serially in index order,
// so results are bit-identical for every thread count.

#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif
#ifdef __GLIBC__
#include <malloc.h>
#endif

namespace mdcs {

inline int set_num_threads(int n) {
  if (n < 1) n = 1;
#ifdef _OPENMP
  omp_set_num_threads(n);
  return n;
#else
  return 1;
#endif
}

inline int num_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

/// Applies MDCS_THREADS (default 1) and returns the resulting worker count.
inline int configure_threads_from_env() {
  int n = 1;
  if (const char* env = std::getenv("MDCS_THREADS")) {
    try {
      n = std::stoi(env);
    } catch (...) {
      n = 1;
    }
  }
  return set_num_threads(n);
}

/// Keeps freed activation buffers in the heap instead of returning them to
/// the OS after every batch. Training allocates and frees the same multi-MB
/// tensors each step; with glibc defaults each one is a fresh mmap plus page
/// faults. No-op on other C libraries.
inline void tune_allocator() {
#ifdef __GLIBC__
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
  mallopt(M_TOP_PAD, 1 << 28);
#endif
}

}  // namespace mdcs
