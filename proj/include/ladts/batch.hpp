#pragma once

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ladts {

// Training-batch kernels come in two flavours: the serial reference loop
// and the OpenMP loop over samples. Per-sample results land in slot k of a
// preallocated buffer and are reduced serially in sample order afterwards,
// so both modes produce bit-identical sums at any thread count.
enum class BatchMode { serial, openmp };

template <typename F>
inline void for_each_sample(int n, BatchMode mode, F&& body) {
#ifdef _OPENMP
  if (mode == BatchMode::openmp) {
#pragma omp parallel for schedule(static)
    for (int k = 0; k < n; ++k) body(k);
    return;
  }
#else
  (void)mode;
#endif
  for (int k = 0; k < n; ++k) body(k);
}

}  // namespace ladts
