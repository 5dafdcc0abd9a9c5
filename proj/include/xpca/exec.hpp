#pragma once

#include <cstddef>
#include <exception>

namespace xpca {

// Every kernel that loops over rows, columns or observed entries takes an
// Exec tag. Serial is the reference path the tests compare against; both
// paths evaluate identical per-index work and reduce in index order, so
// their results agree bit for bit.
enum class Exec { Serial, Parallel };

template <class Fn>
void for_each_index(Exec exec, std::ptrdiff_t count, Fn&& fn) {
  if (exec == Exec::Serial) {
    for (std::ptrdiff_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      fn(i);
    } catch (...) {
#pragma omp critical(xpca_for_each_index)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace xpca
