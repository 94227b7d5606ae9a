#include "sand/parallel.hpp"

#include <exception>
#include <thread>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace sand::parallel {

int resolve_jobs(int requested) {
  if (requested > 0) return requested;
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

bool openmp_enabled() {
#ifdef _OPENMP
  return true;
#else
  return false;
#endif
}

namespace {

// Rethrows the captured exception with the smallest index, so failure
// reporting is identical no matter how indices were scheduled.
void rethrow_first(const std::vector<std::exception_ptr>& eptrs) {
  for (const auto& e : eptrs) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

void run_serial(std::size_t n, const std::function<void(std::size_t)>& fn) {
  std::vector<std::exception_ptr> eptrs(n);
  for (std::size_t i = 0; i < n; ++i) {
    try {
      fn(i);
    } catch (...) {
      eptrs[i] = std::current_exception();
    }
  }
  rethrow_first(eptrs);
}

void run_openmp(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
#ifdef _OPENMP
  std::vector<std::exception_ptr> eptrs(n);
  const int threads = resolve_jobs(jobs);
  // Work items vary wildly in size (a flagged trajectory costs far more than
  // an unflagged one), so dynamic scheduling with chunk 1.
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (long long i = 0; i < static_cast<long long>(n); ++i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
      eptrs[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  rethrow_first(eptrs);
#else
  (void)jobs;
  run_serial(n, fn);
#endif
}

void run_indexed(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  if (jobs == 1) {
    run_serial(n, fn);
  } else {
    run_openmp(n, jobs, fn);
  }
}

}  // namespace sand::parallel
