#pragma once

#include <cstddef>
#include <functional>

namespace sand::parallel {

// Resolves a --jobs style request: values <= 0 mean "available parallelism".
int resolve_jobs(int requested);

bool openmp_enabled();

// Serial reference path. Kept verbatim so tests and sand_bench can compare
// the OpenMP path against it item for item.
void run_serial(std::size_t n, const std::function<void(std::size_t)>& fn);

// OpenMP path over the same contract. Falls back to serial when the build
// has no OpenMP support.
void run_openmp(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

// Dispatch used by the pipeline and metrics: jobs == 1 takes the serial
// reference path, anything else the OpenMP path. Work items must be
// independent and write only to their own output slots; under that contract
// both paths produce identical effects. Exceptions thrown by fn are captured
// per index and the one with the smallest index is rethrown after the loop,
// so error behavior does not depend on scheduling.
void run_indexed(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

}  // namespace sand::parallel
