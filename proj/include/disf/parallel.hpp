#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>

namespace disf {

// Resolves a worker request: a positive integer, "auto" (hardware threads),
// or empty, in which case DISF_WORKERS is consulted before defaulting to 1.
std::size_t resolve_workers(const std::optional<std::string>& request);

// Runs body(i, slot) for i in [0, count) on up to `workers` threads. Each
// index runs exactly once. `slot` identifies the calling thread and is below
// parallel_slots(count, workers), so callers can keep per-thread scratch. If
// any call throws, the exception from the lowest failing index is rethrown
// after all threads finish.
void parallel_for(std::size_t count, std::size_t workers,
                  const std::function<void(std::size_t, std::size_t)>& body);

std::size_t parallel_slots(std::size_t count, std::size_t workers) noexcept;

}  // namespace disf
