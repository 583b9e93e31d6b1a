#include "disf/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <thread>
#include <vector>

#include "disf/error.hpp"

namespace disf {

std::size_t resolve_workers(const std::optional<std::string>& request) {
  std::string text;
  if (request && !request->empty()) {
    text = *request;
  } else if (const char* env = std::getenv("DISF_WORKERS"); env != nullptr && *env != '\0') {
    text = env;
  } else {
    return 1;
  }
  if (text == "auto") return std::max<std::size_t>(1, std::thread::hardware_concurrency());
  std::size_t consumed = 0;
  long long value = 0;
  try {
    value = std::stoll(text, &consumed);
  } catch (const std::exception&) {
    consumed = 0;
  }
  if (consumed != text.size() || value < 1) {
    throw ArgumentError("workers must be a positive integer or 'auto', got '" + text + "'");
  }
  return static_cast<std::size_t>(value);
}

std::size_t parallel_slots(std::size_t count, std::size_t workers) noexcept {
  return std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(count, 1));
}

void parallel_for(std::size_t count, std::size_t workers,
                  const std::function<void(std::size_t, std::size_t)>& body) {
  if (count == 0) return;
  workers = parallel_slots(count, workers);
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto drain = [&](std::size_t slot) {
    for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
      try {
        body(i, slot);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    drain(0);
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(drain, w);
  }
  for (auto& error : errors) {
    if (error) std::rethrow_exception(error);
  }
}

}  // namespace disf
