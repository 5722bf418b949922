#pragma once

#include <algorithm>
#include <cstdint>
#include <exception>
#include <thread>
#include <vector>

namespace hybridlab {

/// Splits [0, count) into `jobs` contiguous chunks and runs body(chunk, begin, end)
/// for each on its own thread. Chunk boundaries depend only on (count, jobs);
/// callers merge per-chunk results in chunk order so outputs do not depend on
/// scheduling. The first exception thrown by any chunk is rethrown.
template <typename Body>
void parallel_chunks(std::int64_t count, int jobs, Body&& body) {
  jobs = std::max(1, jobs);
  if (count <= 0) return;
  const std::int64_t chunks = std::min<std::int64_t>(jobs, count);
  if (chunks == 1) {
    body(std::int64_t{0}, std::int64_t{0}, count);
    return;
  }
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(chunks));
  std::vector<std::thread> workers;
  workers.reserve(static_cast<std::size_t>(chunks));
  for (std::int64_t c = 0; c < chunks; ++c) {
    const std::int64_t begin = count * c / chunks;
    const std::int64_t end = count * (c + 1) / chunks;
    workers.emplace_back([&, c, begin, end] {
      try {
        body(c, begin, end);
      } catch (...) {
        errors[static_cast<std::size_t>(c)] = std::current_exception();
      }
    });
  }
  for (auto& w : workers) w.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

inline std::int64_t chunk_count(std::int64_t count, int jobs) {
  return count <= 0 ? 0 : std::min<std::int64_t>(std::max(1, jobs), count);
}

}  // namespace hybridlab
