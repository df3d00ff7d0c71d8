#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace sfv {

// Half-open index range handled by one worker.
struct Chunk {
  std::size_t begin;
  std::size_t end;
};

// Splits [0, n) into `threads` contiguous chunks. The split depends only on n
// and the thread count, so reductions performed per chunk and then combined in
// chunk order are bit-identical across runs.
inline std::vector<Chunk> split_range(std::size_t n, std::size_t threads) {
  threads = std::max<std::size_t>(1, std::min(threads, std::max<std::size_t>(n, 1)));
  std::vector<Chunk> chunks;
  chunks.reserve(threads);
  const std::size_t base = n / threads, extra = n % threads;
  std::size_t at = 0;
  for (std::size_t t = 0; t < threads; ++t) {
    const std::size_t len = base + (t < extra ? 1 : 0);
    chunks.push_back({at, at + len});
    at += len;
  }
  return chunks;
}

// Runs body(chunk_index, chunk) for every chunk. Chunk 0 runs on the calling
// thread. The first exception thrown by any worker is rethrown.
template <typename Body>
void for_each_chunk(const std::vector<Chunk>& chunks, Body&& body) {
  if (chunks.size() == 1) {
    body(std::size_t{0}, chunks[0]);
    return;
  }
  std::vector<std::exception_ptr> errors(chunks.size());
  std::vector<std::thread> workers;
  workers.reserve(chunks.size() - 1);
  for (std::size_t t = 1; t < chunks.size(); ++t) {
    workers.emplace_back([&, t] {
      try {
        body(t, chunks[t]);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  try {
    body(std::size_t{0}, chunks[0]);
  } catch (...) {
    errors[0] = std::current_exception();
  }
  for (auto& w : workers) w.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// Thread count from SFV_NUM_THREADS, falling back to 1.
inline std::size_t default_thread_count() {
  if (const char* env = std::getenv("SFV_NUM_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<std::size_t>(v);
    } catch (...) {
    }
  }
  return 1;
}

}  // namespace sfv
