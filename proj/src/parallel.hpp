// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace mixmc::detail {

// Splits [0, n) into `blocks` contiguous ranges and calls fn(block, begin, end)
// for each, one thread per block. The first exception thrown is rethrown.
template <typename Fn>
void for_blocks(std::size_t n, std::size_t blocks, Fn&& fn) {
  blocks = std::max<std::size_t>(1, std::min(blocks, n));
  if (blocks == 1) {
    fn(std::size_t{0}, std::size_t{0}, n);
    return;
  }
  std::vector<std::exception_ptr> errors(blocks);
  std::vector<std::thread> workers;
  workers.reserve(blocks);
  for (std::size_t b = 0; b < blocks; ++b) {
    const std::size_t begin = n * b / blocks;
    const std::size_t end = n * (b + 1) / blocks;
    workers.emplace_back([&, b, begin, end] {
      try {
        fn(b, begin, end);
      } catch (...) {
        errors[b] = std::current_exception();
      }
    });
  }
  for (auto& w : workers) w.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

inline std::size_t block_count(std::size_t n, unsigned threads) {
  return std::max<std::size_t>(1, std::min<std::size_t>(threads, n));
}

}  // namespace mixmc::detail
