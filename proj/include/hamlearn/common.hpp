// Copyright 2026 The hamlearn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <atomic>
#include <complex>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace hamlearn {

using complex = std::complex<double>;

/// Thrown when an ODE integration produces non-finite values. Carries the
/// index of the offending step so trial harnesses can report diagnostics.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::size_t step, const std::string& what)
      : std::runtime_error(what), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

// std::complex<double> is layout-compatible with double[2] (array-oriented
// access, [complex.numbers.general]), so an interleaved re/im buffer can be
// viewed as a complex vector and vice versa.
inline std::span<complex> as_complex(std::span<double> v) {
  return {reinterpret_cast<complex*>(v.data()), v.size() / 2};
}

inline std::span<const complex> as_complex(std::span<const double> v) {
  return {reinterpret_cast<const complex*>(v.data()), v.size() / 2};
}

inline std::span<double> as_real(std::span<complex> v) {
  return {reinterpret_cast<double*>(v.data()), v.size() * 2};
}

inline std::span<const double> as_real(std::span<const complex> v) {
  return {reinterpret_cast<const double*>(v.data()), v.size() * 2};
}

/// Runs fn(i) for i in [0, count) on up to `jobs` threads. Work items must be
/// independent; callers are responsible for writing results into
/// pre-allocated, index-addressed slots so output order never depends on
/// scheduling.
template <typename Fn>
void parallel_for(std::size_t count, unsigned jobs, Fn&& fn) {
  if (count == 0) return;
  unsigned workers = jobs == 0 ? std::thread::hardware_concurrency() : jobs;
  if (workers <= 1 || count == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  workers = static_cast<unsigned>(
      std::min<std::size_t>(workers, count));
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  auto worker = [&] {
    while (true) {
      std::size_t i = next.fetch_add(1);
      if (i >= count || failed.load()) return;
      try {
        fn(i);
      } catch (...) {
        if (!failed.exchange(true)) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

/// FNV-1a over a byte string; used to stamp artifacts with a config hash.
inline std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string hex_u64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

}  // namespace hamlearn
