// Copyright 2026 The phonoprobe Authors.
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

#ifndef PHONOPROBE_UTIL_HPP
#define PHONOPROBE_UTIL_HPP

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace phonoprobe::util {

// --- seeding and hashing ---------------------------------------------------

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Derives an independent stream seed from a base seed and any number of
// mix-in values. Used everywhere seeds fan out (per utterance, per phone,
// per probe) so results do not depend on scheduling or worker count.
inline std::uint64_t derive_seed(std::uint64_t base) { return splitmix64(base); }

template <typename... Rest>
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t v, Rest... rest) {
  return derive_seed(splitmix64(base ^ splitmix64(v)), rest...);
}

template <typename... Rest>
std::uint64_t derive_seed(std::uint64_t base, std::string_view s, Rest... rest) {
  return derive_seed(base, fnv1a(s), rest...);
}

// CRC-32 (IEEE 802.3, reflected polynomial 0xEDB88320). Detects any
// single-byte corruption, which is what the archive integrity check needs.
std::uint32_t crc32(const void* data, std::size_t len, std::uint32_t seed = 0);

inline std::uint32_t crc32_str(std::string_view s, std::uint32_t seed = 0) {
  return crc32(s.data(), s.size(), seed);
}

// --- seeded random draws ----------------------------------------------------

// mt19937_64 with hand-rolled distributions. The std distributions are
// implementation-defined, so all draws go through these to keep corpora and
// checkpoints reproducible across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // uniform in [0, 1)
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // uniform in {0, ..., n-1}
  std::uint64_t uniform_int(std::uint64_t n) { return engine_() % n; }

  // standard normal via Box-Muller; draws exactly two uniforms per call
  double normal() {
    double u1 = static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;  // (0,1]
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

 private:
  std::mt19937_64 engine_;
};

// --- parallel execution ------------------------------------------------------

// Caps the worker count used by parallel_for; n <= 0 restores the default.
void set_max_threads(int n);
int max_threads();

// Runs fn(i) for i in [0, n). Every iteration must write only to its own
// output slots; reductions are done by the caller in index order afterwards,
// so results are identical for any worker count.
void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& fn);

}  // namespace phonoprobe::util

#endif  // PHONOPROBE_UTIL_HPP
