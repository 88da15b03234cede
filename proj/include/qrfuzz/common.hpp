// Copyright 2026 The qrfuzz Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef QRFUZZ_COMMON_HPP_
#define QRFUZZ_COMMON_HPP_

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace qrfuzz {

using Bytes = std::vector<std::uint8_t>;

std::string to_hex(const Bytes& data);
Bytes from_hex(const std::string& hex);  // throws std::invalid_argument

// Deterministic PRNG. splitmix64 core: portable across platforms and
// standard-library implementations, unlike <random> distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  // Uniform in [0, 1) with 53 bits of precision.
  double unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  std::uint8_t byte() { return static_cast<std::uint8_t>(next_u64() & 0xff); }

 private:
  std::uint64_t state_;
};

// Stable seed derivation for (campaign seed, case index) and similar pairs.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

std::string read_file(const std::string& path);   // throws on I/O error
void write_file(const std::string& path, const std::string& content);

std::string lower_ascii(std::string s);

}  // namespace qrfuzz

#endif  // QRFUZZ_COMMON_HPP_
