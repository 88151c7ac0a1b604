// Copyright 2026 The ssvh Authors.
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

#ifndef SSVH_RNG_HPP_
#define SSVH_RNG_HPP_

#include <cstdint>
#include <initializer_list>
#include <random>

namespace ssvh {

using Rng = std::mt19937_64;

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derives an independent stream from a root seed and a path of identifiers,
// e.g. stream_seed(seed, {Stream::kGumbel, epoch, video, view}).
inline std::uint64_t stream_seed(std::uint64_t root,
                                 std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = mix64(root);
  for (std::uint64_t p : path) h = mix64(h ^ mix64(p + 0x632be59bd9b4e019ULL));
  return h;
}

inline Rng make_stream(std::uint64_t root,
                       std::initializer_list<std::uint64_t> path) {
  return Rng(stream_seed(root, path));
}

// Stream tags so unrelated consumers of one root seed never collide.
namespace stream {
inline constexpr std::uint64_t kInit = 1;
inline constexpr std::uint64_t kGumbel = 2;
inline constexpr std::uint64_t kShuffle = 3;
inline constexpr std::uint64_t kKMeans = 4;
inline constexpr std::uint64_t kRandomDrop = 5;
inline constexpr std::uint64_t kSynthetic = 6;
inline constexpr std::uint64_t kSplit = 7;
}  // namespace stream

// Uniform draw on the open interval (0, 1).
inline double uniform_open(Rng& rng) {
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  double u = dist(rng);
  while (u <= 0.0) u = dist(rng);
  return u;
}

}  // namespace ssvh

#endif  // SSVH_RNG_HPP_
