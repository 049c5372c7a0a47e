//
// Copyright 2026 The dpjl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#ifndef DPJL_RNG_H_
#define DPJL_RNG_H_

#include <cstdint>
#include <string>
#include <string_view>

#include <Eigen/Core>

namespace dpjl {

// Counter-based random stream keyed by (seed, label).
//
// The generator is frozen; changing any constant below changes every
// trajectory and checkpoint produced by this library.
//
//   key     = mix64(seed ^ 0x9e3779b97f4a7c15 ^ mix64(fnv1a64(label)))
//   word(c) = mix64(mix64(key + c.lo * 0x9e3779b97f4a7c15) ^ c.hi)
//
// where mix64 is the SplitMix64 finalizer and c is a 128-bit counter that
// starts at zero and advances by one per 64-bit word. Uniform doubles take
// the top 53 bits and are centered in their cell, so they lie strictly in
// (0, 1). Gaussians use the Marsaglia polar method and consume words in
// pairs; the spare variate of each accepted pair is returned next.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::string label);

  std::uint64_t seed() const { return seed_; }
  const std::string& label() const { return label_; }
  std::uint64_t counter_lo() const { return counter_lo_; }
  std::uint64_t counter_hi() const { return counter_hi_; }

  // Stream for `seed` under the label "<label>/<child>".
  RngStream child(std::string_view child) const;

  std::uint64_t next_u64();
  // Uniform in (0, 1).
  double next_uniform();
  // Uniform integer in [0, bound) without modulo bias.
  std::uint64_t next_below(std::uint64_t bound);
  double next_gaussian();

 private:
  std::uint64_t seed_;
  std::string label_;
  std::uint64_t key_;
  std::uint64_t counter_lo_ = 0;
  std::uint64_t counter_hi_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t mix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view bytes);

RngStream derive_stream(std::uint64_t seed, std::string_view label);

// n i.i.d. standard normal draws. Throws std::invalid_argument if n < 1.
Eigen::VectorXd sample_std_gaussian(RngStream& rng, Eigen::Index n);

}  // namespace dpjl

#endif  // DPJL_RNG_H_
