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

#ifndef DPJL_PLD_H_
#define DPJL_PLD_H_

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

#include "dpjl/stats.h"
#include "dpjl/tradeoff.h"

namespace dpjl {

// One subsampled JL step repeated `steps` times. jl_dim == kExactJl is
// vanilla clipping (Z = 1).
struct MechanismSpec {
  double sigma = 1.0;
  int jl_dim = kExactJl;
  double sample_rate = 1.0;
  std::int64_t steps = 1;

  bool exact() const { return jl_dim == kExactJl; }
  // Throws std::invalid_argument unless sigma > 0, steps >= 1,
  // 0 < sample_rate <= 1 and jl_dim >= 1 or exact.
  void validate() const;
};

// REMOVE compares the subsampled mixture against the null pair; ADD is the
// reverse ordering.
enum class Direction { kRemove, kAdd };

const char* direction_name(Direction d);

struct PldOptions {
  double delta_eps = 1e-3;
  double loss_clamp = 32.0;
  QuadratureSpec quad;
  // Mass allowed to move pessimistically off each tail after a convolution.
  double tail_mass = 1e-15;
  // Grid spacing grows to 2 * clamp / max_bins once the clamp is widened.
  std::int64_t max_bins = std::int64_t{1} << 18;
  double widen_factor = 32.0;
  double max_clamp = 1e15;

  void validate() const;
};

// Discrete law of the privacy loss L = log(dA/dB) under A, where (A, B) is
// (mixture, null) for REMOVE and (null, mixture) for ADD. Bin k carries loss
// (origin + k) * grid_spacing. mass_at_plus_inf is A-mass where B vanishes
// or that was pushed past the clamp.
//
// The A-side law is stored because delta(eps) weights it by bounded factors;
// the B-side law e^-l q(l) is derived on demand.
class PrivacyLossDistribution {
 public:
  PrivacyLossDistribution(double grid_spacing, std::int64_t origin,
                          Eigen::VectorXd masses, double mass_at_plus_inf,
                          Direction direction, double loss_clamp);

  double grid_spacing() const { return grid_spacing_; }
  std::int64_t origin() const { return origin_; }
  const Eigen::VectorXd& masses() const { return masses_; }
  double mass_at_plus_inf() const { return mass_at_plus_inf_; }
  Direction direction() const { return direction_; }
  double loss_clamp() const { return loss_clamp_; }
  Eigen::Index size() const { return masses_.size(); }

  double loss(Eigen::Index k) const {
    return static_cast<double>(origin_ + k) * grid_spacing_;
  }
  // Finite mass plus mass at +inf; one up to rounding.
  double total_mass() const { return masses_.sum() + mass_at_plus_inf_; }
  // e^-l q(l): the loss law under B. Its total is at most one; the
  // pessimistic rounding only removes B-mass.
  Eigen::VectorXd null_masses() const;

 private:
  double grid_spacing_;
  std::int64_t origin_;
  Eigen::VectorXd masses_;
  double mass_at_plus_inf_;
  Direction direction_;
  double loss_clamp_;
};

// Single-step loss law on the grid of spacing options.delta_eps, clamped to
// [-loss_clamp, loss_clamp]. The discretization is connect-the-dots: the
// hockey-stick divergence D(x) = sup_S A(S) - x B(S) is evaluated exactly at
// x = e^l on the grid and interpolated linearly in x, with D(0) = 1 below the
// grid and D constant above it. The result dominates the true pair at every
// epsilon. The conditional D given Z is closed-form; Z is integrated with a
// fixed chi rule whose truncated mass is treated as fully leaking.
PrivacyLossDistribution build_pld(const MechanismSpec& spec, Direction direction,
                                  const PldOptions& options = {});

// Hockey-stick divergence of one step at x = e^log_x, as used by build_pld.
double single_step_hockey_stick(const MechanismSpec& spec, Direction direction,
                                double log_x, const QuadratureSpec& quad = {});

// Sum of independent losses via FFT, then pessimistic tail trimming: mass
// below the kept range moves up to its lowest bin, mass above the clamp or
// past the upper tail budget moves to +inf.
PrivacyLossDistribution convolve(const PrivacyLossDistribution& a,
                                 const PrivacyLossDistribution& b,
                                 double tail_mass = 1e-15);

// T-fold self-composition by repeated squaring.
PrivacyLossDistribution compose_pld(const PrivacyLossDistribution& pld,
                                    std::int64_t steps, double tail_mass = 1e-15);

// delta(eps) = mass_at_plus_inf + sum_{l > eps} q(l) (1 - e^{eps - l}).
double delta_at_epsilon(const PrivacyLossDistribution& pld, double epsilon);

class DeltaUnattainableError : public std::runtime_error {
 public:
  DeltaUnattainableError(const std::string& what, double min_delta,
                         double loss_clamp)
      : std::runtime_error(what), min_delta_(min_delta), loss_clamp_(loss_clamp) {}
  // Smallest delta reachable on the grid that failed.
  double min_delta() const { return min_delta_; }
  double loss_clamp() const { return loss_clamp_; }

 private:
  double min_delta_;
  double loss_clamp_;
};

// Smallest eps >= 0 with delta_at_epsilon(pld, eps) <= delta. Exact on the
// discrete law, since delta is linear in e^eps between grid losses. Throws
// DeltaUnattainableError when mass_at_plus_inf >= delta.
double epsilon_for_delta(const PrivacyLossDistribution& pld, double delta);

struct DirectionResult {
  double epsilon = 0.0;
  double loss_clamp = 0.0;
  double grid_spacing = 0.0;
  int attempts = 0;
};

struct AccountantResult {
  double epsilon = 0.0;
  double delta = 0.0;
  DirectionResult remove;
  DirectionResult add;
};

// Composed PLDs for both directions at the settings that attained delta.
struct ComposedPair {
  PrivacyLossDistribution remove;
  PrivacyLossDistribution add;
};

// Builds and composes both directions, widening the clamp by widen_factor
// (and coarsening the grid to keep max_bins) until delta is attainable, and
// returns the larger epsilon. Throws DeltaUnattainableError past max_clamp.
AccountantResult epsilon_at_delta(const MechanismSpec& spec, double delta,
                                  const PldOptions& options = {},
                                  std::optional<ComposedPair>* composed = nullptr);

// Composed PLDs at the base clamp, without widening.
ComposedPair compose_both(const MechanismSpec& spec, const PldOptions& options = {});

// max over directions of delta(eps) at each eps.
Eigen::VectorXd delta_profile(const ComposedPair& pair,
                              const Eigen::VectorXd& epsilons);

}  // namespace dpjl

#endif  // DPJL_PLD_H_
