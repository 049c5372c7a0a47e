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

#ifndef DPJL_TRADEOFF_H_
#define DPJL_TRADEOFF_H_

#include <string>

#include <Eigen/Core>

#include "dpjl/stats.h"

namespace dpjl {

// Piecewise-linear tradeoff function beta(alpha) on a grid that starts at
// alpha = 0 and ends at alpha = 1. Construction rejects grids that are not
// strictly increasing, values outside [0, 1], increasing betas, points above
// the identity 1 - alpha, and non-convex chords.
class TradeoffCurve {
 public:
  TradeoffCurve(Eigen::VectorXd alphas, Eigen::VectorXd betas);

  const Eigen::VectorXd& alphas() const { return alphas_; }
  const Eigen::VectorXd& betas() const { return betas_; }
  Eigen::Index size() const { return alphas_.size(); }

  // Linear interpolation; alpha is clamped to [0, 1].
  double operator()(double alpha) const;
  Eigen::VectorXd evaluate(const Eigen::VectorXd& alphas) const;

 private:
  Eigen::VectorXd alphas_;
  Eigen::VectorXd betas_;
};

// Empty string when (alphas, betas) is a valid curve, else the first
// violation found.
std::string check_curve(const Eigen::VectorXd& alphas,
                        const Eigen::VectorXd& betas);

inline constexpr int kDefaultCurvePoints = 4001;
inline constexpr double kAlphaGridFloor = 1e-10;

// 0, 1, and n - 2 points Phi(s) with s uniform on
// [Phi^-1(1e-10), -Phi^-1(1e-10)].
Eigen::VectorXd standard_alpha_grid(int n = kDefaultCurvePoints);

struct EpsDeltaPoint {
  double epsilon = 0.0;
  double delta = 0.0;
};

// Marker for vanilla per-sample clipping, where the norm is known exactly.
inline constexpr int kExactJl = 0;

// beta = Phi(Phi^-1(1 - alpha) - mu) on the standard grid.
TradeoffCurve gaussian_curve(double mu, int n_points = kDefaultCurvePoints);

// Identity 1 - alpha on the standard grid.
TradeoffCurve identity_curve(int n_points = kDefaultCurvePoints);

// Single-step JL mechanism: with W ~ chi2_r and Z = sqrt(r / W),
//   alpha(t) = E[Phi(-t sigma / Z - Z / (2 sigma))],
//   beta(t)  = E[Phi( t sigma / Z - Z / (2 sigma))] = alpha(-t).
// The expectation uses one fixed chi rule for every t, so the points are the
// exact tradeoff of a discrete mixture and convex to rounding. jl_dim ==
// kExactJl fixes Z = 1. Thresholds are t = 0 plus, per sign, a geometric
// and a linear ladder up to the first doubling of t with alpha < 1e-10.
TradeoffCurve jl_mechanism_curve(double sigma, int jl_dim,
                                 const QuadratureSpec& quad = {},
                                 int n_points = kDefaultCurvePoints);

// alpha(t) above for a single threshold, using the adaptive quadrature.
double jl_type_one_error(double sigma, int jl_dim, double t,
                         const QuadratureSpec& quad = {});

// p f + (1 - p) Id on the same grid. Requires p in [0, 1].
TradeoffCurve subsample_curve(const TradeoffCurve& f, double p);

// f^-1(a) = inf{alpha : f(alpha) <= a}, sampled on the standard grid.
TradeoffCurve curve_inverse(const TradeoffCurve& f,
                            int n_points = kDefaultCurvePoints);

// Lower convex envelope of min(f, f^-1) on the standard grid.
TradeoffCurve symmetrize(const TradeoffCurve& f,
                         int n_points = kDefaultCurvePoints);

// alpha* with f(alpha*) = alpha*, by bisection.
double curve_fixed_point(const TradeoffCurve& f);

// (log(-f'(alpha)), 1 - f(alpha) + alpha f'(alpha)) with f' the slope of the
// grid segment starting at or before alpha. Requires 0 < alpha <= alpha*.
EpsDeltaPoint eps_delta_from_curve(const TradeoffCurve& f, double alpha);

// Curve of an (epsilon, delta) profile: the pointwise sup over the profile of
// max(0, 1 - delta - e^eps alpha, e^-eps (1 - delta - alpha)).
TradeoffCurve curve_from_eps_delta(const Eigen::VectorXd& epsilons,
                                   const Eigen::VectorXd& deltas,
                                   int n_points = kDefaultCurvePoints);

}  // namespace dpjl

#endif  // DPJL_TRADEOFF_H_
