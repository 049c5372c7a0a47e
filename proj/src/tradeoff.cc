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

#include "dpjl/tradeoff.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <utility>
#include <vector>

namespace dpjl {
namespace {

constexpr double kChordTolerance = 1e-10;
constexpr double kOrderTolerance = 1e-12;

std::string describe(const char* what, Eigen::Index i, double a, double b) {
  std::ostringstream out;
  out.precision(17);
  out << what << " at index " << i << " (alpha=" << a << ", beta=" << b << ")";
  return out.str();
}

struct ChiNodes {
  std::vector<double> z;
  std::vector<double> w;
};

ChiNodes chi_nodes(int jl_dim, const QuadratureSpec& quad) {
  if (jl_dim == kExactJl) return {{1.0}, {1.0}};
  if (jl_dim < 1) throw std::invalid_argument("jl_dim must be >= 1 or exact");
  ChiRule rule = make_chi_rule(jl_dim, quad, 4, 16);
  return {std::move(rule.z), std::move(rule.weight)};
}

double type_one(const ChiNodes& nodes, double sigma, double t) {
  double s = 0.0;
  for (std::size_t k = 0; k < nodes.z.size(); ++k) {
    const double z = nodes.z[k];
    s += nodes.w[k] * std_normal_cdf(-t * sigma / z - z / (2.0 * sigma));
  }
  return s;
}

// Interpolates between (x0, y0) and (x1, y1) at x linearly in probit
// coordinates, where Gaussian tradeoff curves are straight lines; falls back
// to linear when an endpoint sits on the boundary of the unit square.
double probit_interpolate(double x0, double y0, double x1, double y1, double x) {
  const bool interior = x0 > 0.0 && x0 < 1.0 && x1 > 0.0 && x1 < 1.0 &&
                        y0 > 0.0 && y0 < 1.0 && y1 > 0.0 && y1 < 1.0 &&
                        x > 0.0 && x < 1.0;
  if (interior) {
    const double s0 = std_normal_inv_cdf(x0), s1 = std_normal_inv_cdf(x1);
    const double t0 = std_normal_inv_cdf(y0), t1 = std_normal_inv_cdf(y1);
    if (s1 != s0) {
      const double u = (std_normal_inv_cdf(x) - s0) / (s1 - s0);
      const double y = std_normal_cdf(t0 + u * (t1 - t0));
      if (y >= std::min(y0, y1) && y <= std::max(y0, y1)) return y;
    }
  }
  if (x1 == x0) return y1;
  return y0 + (y1 - y0) * ((x - x0) / (x1 - x0));
}

// Lower convex envelope of (grid, h), resampled on grid. Uses Andrew's
// monotone chain.
Eigen::VectorXd lower_hull(const Eigen::VectorXd& grid, const Eigen::VectorXd& h) {
  const Eigen::Index n = grid.size();
  std::vector<Eigen::Index> hull;
  for (Eigen::Index i = 0; i < n; ++i) {
    while (hull.size() >= 2) {
      const Eigen::Index o = hull[hull.size() - 2], a = hull.back();
      const double cross = (grid[a] - grid[o]) * (h[i] - h[o]) -
                           (h[a] - h[o]) * (grid[i] - grid[o]);
      if (cross <= 0.0) hull.pop_back(); else break;
    }
    hull.push_back(i);
  }
  Eigen::VectorXd out(n);
  std::size_t seg = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    while (seg + 2 < hull.size() && grid[hull[seg + 1]] <= grid[i]) ++seg;
    const Eigen::Index a = hull[seg], b = hull[std::min(seg + 1, hull.size() - 1)];
    if (a == b || grid[i] == grid[a]) {
      out[i] = h[a];
    } else if (grid[i] == grid[b]) {
      out[i] = h[b];
    } else {
      out[i] = h[a] + (h[b] - h[a]) * (grid[i] - grid[a]) / (grid[b] - grid[a]);
    }
  }
  return out;
}

}  // namespace

std::string check_curve(const Eigen::VectorXd& alphas,
                        const Eigen::VectorXd& betas) {
  const Eigen::Index n = alphas.size();
  if (n < 2 || betas.size() != n) return "curve needs >= 2 matching points";
  if (alphas[0] != 0.0 || alphas[n - 1] != 1.0) {
    return "alpha grid must start at 0 and end at 1";
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const double a = alphas[i], b = betas[i];
    if (!std::isfinite(a) || !std::isfinite(b)) {
      return describe("non-finite point", i, a, b);
    }
    if (b < 0.0 || b > 1.0) return describe("beta outside [0,1]", i, a, b);
    if (b > 1.0 - a + kOrderTolerance) {
      return describe("beta above 1 - alpha", i, a, b);
    }
    if (i > 0 && !(a > alphas[i - 1])) {
      return describe("alphas not strictly increasing", i, a, b);
    }
    if (i > 0 && b > betas[i - 1] + kOrderTolerance) {
      return describe("betas increasing", i, a, b);
    }
    if (i > 0 && i + 1 < n) {
      const double a0 = alphas[i - 1], a1 = alphas[i + 1];
      const double chord =
          betas[i - 1] + (betas[i + 1] - betas[i - 1]) * (a - a0) / (a1 - a0);
      if (b > chord + kChordTolerance) {
        return describe("curve not convex", i, a, b);
      }
    }
  }
  return {};
}

TradeoffCurve::TradeoffCurve(Eigen::VectorXd alphas, Eigen::VectorXd betas)
    : alphas_(std::move(alphas)), betas_(std::move(betas)) {
  const std::string problem = check_curve(alphas_, betas_);
  if (!problem.empty()) throw std::invalid_argument("TradeoffCurve: " + problem);
}

double TradeoffCurve::operator()(double alpha) const {
  if (alpha <= 0.0) return betas_[0];
  if (alpha >= 1.0) return betas_[size() - 1];
  const double* begin = alphas_.data();
  const double* it = std::upper_bound(begin, begin + size(), alpha);
  const Eigen::Index j = it - begin;  // alphas_[j - 1] <= alpha < alphas_[j]
  const double a0 = alphas_[j - 1], a1 = alphas_[j];
  const double b0 = betas_[j - 1], b1 = betas_[j];
  return b0 + (b1 - b0) * ((alpha - a0) / (a1 - a0));
}

Eigen::VectorXd TradeoffCurve::evaluate(const Eigen::VectorXd& alphas) const {
  Eigen::VectorXd out(alphas.size());
  for (Eigen::Index i = 0; i < alphas.size(); ++i) out[i] = (*this)(alphas[i]);
  return out;
}

Eigen::VectorXd standard_alpha_grid(int n) {
  if (n < 3) throw std::invalid_argument("standard_alpha_grid: n must be >= 3");
  const double s_max = -std_normal_inv_cdf(kAlphaGridFloor);
  Eigen::VectorXd a(n);
  a[0] = 0.0;
  a[n - 1] = 1.0;
  const int m = n - 2;
  for (int i = 0; i < m; ++i) {
    const double s = m == 1 ? 0.0 : -s_max + 2.0 * s_max * i / (m - 1);
    a[i + 1] = std_normal_cdf(s);
  }
  return a;
}

TradeoffCurve identity_curve(int n_points) {
  Eigen::VectorXd a = standard_alpha_grid(n_points);
  Eigen::VectorXd b = (1.0 - a.array()).matrix();
  return TradeoffCurve(std::move(a), std::move(b));
}

TradeoffCurve gaussian_curve(double mu, int n_points) {
  if (!(mu >= 0.0)) throw std::invalid_argument("gaussian_curve: mu must be >= 0");
  if (mu == 0.0) return identity_curve(n_points);
  Eigen::VectorXd a = standard_alpha_grid(n_points);
  Eigen::VectorXd b(a.size());
  b[0] = 1.0;
  b[a.size() - 1] = 0.0;
  for (Eigen::Index i = 1; i + 1 < a.size(); ++i) {
    // Phi^-1(1 - alpha) = -Phi^-1(alpha) keeps precision for small alpha.
    b[i] = std_normal_cdf(-std_normal_inv_cdf(a[i]) - mu);
  }
  return TradeoffCurve(std::move(a), std::move(b));
}

double jl_type_one_error(double sigma, int jl_dim, double t,
                         const QuadratureSpec& quad) {
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be > 0");
  const auto g = [&](double z) {
    return std_normal_cdf(-t * sigma / z - z / (2.0 * sigma));
  };
  if (jl_dim == kExactJl) return g(1.0);
  return expectation_over_chi(jl_dim, g, quad).value;
}

TradeoffCurve jl_mechanism_curve(double sigma, int jl_dim,
                                 const QuadratureSpec& quad, int n_points) {
  if (!(sigma > 0.0)) {
    throw std::invalid_argument("jl_mechanism_curve: sigma must be > 0");
  }
  if (n_points < 7) {
    throw std::invalid_argument("jl_mechanism_curve: n_points must be >= 7");
  }
  const ChiNodes nodes = chi_nodes(jl_dim, quad);

  double t_max = 1.0;
  while (type_one(nodes, sigma, t_max) >= kAlphaGridFloor) {
    t_max *= 2.0;
    if (t_max > 1e12) throw std::runtime_error("jl_mechanism_curve: no t_max");
  }

  // Half the positive thresholds on a linear ladder, half geometric from
  // t_max * 1e-4. Mirrored for t < 0.
  const int per_side = (n_points - 3) / 2;
  const int n_lin = per_side / 2;
  const int n_geo = per_side - n_lin;
  std::vector<double> ts;
  for (int i = 1; i <= n_lin; ++i) ts.push_back(t_max * i / n_lin);
  for (int i = 0; i < n_geo; ++i) {
    const double u = n_geo == 1 ? 1.0 : static_cast<double>(i) / (n_geo - 1);
    ts.push_back(t_max * std::pow(1e-4, 1.0 - u));
  }
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());

  // alpha(t) and beta(t) = alpha(-t): alpha ascends as t descends.
  std::vector<double> t_desc;
  for (auto it = ts.rbegin(); it != ts.rend(); ++it) t_desc.push_back(*it);
  t_desc.push_back(0.0);
  for (double t : ts) t_desc.push_back(-t);

  std::vector<double> alpha{0.0}, beta{1.0};
  for (double t : t_desc) {
    const double a = type_one(nodes, sigma, t);
    const double b = type_one(nodes, sigma, -t);
    if (a <= alpha.back() || a >= 1.0) continue;
    alpha.push_back(a);
    beta.push_back(std::min(b, beta.back()));
  }
  alpha.push_back(1.0);
  beta.push_back(0.0);
  return TradeoffCurve(Eigen::Map<Eigen::VectorXd>(alpha.data(), alpha.size()),
                       Eigen::Map<Eigen::VectorXd>(beta.data(), beta.size()));
}

TradeoffCurve subsample_curve(const TradeoffCurve& f, double p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw std::invalid_argument("subsample_curve: p must lie in [0, 1]");
  }
  const Eigen::VectorXd& a = f.alphas();
  Eigen::VectorXd b = p * f.betas() + (1.0 - p) * (1.0 - a.array()).matrix();
  return TradeoffCurve(a, std::move(b));
}

TradeoffCurve curve_inverse(const TradeoffCurve& f, int n_points) {
  Eigen::VectorXd grid = standard_alpha_grid(n_points);
  const Eigen::VectorXd& fa = f.alphas();
  const Eigen::VectorXd& fb = f.betas();
  const Eigen::Index m = f.size();
  Eigen::VectorXd out(grid.size());
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    const double level = grid[i];
    if (level >= fb[0]) {
      out[i] = 0.0;
      continue;
    }
    // First j with fb[j] <= level; betas are nonincreasing.
    Eigen::Index lo = 0, hi = m - 1;
    while (hi - lo > 1) {
      const Eigen::Index mid = (lo + hi) / 2;
      (fb[mid] <= level ? hi : lo) = mid;
    }
    out[i] = probit_interpolate(fb[lo], fa[lo], fb[hi], fa[hi], level);
  }
  // Rounding can leave the tail a hair above 1 - alpha. Probit
  // interpolation is not convex across kinks; the envelope restores it.
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    out[i] = std::clamp(out[i], 0.0, 1.0 - grid[i]);
  }
  out = lower_hull(grid, out);
  return TradeoffCurve(std::move(grid), std::move(out));
}

TradeoffCurve symmetrize(const TradeoffCurve& f, int n_points) {
  // The envelope of min(f, f^-1) is the lower hull of the nodes of f and of
  // their swaps, so no interpolation enters before the hull.
  std::vector<std::pair<double, double>> pts;
  pts.reserve(2 * f.size());
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    pts.emplace_back(f.alphas()[i], f.betas()[i]);
    pts.emplace_back(f.betas()[i], f.alphas()[i]);
  }
  std::sort(pts.begin(), pts.end());
  std::vector<std::pair<double, double>> hull;
  for (const auto& p : pts) {
    if (!hull.empty() && hull.back().first == p.first) continue;  // keeps min y
    while (hull.size() >= 2) {
      const auto& o = hull[hull.size() - 2];
      const auto& a = hull.back();
      const double cross = (a.first - o.first) * (p.second - o.second) -
                           (a.second - o.second) * (p.first - o.first);
      if (cross <= 0.0) hull.pop_back(); else break;
    }
    hull.push_back(p);
  }
  Eigen::VectorXd grid = standard_alpha_grid(n_points);
  Eigen::VectorXd out(grid.size());
  std::size_t seg = 0;
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    const double x = grid[i];
    while (seg + 2 < hull.size() && hull[seg + 1].first <= x) ++seg;
    const auto& a = hull[seg];
    const auto& b = hull[seg + 1];
    if (x == a.first) {
      out[i] = a.second;
    } else if (x == b.first) {
      out[i] = b.second;
    } else {
      out[i] = a.second + (b.second - a.second) * (x - a.first) / (b.first - a.first);
    }
    out[i] = std::clamp(out[i], 0.0, 1.0 - x);
  }
  return TradeoffCurve(std::move(grid), std::move(out));
}

double curve_fixed_point(const TradeoffCurve& f) {
  double lo = 0.0, hi = 1.0;
  if (f(0.0) <= 0.0) return 0.0;
  for (int it = 0; it < 200 && hi - lo > 1e-17; ++it) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) - mid > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

EpsDeltaPoint eps_delta_from_curve(const TradeoffCurve& f, double alpha) {
  const double star = curve_fixed_point(f);
  if (!(alpha > 0.0) || alpha > star + 1e-12) {
    throw std::invalid_argument(
        "eps_delta_from_curve: alpha must lie in (0, fixed point]");
  }
  const Eigen::VectorXd& a = f.alphas();
  const Eigen::VectorXd& b = f.betas();
  const double* begin = a.data();
  Eigen::Index j = std::upper_bound(begin, begin + a.size(), alpha) - begin - 1;
  j = std::clamp<Eigen::Index>(j, 0, a.size() - 2);
  const double slope = (b[j + 1] - b[j]) / (a[j + 1] - a[j]);
  if (!(slope < 0.0)) {
    throw std::invalid_argument("eps_delta_from_curve: flat segment at alpha");
  }
  EpsDeltaPoint out;
  out.epsilon = std::max(0.0, std::log(-slope));
  out.delta = std::clamp(1.0 - f(alpha) + alpha * slope, 0.0, 1.0);
  return out;
}

TradeoffCurve curve_from_eps_delta(const Eigen::VectorXd& epsilons,
                                   const Eigen::VectorXd& deltas,
                                   int n_points) {
  if (epsilons.size() != deltas.size() || epsilons.size() == 0) {
    throw std::invalid_argument("curve_from_eps_delta: size mismatch");
  }
  Eigen::VectorXd grid = standard_alpha_grid(n_points);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(grid.size());
  for (Eigen::Index k = 0; k < epsilons.size(); ++k) {
    const double eps = epsilons[k], d = deltas[k];
    if (!(eps >= 0.0) || !(d >= 0.0 && d <= 1.0)) {
      throw std::invalid_argument("curve_from_eps_delta: invalid point");
    }
    const double up = std::exp(eps), down = std::exp(-eps);
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
      const double v = std::max(1.0 - d - up * grid[i], down * (1.0 - d - grid[i]));
      if (v > out[i]) out[i] = v;
    }
  }
  return TradeoffCurve(std::move(grid), std::move(out));
}

}  // namespace dpjl
