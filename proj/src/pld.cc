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

#include "dpjl/pld.h"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <sstream>
#include <utility>
#include <vector>

#include <unsupported/Eigen/FFT>

namespace dpjl {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Phi(-10.5) is about 4e-26; conditional hockey sticks are exact to that
// absolute level outside the window [-mu^2/2 - c mu, mu^2/2 + c mu].
constexpr double kWindowSigmas = 10.5;

// sup_S N(mu,1)(S) - e^lambda N(0,1)(S).
double gauss_hockey(double mu, double lambda) {
  if (lambda == -kInf) return 1.0;
  if (lambda == kInf) return 0.0;
  const double a = -lambda / mu + 0.5 * mu;
  const double b = -lambda / mu - 0.5 * mu;
  if (a > -20.0 && lambda < 30.0) {
    const double v = std_normal_cdf(a) - std::exp(lambda) * std_normal_cdf(b);
    return std::max(v, 0.0);
  }
  const double la = log_std_normal_cdf(a);
  const double r = lambda + log_std_normal_cdf(b) - la;
  if (r >= 0.0) return 0.0;
  return std::exp(la) * -std::expm1(r);
}

double log_add_exp(double x, double y) {
  if (x == -kInf) return y;
  if (y == -kInf) return x;
  const double m = std::max(x, y);
  return m + std::log1p(std::exp(-std::abs(x - y)));
}

// Per-direction change of variables between the loss level l = log x and the
// Gaussian likelihood-ratio level lambda of the conditional pair, plus the
// scale c of the conditional hockey stick: D_z(x) = c H(mu, lambda).
struct DirectionMap {
  Direction dir;
  double p;
  double log_p;
  double log_q;  // log(1 - p), -inf when p == 1

  explicit DirectionMap(Direction d, double p_in)
      : dir(d), p(p_in), log_p(std::log(p_in)),
        log_q(p_in == 1.0 ? -kInf : std::log1p(-p_in)) {}

  double lambda_of(double l) const {
    if (dir == Direction::kRemove) {
      if (l <= log_q) return -kInf;
      if (p == 1.0) return l;
      return l + std::log1p(-std::exp(log_q - l)) - log_p;
    }
    if (l >= -log_q) return kInf;
    if (p == 1.0) return l;
    return l + log_p - std::log1p(-std::exp(l + log_q));
  }

  double loss_of(double lambda) const {
    if (dir == Direction::kRemove) return log_add_exp(log_q, log_p + lambda);
    return lambda - log_add_exp(log_p, log_q + lambda);
  }

  double scale(double l) const {
    if (dir == Direction::kRemove) return p;
    if (p == 1.0) return 1.0;
    return -std::expm1(l + log_q);
  }
};

// D_z(x) minus its linear part [l < 0](1 - x). For lambda < 0 the identity
// H(mu, lambda) = 1 - y + y H(mu, -lambda) keeps the remainder small and
// accurate where D_z is close to 1 - x.
double conditional_remainder(const DirectionMap& map, double mu, double l) {
  const double lambda = map.lambda_of(l);
  if (lambda == -kInf || lambda == kInf) return 0.0;
  const double c = map.scale(l);
  if (lambda < 0.0) return c * std::exp(lambda) * gauss_hockey(mu, -lambda);
  return c * gauss_hockey(mu, lambda);
}

struct ZRule {
  std::vector<double> z;
  std::vector<double> w;
  double truncation_mass = 0.0;
};

ZRule z_rule(const MechanismSpec& spec, const QuadratureSpec& quad) {
  if (spec.exact()) return {{1.0}, {1.0}, 0.0};
  ChiRule rule = make_chi_rule(spec.jl_dim, quad, 2, 16);
  return {std::move(rule.z), std::move(rule.weight), rule.truncation_mass};
}

double effective_spacing(const PldOptions& o, double clamp) {
  return std::max(o.delta_eps, 2.0 * clamp / static_cast<double>(o.max_bins));
}

// Moves mass off both tails pessimistically: leading bins whose cumulative
// mass stays below tail_mass go to the first kept bin, trailing ones to +inf.
PrivacyLossDistribution trim(double spacing, std::int64_t origin,
                             const Eigen::VectorXd& q, double inf_mass,
                             Direction dir, double clamp, double tail_mass) {
  const Eigen::Index n = q.size();
  Eigen::Index lo = 0;
  double moved_up = 0.0;
  while (lo + 1 < n && moved_up + q[lo] < tail_mass) moved_up += q[lo++];
  Eigen::Index hi = n - 1;
  double moved_inf = 0.0;
  while (hi > lo && moved_inf + q[hi] < tail_mass) moved_inf += q[hi--];
  Eigen::VectorXd kept = q.segment(lo, hi - lo + 1);
  kept[0] += moved_up;
  return PrivacyLossDistribution(spacing, origin + lo, std::move(kept),
                                 inf_mass + moved_inf, dir, clamp);
}

}  // namespace

const char* direction_name(Direction d) {
  return d == Direction::kRemove ? "remove" : "add";
}

void MechanismSpec::validate() const {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw std::invalid_argument("MechanismSpec: sigma must be > 0");
  }
  if (steps < 1) throw std::invalid_argument("MechanismSpec: steps must be >= 1");
  if (!(sample_rate > 0.0 && sample_rate <= 1.0)) {
    throw std::invalid_argument("MechanismSpec: sample_rate must lie in (0, 1]");
  }
  if (jl_dim < 1 && jl_dim != kExactJl) {
    throw std::invalid_argument("MechanismSpec: jl_dim must be >= 1 or exact");
  }
}

void PldOptions::validate() const {
  quad.validate();
  if (!(delta_eps > 0.0)) throw std::invalid_argument("PldOptions: delta_eps must be > 0");
  if (!(loss_clamp > 0.0)) throw std::invalid_argument("PldOptions: loss_clamp must be > 0");
  if (!(tail_mass >= 0.0 && tail_mass < 1e-6)) {
    throw std::invalid_argument("PldOptions: tail_mass must lie in [0, 1e-6)");
  }
  if (max_bins < 16) throw std::invalid_argument("PldOptions: max_bins too small");
  if (!(widen_factor > 1.0)) throw std::invalid_argument("PldOptions: widen_factor must be > 1");
}

PrivacyLossDistribution::PrivacyLossDistribution(
    double grid_spacing, std::int64_t origin, Eigen::VectorXd masses,
    double mass_at_plus_inf, Direction direction, double loss_clamp)
    : grid_spacing_(grid_spacing),
      origin_(origin),
      masses_(std::move(masses)),
      mass_at_plus_inf_(mass_at_plus_inf),
      direction_(direction),
      loss_clamp_(loss_clamp) {
  if (!(grid_spacing_ > 0.0)) {
    throw std::invalid_argument("PrivacyLossDistribution: spacing must be > 0");
  }
  if (masses_.size() == 0) {
    throw std::invalid_argument("PrivacyLossDistribution: no bins");
  }
  if ((masses_.array() < 0.0).any() || !(mass_at_plus_inf_ >= 0.0)) {
    throw std::invalid_argument("PrivacyLossDistribution: negative mass");
  }
  const double total = total_mass();
  if (!(std::abs(total - 1.0) <= 1e-9)) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "PrivacyLossDistribution: total mass " << total << " is not 1";
    throw std::invalid_argument(msg.str());
  }
}

Eigen::VectorXd PrivacyLossDistribution::null_masses() const {
  Eigen::VectorXd out(size());
  for (Eigen::Index k = 0; k < size(); ++k) out[k] = std::exp(-loss(k)) * masses_[k];
  return out;
}

double single_step_hockey_stick(const MechanismSpec& spec, Direction direction,
                                double log_x, const QuadratureSpec& quad) {
  spec.validate();
  const ZRule rule = z_rule(spec, quad);
  const DirectionMap map(direction, spec.sample_rate);
  double w_sum = 0.0;
  for (std::size_t k = 0; k < rule.z.size(); ++k) {
    w_sum += rule.w[k] * conditional_remainder(map, rule.z[k] / spec.sigma, log_x);
  }
  const double linear = log_x < 0.0 ? -std::expm1(log_x) : 0.0;
  const double m = rule.truncation_mass;
  return (1.0 - m) * (linear + w_sum) + m;
}

PrivacyLossDistribution build_pld(const MechanismSpec& spec, Direction direction,
                                  const PldOptions& options) {
  spec.validate();
  options.validate();
  const double clamp = options.loss_clamp;
  const double dl = effective_spacing(options, clamp);
  const DirectionMap map(direction, spec.sample_rate);

  // Grid nodes k0..k1, always including loss 0.
  std::int64_t k0 = static_cast<std::int64_t>(std::floor(-clamp / dl));
  std::int64_t k1 = static_cast<std::int64_t>(std::ceil(clamp / dl));
  if (direction == Direction::kRemove && map.log_q > -kInf) {
    k0 = std::max(k0, static_cast<std::int64_t>(std::floor(map.log_q / dl)));
  }
  if (direction == Direction::kAdd && map.log_q > -kInf) {
    k1 = std::min(k1, static_cast<std::int64_t>(std::ceil(-map.log_q / dl)));
  }
  k0 = std::min<std::int64_t>(k0, -1);
  k1 = std::max<std::int64_t>(k1, 1);
  const Eigen::Index n = static_cast<Eigen::Index>(k1 - k0);  // last node index
  auto loss_at = [&](Eigen::Index j) { return static_cast<double>(k0 + j) * dl; };

  // Remainder W_j = sum_z w_z (D_z(x_j) - [l_j < 0](1 - x_j)).
  const ZRule rule = z_rule(spec, options.quad);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(n + 1);
  for (std::size_t k = 0; k < rule.z.size(); ++k) {
    const double mu = rule.z[k] / spec.sigma;
    const double half = 0.5 * mu * mu;
    const double lam_lo = -half - kWindowSigmas * mu;
    const double lam_hi = half + kWindowSigmas * mu;
    const double l_lo = map.loss_of(lam_lo);
    const double l_hi = map.loss_of(lam_hi);
    const double j_lo = std::floor(l_lo / dl) - static_cast<double>(k0) - 1.0;
    const double j_hi = std::ceil(l_hi / dl) - static_cast<double>(k0) + 1.0;
    const Eigen::Index a = static_cast<Eigen::Index>(std::clamp(j_lo, 0.0, static_cast<double>(n)));
    const Eigen::Index b = static_cast<Eigen::Index>(std::clamp(j_hi, 0.0, static_cast<double>(n)));
    for (Eigen::Index j = a; j <= b; ++j) {
      w[j] += rule.w[k] * conditional_remainder(map, mu, loss_at(j));
    }
  }
  const double m = rule.truncation_mass;
  w = (1.0 - m) * w;
  w.array() += m;
  const double lin = 1.0 - m;
  auto d_at = [&](Eigen::Index j) {
    const double l = loss_at(j);
    return (l < 0.0 ? lin * -std::expm1(l) : 0.0) + w[j];
  };

  // Connect-the-dots masses. With E = e^dl - 1 and F = 1 - e^-dl, interior
  // nodes get q_j = (D_{j+1} - D_j)/E - (D_j - D_{j-1})/F; the linear part
  // contributes exactly (1 - m) at loss 0 and nothing elsewhere.
  const double e_inc = std::expm1(dl);
  const double f_inc = -std::expm1(-dl);
  const Eigen::Index zero = static_cast<Eigen::Index>(-k0);
  Eigen::VectorXd q(n + 1);
  // At the bottom node D(0) = 1 and the linear parts cancel in closed form;
  // using d_at directly leaves rounding that e^-l amplifies under B.
  q[0] = (w[1] - w[0]) / e_inc - (w[0] - m);
  for (Eigen::Index j = 1; j < n; ++j) {
    q[j] = (w[j + 1] - w[j]) / e_inc - (w[j] - w[j - 1]) / f_inc;
    if (j == zero) q[j] += lin;
  }
  q[n] = -(d_at(n) - d_at(n - 1)) / f_inc;
  const double inf_mass = std::max(d_at(n), 0.0);
  // Rounding can leave tiny negative masses; raising them is pessimistic.
  q = q.cwiseMax(0.0);
  // Renormalize rounding drift onto +inf only when it is a deficit.
  const double drift = 1.0 - (q.sum() + inf_mass);
  return trim(dl, k0, q, inf_mass + std::max(drift, 0.0), direction, clamp,
              options.tail_mass);
}

PrivacyLossDistribution convolve(const PrivacyLossDistribution& a,
                                 const PrivacyLossDistribution& b,
                                 double tail_mass) {
  if (a.grid_spacing() != b.grid_spacing()) {
    throw std::invalid_argument("convolve: grid spacings differ");
  }
  const double dl = a.grid_spacing();
  const double clamp = std::max(a.loss_clamp(), b.loss_clamp());
  const Eigen::Index na = a.size(), nb = b.size();
  const Eigen::Index len = na + nb - 1;

  std::vector<double> out;
  if (std::min(na, nb) <= 64) {
    out.assign(len, 0.0);
    for (Eigen::Index i = 0; i < na; ++i) {
      for (Eigen::Index j = 0; j < nb; ++j) out[i + j] += a.masses()[i] * b.masses()[j];
    }
  } else {
    Eigen::Index nfft = 1;
    while (nfft < len) nfft <<= 1;
    std::vector<double> xa(nfft, 0.0), xb(nfft, 0.0);
    std::copy(a.masses().data(), a.masses().data() + na, xa.begin());
    std::copy(b.masses().data(), b.masses().data() + nb, xb.begin());
    Eigen::FFT<double> fft;
    fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
    std::vector<std::complex<double>> fa, fb;
    fft.fwd(fa, xa);
    fft.fwd(fb, xb);
    for (std::size_t k = 0; k < fa.size(); ++k) fa[k] *= fb[k];
    fft.inv(out, fa, nfft);
    out.resize(len);
  }

  std::int64_t origin = a.origin() + b.origin();
  const double ma = a.mass_at_plus_inf(), mb = b.mass_at_plus_inf();
  double inf_mass = ma + mb - ma * mb;

  // Clamp: above +clamp goes to +inf, below -clamp moves up to -clamp.
  const std::int64_t k_top = static_cast<std::int64_t>(std::ceil(clamp / dl));
  const std::int64_t k_bot = -k_top;
  Eigen::Index first = 0, last = len - 1;
  double below = 0.0;
  while (first < last && origin + first < k_bot) below += std::max(out[first++], 0.0);
  while (last > first && origin + last > k_top) inf_mass += std::max(out[last--], 0.0);

  Eigen::VectorXd q(last - first + 1);
  for (Eigen::Index i = first; i <= last; ++i) q[i - first] = std::max(out[i], 0.0);
  q[0] += below;
  // FFT rounding leaves the total off by ~1e-16 per bin; absorb into +inf
  // when short, leave an excess in place.
  const double drift = 1.0 - (q.sum() + inf_mass);
  if (drift > 0.0) inf_mass += drift;
  return trim(dl, origin + first, q, inf_mass, a.direction(), clamp, tail_mass);
}

PrivacyLossDistribution compose_pld(const PrivacyLossDistribution& pld,
                                    std::int64_t steps, double tail_mass) {
  if (steps < 1) throw std::invalid_argument("compose_pld: steps must be >= 1");
  PrivacyLossDistribution base = pld;
  std::optional<PrivacyLossDistribution> result;
  while (steps > 0) {
    if (steps & 1) result = result ? convolve(*result, base, tail_mass) : base;
    steps >>= 1;
    if (steps > 0) base = convolve(base, base, tail_mass);
  }
  return *result;
}

double delta_at_epsilon(const PrivacyLossDistribution& pld, double epsilon) {
  if (!(epsilon >= 0.0)) throw std::invalid_argument("delta_at_epsilon: eps must be >= 0");
  double delta = 0.0;
  for (Eigen::Index k = pld.size() - 1; k >= 0; --k) {
    const double l = pld.loss(k);
    if (l <= epsilon) break;
    delta += pld.masses()[k] * -std::expm1(epsilon - l);
  }
  return std::min(1.0, delta + pld.mass_at_plus_inf());
}

double epsilon_for_delta(const PrivacyLossDistribution& pld, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) {
    throw std::invalid_argument("epsilon_for_delta: delta must lie in (0, 1)");
  }
  const double inf_mass = pld.mass_at_plus_inf();
  if (inf_mass >= delta) {
    std::ostringstream msg;
    msg.precision(6);
    msg << "delta " << delta << " unattainable at loss clamp "
        << pld.loss_clamp() << ": mass at +inf is " << inf_mass;
    throw DeltaUnattainableError(msg.str(), inf_mass, pld.loss_clamp());
  }
  if (delta_at_epsilon(pld, 0.0) <= delta) return 0.0;
  // Suffix sums from the top: s0 = sum_{i>j} q_i, s1 = sum_{i>j} q_i e^{l_j - l_i}.
  const double decay = std::exp(-pld.grid_spacing());
  const Eigen::VectorXd& q = pld.masses();
  double s0 = 0.0, s1 = 0.0;
  for (Eigen::Index j = pld.size() - 1; j >= 0; --j) {
    const double lj = pld.loss(j);
    if (j + 1 < pld.size()) {
      s0 += q[j + 1];
      s1 = decay * (s1 + q[j + 1]);
    }
    const double at_node = inf_mass + s0 - s1;
    if (at_node > delta || lj <= 0.0) {
      // Solve on (max(l_j, 0), l_{j+1}]: delta(eps) = inf + s0 - e^{eps-l_j} s1.
      if (s1 <= 0.0) return std::max(lj, 0.0);
      const double eps = lj + std::log((inf_mass + s0 - delta) / s1);
      return std::max(eps, 0.0);
    }
  }
  return 0.0;
}

ComposedPair compose_both(const MechanismSpec& spec, const PldOptions& options) {
  return ComposedPair{
      compose_pld(build_pld(spec, Direction::kRemove, options), spec.steps,
                  options.tail_mass),
      compose_pld(build_pld(spec, Direction::kAdd, options), spec.steps,
                  options.tail_mass)};
}

AccountantResult epsilon_at_delta(const MechanismSpec& spec, double delta,
                                  const PldOptions& options,
                                  std::optional<ComposedPair>* composed) {
  spec.validate();
  options.validate();
  if (!(delta > 0.0 && delta < 1.0)) {
    throw std::invalid_argument("epsilon_at_delta: delta must lie in (0, 1)");
  }
  AccountantResult result;
  result.delta = delta;
  std::optional<PrivacyLossDistribution> kept[2];
  const Direction dirs[2] = {Direction::kRemove, Direction::kAdd};
  for (int d = 0; d < 2; ++d) {
    DirectionResult& out = d == 0 ? result.remove : result.add;
    PldOptions o = options;
    double min_delta = 1.0;
    for (;;) {
      if (o.loss_clamp > options.max_clamp) {
        std::ostringstream msg;
        msg.precision(6);
        msg << "delta " << delta << " unattainable (" << direction_name(dirs[d])
            << "): smallest reachable delta is " << min_delta
            << " at loss clamp " << o.loss_clamp / o.widen_factor;
        throw DeltaUnattainableError(msg.str(), min_delta,
                                     o.loss_clamp / o.widen_factor);
      }
      ++out.attempts;
      // Skip clamps whose single-step mass past the clamp already composes
      // to at least delta.
      const double tail =
          single_step_hockey_stick(spec, dirs[d], o.loss_clamp, o.quad);
      const double composed_tail =
          -std::expm1(static_cast<double>(spec.steps) * std::log1p(-std::min(tail, 1.0 - 1e-16)));
      if (composed_tail < delta) {
        PrivacyLossDistribution pld =
            compose_pld(build_pld(spec, dirs[d], o), spec.steps, o.tail_mass);
        try {
          out.epsilon = epsilon_for_delta(pld, delta);
          out.loss_clamp = o.loss_clamp;
          out.grid_spacing = pld.grid_spacing();
          kept[d] = std::move(pld);
          break;
        } catch (const DeltaUnattainableError& e) {
          min_delta = e.min_delta();
        }
      } else {
        min_delta = composed_tail;
      }
      o.loss_clamp *= o.widen_factor;
    }
  }
  result.epsilon = std::max(result.remove.epsilon, result.add.epsilon);
  if (composed) composed->emplace(ComposedPair{std::move(*kept[0]), std::move(*kept[1])});
  return result;
}

Eigen::VectorXd delta_profile(const ComposedPair& pair,
                              const Eigen::VectorXd& epsilons) {
  Eigen::VectorXd out(epsilons.size());
  for (Eigen::Index i = 0; i < epsilons.size(); ++i) {
    out[i] = std::max(delta_at_epsilon(pair.remove, epsilons[i]),
                      delta_at_epsilon(pair.add, epsilons[i]));
  }
  return out;
}

}  // namespace dpjl
