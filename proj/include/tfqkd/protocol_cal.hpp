#pragma once

/// CAL TF-QKD: X-basis gain and bit error, Fock-pair yields, cat-state expansion
/// and the Z-basis phase-error bound.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

#include "tfqkd/clicks.hpp"
#include "tfqkd/decoy.hpp"

namespace tfqkd {

inline constexpr int kMaxFockPhotons = 6;

enum class OmegaModel {
  RmsCosine,        // cos(sigma_phi) cos(theta)
  GaussianAverage,  // exp(-sigma_phi^2/2) cos(theta)
};

using IndexSet = std::vector<std::pair<int, int>>;

struct CalParams {
  double mu_zeta = 0.018;
  double f_ec = 1.15;
  IndexSet set_s0{{0, 0}, {0, 1}, {1, 0}, {1, 1}};
  IndexSet set_s1{{0, 0}};
  int tail_terms = 20;
  OmegaModel omega_model = OmegaModel::RmsCosine;

  void validate() const {
    if (!(mu_zeta > 0.0)) throw std::invalid_argument("cal.mu_zeta must be > 0");
    if (!(f_ec >= 1.0)) throw std::invalid_argument("cal.f_ec must be >= 1");
    if (tail_terms < 2) throw std::invalid_argument("cal.tail_terms must be >= 2");
    for (const auto* set : {&set_s0, &set_s1})
      for (auto [a, b] : *set)
        if (a < 0 || b < 0 || a > tail_terms || b > tail_terms)
          throw std::invalid_argument("cal: index set entry out of range");
  }
};

struct CalChannel {
  double gamma = 0.0;  // t * mu_zeta
  double omega = 1.0;
  double arm_t = 0.0;
};

inline CalChannel make_cal_channel(double arm_t, double mu_zeta, double sigma_phi, double theta,
                                   OmegaModel model = OmegaModel::RmsCosine) {
  if (!(arm_t >= 0.0 && arm_t <= 1.0)) throw std::domain_error("make_cal_channel: arm_t outside [0,1]");
  if (!(sigma_phi >= 0.0)) throw std::domain_error("make_cal_channel: negative sigma_phi");
  const double phase = model == OmegaModel::RmsCosine ? std::cos(sigma_phi) : std::exp(-0.5 * sigma_phi * sigma_phi);
  return {arm_t * mu_zeta, phase * std::cos(theta), arm_t};
}

namespace detail {
// cosh(g W) - (1-p) e^{-g}, written without cancellation
inline double cal_bracket(const CalChannel& ch, double p_d) {
  const double h = std::sinh(0.5 * ch.gamma * ch.omega);
  return 2.0 * h * h - std::expm1(-ch.gamma) + p_d * std::exp(-ch.gamma);
}
}  // namespace detail

/// Probability of one specific single-click outcome.
inline double cal_gain(const CalChannel& ch, double p_d) {
  if (!(p_d >= 0.0 && p_d < 1.0)) throw std::domain_error("cal_gain: p_d outside [0,1)");
  return (1.0 - p_d) * std::exp(-ch.gamma) * detail::cal_bracket(ch, p_d);
}

inline double cal_bit_error(const CalChannel& ch, double p_d) {
  const double den = 2.0 * detail::cal_bracket(ch, p_d);
  if (!(den > 0.0)) throw std::domain_error("cal_bit_error: no clicks (gamma = 0 and p_d = 0)");
  const double num = std::exp(-ch.gamma) * (std::expm1(ch.gamma * (1.0 - ch.omega)) + p_d);
  return clamp01(num / den);
}

/// e^{-mu/2} zeta^n / sqrt(n!) for n of parity j, else 0: the photon-number
/// amplitudes of the (unnormalized) parity-j component of |zeta>.
inline std::vector<double> cat_amplitudes(double mu, int j, int n_max) {
  if (j != 0 && j != 1) throw std::invalid_argument("cat_amplitudes: parity must be 0 or 1");
  if (!(mu > 0.0)) throw std::invalid_argument("cat_amplitudes: mu must be > 0");
  std::vector<double> a(static_cast<std::size_t>(n_max) + 1, 0.0);
  for (int n = j; n <= n_max; n += 2)
    a[n] = std::exp(-0.5 * mu + 0.5 * n * std::log(mu) - 0.5 * std::lgamma(n + 1.0));
  return a;
}

/// Probability weight of the parity-j cat component.
inline double cat_parity_weight(double mu, int j) {
  if (j != 0 && j != 1) throw std::invalid_argument("cat_parity_weight: parity must be 0 or 1");
  return j == 0 ? 0.5 * (1.0 + std::exp(-2.0 * mu)) : -0.5 * std::expm1(-2.0 * mu);
}

/// Photon-number coefficients of the normalized parity-j cat state.
inline std::vector<double> cat_coefficients(double mu, int j, int n_max) {
  if (n_max < 3) throw std::invalid_argument("cat_coefficients: n_max must be >= 3");
  auto c = cat_amplitudes(mu, j, n_max);
  const double norm = 1.0 / std::sqrt(cat_parity_weight(mu, j));
  for (auto& x : c) x *= norm;
  return c;
}

/// Click statistics for Fock inputs |n_a>|n_b> after per-arm loss t, a 50:50
/// splitter and threshold detectors with dark probability p_d.
inline ClickProbabilities fock_pair_yield(int n_a, int n_b, double t, double p_d) {
  if (n_a < 0 || n_b < 0 || n_a > kMaxFockPhotons || n_b > kMaxFockPhotons)
    throw std::out_of_range("fock_pair_yield: photon number above supported cutoff");
  if (!(t >= 0.0 && t <= 1.0)) throw std::domain_error("fock_pair_yield: t outside [0,1]");
  if (!(p_d >= 0.0 && p_d < 1.0)) throw std::domain_error("fock_pair_yield: p_d outside [0,1)");

  constexpr int dim = 2 * kMaxFockPhotons + 1;
  constexpr double kInvSqrt2 = 1.0 / std::numbers::sqrt2;
  auto binom_loss = [t](int n, int k) {
    return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0)) * std::pow(t, k) *
           std::pow(1.0 - t, n - k);
  };

  ClickProbabilities out;
  for (int ka = 0; ka <= n_a; ++ka) {
    for (int kb = 0; kb <= n_b; ++kb) {
      const double w = binom_loss(n_a, ka) * binom_loss(n_b, kb);
      if (w == 0.0) continue;
      // amp[c][d] over output modes; apply (c+ + d+)/sqrt2 ka times, (c+ - d+)/sqrt2 kb times
      std::vector<double> amp(dim * dim, 0.0), next(dim * dim);
      amp[0] = 1.0;
      int photons = 0;
      auto create = [&](double sign) {
        std::fill(next.begin(), next.end(), 0.0);
        for (int c = 0; c <= photons; ++c) {
          const int d = photons - c;
          const double x = amp[c * dim + d];
          if (x == 0.0) continue;
          next[(c + 1) * dim + d] += x * std::sqrt(c + 1.0) * kInvSqrt2;
          next[c * dim + d + 1] += sign * x * std::sqrt(d + 1.0) * kInvSqrt2;
        }
        amp.swap(next);
        ++photons;
      };
      for (int i = 0; i < ka; ++i) create(+1.0);
      for (int i = 0; i < kb; ++i) create(-1.0);
      const double norm = std::exp(-std::lgamma(ka + 1.0) - std::lgamma(kb + 1.0));
      for (int c = 0; c <= photons; ++c) {
        const int d = photons - c;
        const double prob = w * norm * amp[c * dim + d] * amp[c * dim + d];
        const double pc = c > 0 ? 1.0 : p_d;
        const double pd = d > 0 ? 1.0 : p_d;
        out.none += prob * (1.0 - pc) * (1.0 - pd);
        out.c_only += prob * pc * (1.0 - pd);
        out.d_only += prob * (1.0 - pc) * pd;
        out.both += prob * pc * pd;
      }
    }
  }
  return out;
}

/// Upper bound on the Z-basis (phase) error for a single-click outcome.
inline double cal_phase_error(const CalParams& p, const CalChannel& ch, double p_d) {
  p.validate();
  const double gain = cal_gain(ch, p_d);
  if (!(gain > 0.0)) throw std::domain_error("cal_phase_error: zero gain");
  const int m_max = p.tail_terms;
  double acc = 0.0;
  for (int j = 0; j <= 1; ++j) {
    const IndexSet& set = j == 0 ? p.set_s0 : p.set_s1;
    const auto a = cat_amplitudes(p.mu_zeta, j, 2 * m_max + 3);
    double inner = 0.0, in_set = 0.0;
    for (auto [ma, mb] : set) {
      const double w = a[2 * ma + j] * a[2 * mb + j];
      in_set += w;
      inner += w * std::sqrt(fock_pair_yield(2 * ma + j, 2 * mb + j, ch.arm_t, p_d).c_only);
    }
    double sum = 0.0;
    for (int m = 0; m <= m_max; ++m) sum += a[2 * m + j];
    // geometric bound on the amplitudes beyond m_max
    const int n_next = 2 * (m_max + 1) + j;
    const double ratio = p.mu_zeta / std::sqrt((n_next + 1.0) * (n_next + 2.0));
    sum += ratio < 1.0 ? a[n_next] / (1.0 - ratio) : INFINITY;
    const double delta = sum * sum - in_set;
    acc += (inner + delta) * (inner + delta);
  }
  return acc / gain;
}

struct CalOutcome {
  double gain = 0.0;
  double e_x = 0.0;
  double e_z = 0.0;
  double rate = 0.0;  // per signal, duty applied
};

inline CalOutcome cal_evaluate(const CalParams& p, const CalChannel& ch, double p_d, double duty = 1.0) {
  CalOutcome o;
  o.gain = cal_gain(ch, p_d);
  if (!(o.gain > 0.0)) return o;
  o.e_x = cal_bit_error(ch, p_d);
  o.e_z = cal_phase_error(p, ch, p_d);
  const double r = 2.0 * o.gain * (1.0 - p.f_ec * error_entropy(o.e_x) - binary_entropy(std::min(0.5, o.e_z)));
  o.rate = std::max(0.0, duty * r);
  return o;
}

inline double cal_rate(const CalParams& p, const CalChannel& ch, double p_d, double duty = 1.0) {
  return cal_evaluate(p, ch, p_d, duty).rate;
}

}  // namespace tfqkd
