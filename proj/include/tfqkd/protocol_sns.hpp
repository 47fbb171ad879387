#pragma once

/// Sending-or-not-sending TF-QKD with optional odd-parity pairing (AOPP).

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tfqkd/clicks.hpp"
#include "tfqkd/decoy.hpp"
#include "tfqkd/link_model.hpp"

namespace tfqkd {

struct SnsParams {
  double p_z = 1.0;
  double epsilon = 0.25;
  double mu_z = 0.2;
  double mu_0 = 5e-6;
  DecoySet decoys;
  double f_ec = 1.15;
  int phase_points = 256;
  bool optimize_epsilon = false;

  void validate() const {
    if (!(p_z > 0.0 && p_z <= 1.0)) throw std::invalid_argument("sns.p_z must be in (0,1]");
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("sns.epsilon must be in (0,1)");
    if (!(mu_0 >= 0.0 && mu_z > mu_0)) throw std::invalid_argument("sns: need mu_z > mu_0 >= 0");
    if (!(f_ec >= 1.0)) throw std::invalid_argument("sns.f_ec must be >= 1");
    if (phase_points < 8) throw std::invalid_argument("sns.phase_points must be >= 8");
    decoys.validate();
  }
};

struct SnsWindowStats {
  // single-click probability per (Alice, Bob) choice; s = send, n = not send
  double q_ss = 0.0, q_sn = 0.0, q_ns = 0.0, q_nn = 0.0;
  double n_ss = 0.0, n_sn = 0.0, n_ns = 0.0, n_nn = 0.0;
  double n_t = 0.0;
  double e_z = 0.0;
  double n1_low = 0.0;
  double e1ph_up = 0.5;
  bool decoy_ok = false;
};

inline SnsWindowStats sns_window_stats(const SnsParams& p, double arm_t, const DetectorParams& det, double e_phi,
                                       double e_theta) {
  p.validate();
  det.validate();
  if (!(arm_t >= 0.0 && arm_t <= 1.0)) throw std::domain_error("sns_window_stats: arm_t outside [0,1]");
  const double pd = det.dark_probability();
  const double eps = p.epsilon;
  auto single = [&](double ma, double mb) {
    return phase_averaged_clicks(ma, mb, arm_t, pd, p.phase_points).single();
  };

  SnsWindowStats s;
  s.q_ss = single(p.mu_z, p.mu_z);
  s.q_sn = single(p.mu_z, p.mu_0);
  s.q_ns = single(p.mu_0, p.mu_z);
  s.q_nn = single(p.mu_0, p.mu_0);
  s.n_ss = eps * eps * s.q_ss;
  s.n_sn = eps * (1.0 - eps) * s.q_sn;
  s.n_ns = (1.0 - eps) * eps * s.q_ns;
  s.n_nn = (1.0 - eps) * (1.0 - eps) * s.q_nn;
  s.n_t = s.n_ss + s.n_sn + s.n_ns + s.n_nn;
  s.e_z = s.n_t > 0.0 ? (s.n_ss + s.n_nn) / s.n_t : 0.0;

  const ChannelErrorModel m{arm_t, pd, e_theta, e_phi};
  const auto b = decoy_bounds(p.decoys, m);
  s.decoy_ok = b.ok;
  if (b.ok) {
    s.n1_low = 2.0 * eps * (1.0 - eps) * p.mu_z * std::exp(-p.mu_z - p.mu_0) * b.y1_low;
    s.e1ph_up = b.e1ph_up;
  }
  return s;
}

struct AoppStats {
  double n_bit0 = 0.0;  // N0: Bob sent
  double n_bit1 = 0.0;  // N1: Bob did not send
  double e_bit0 = 0.0;
  double e_bit1 = 0.0;
  double n_pairs = 0.0;
  double n_t_prime = 0.0;
  double n1_prime = 0.0;
  double e_z_prime = 0.0;
  double e1ph_prime = 0.5;
  bool ok = false;
};

/// Pairs each bit-0 with a bit-1 event (min(N0,N1) pairs) and keeps the first bit of
/// every pair whose parity check passes.
inline AoppStats aopp_transform(const SnsWindowStats& s, const SnsParams& p) {
  p.validate();
  AoppStats a;
  a.n_bit0 = s.n_ss + s.n_ns;
  a.n_bit1 = s.n_nn + s.n_sn;
  if (!(a.n_bit0 > 0.0 && a.n_bit1 > 0.0) || !s.decoy_ok) return a;
  a.e_bit0 = s.n_ss / a.n_bit0;
  a.e_bit1 = s.n_nn / a.n_bit1;
  a.n_pairs = std::min(a.n_bit0, a.n_bit1);
  const double both_wrong = a.e_bit0 * a.e_bit1;
  const double pass = (1.0 - a.e_bit0) * (1.0 - a.e_bit1) + both_wrong;
  a.n_t_prime = a.n_pairs * pass;
  a.e_z_prime = pass > 0.0 ? both_wrong / pass : 0.0;
  a.n1_prime = s.n_t > 0.0 ? s.n1_low * a.n_t_prime / s.n_t : 0.0;
  a.e1ph_prime = s.e1ph_up;
  a.ok = a.n_t_prime > 0.0;
  return a;
}

inline double sns_rate(const SnsWindowStats& s, const SnsParams& p) {
  if (!s.decoy_ok) return 0.0;
  const double r = s.n1_low * (1.0 - error_entropy(s.e1ph_up)) - p.f_ec * s.n_t * error_entropy(s.e_z);
  return std::max(0.0, p.p_z * p.p_z * r);
}

inline double sns_aopp_rate(const AoppStats& a, const SnsParams& p) {
  if (!a.ok) return 0.0;
  const double r =
      a.n1_prime * (1.0 - error_entropy(a.e1ph_prime)) - p.f_ec * a.n_t_prime * error_entropy(a.e_z_prime);
  return std::max(0.0, p.p_z * p.p_z * r);
}

/// Maximizes a unimodal function on [lo, hi].
template <class F>
double golden_section_max(F&& f, double lo, double hi, double tol = 1e-4) {
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double x1 = b - g * (b - a), x2 = a + g * (b - a);
  double f1 = f(x1), f2 = f(x2);
  while (b - a > tol) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + g * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - g * (b - a);
      f1 = f(x1);
    }
  }
  return 0.5 * (a + b);
}

/// Sending probability maximizing the plain (aopp = false) or AOPP rate.
inline double optimal_epsilon(SnsParams p, double arm_t, const DetectorParams& det, double e_phi, double e_theta,
                              bool aopp, double lo = 0.01, double hi = 0.5) {
  auto rate = [&](double eps) {
    p.epsilon = eps;
    const auto s = sns_window_stats(p, arm_t, det, e_phi, e_theta);
    return aopp ? sns_aopp_rate(aopp_transform(s, p), p) : sns_rate(s, p);
  };
  return golden_section_max(rate, lo, hi);
}

}  // namespace tfqkd
