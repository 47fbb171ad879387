#pragma once

/// Three-intensity decoy bounds and the phase-encoded BB84 key rate.

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tfqkd/clicks.hpp"

namespace tfqkd {

inline double binary_entropy(double p) {
  if (p <= 0.0 || p >= 1.0) return 0.0;
  return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

inline double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

/// Entropy of an error rate, saturating at 1 bit from 1/2 upward.
inline double error_entropy(double e) { return binary_entropy(std::min(e, 0.5)); }

struct DecoySet {
  double u = 0.4;
  double v = 0.16;
  double w = 1e-5;

  void validate() const {
    if (!(w >= 0.0 && v > w && u > v)) throw std::invalid_argument("decoy: need u > v > w >= 0");
    if (!(u > v + w)) throw std::invalid_argument("decoy: need u > v + w");
  }
};

struct ChannelErrorModel {
  double eta_hat = 0.0;
  double p_dc = 0.0;
  double e_theta = 0.0;
  double e_phi = 0.0;

  double e_optical() const { return e_theta + e_phi; }

  void validate() const {
    if (!(eta_hat >= 0.0 && eta_hat <= 1.0)) throw std::invalid_argument("channel: eta_hat outside [0,1]");
    if (!(p_dc >= 0.0 && p_dc < 1.0)) throw std::invalid_argument("channel: p_dc outside [0,1)");
    if (!(e_theta >= 0.0 && e_phi >= 0.0 && e_optical() <= 1.0))
      throw std::invalid_argument("channel: optical error outside [0,1]");
  }
};

inline double gain(double mu, const ChannelErrorModel& m) {
  if (!(mu >= 0.0)) throw std::domain_error("gain: negative intensity");
  return click_probability(mu * m.eta_hat, m.p_dc);
}

/// E_mu Q_mu: darks err half the time when no signal photon arrives; arriving
/// signal carries the optical error.
inline double error_gain(double mu, const ChannelErrorModel& m) {
  if (!(mu >= 0.0)) throw std::domain_error("error_gain: negative intensity");
  const double x = mu * m.eta_hat;
  return 0.5 * m.p_dc * std::exp(-x) - m.e_optical() * std::expm1(-x);
}

inline double qber(double mu, const ChannelErrorModel& m) {
  const double q = gain(mu, m);
  if (!(q > 0.0)) throw std::domain_error("qber: zero gain");
  return clamp01(error_gain(mu, m) / q);
}

struct DecoyBounds {
  double y0_low = 0.0;
  double y1_low = 0.0;
  double q1_low = 0.0;
  double e1ph_up = 0.5;
  bool ok = false;  // false: single-photon yield bound non-positive
};

inline DecoyBounds decoy_bounds(const DecoySet& s, const ChannelErrorModel& m) {
  s.validate();
  const double u = s.u, v = s.v, w = s.w;
  const double qu = gain(u, m) * std::exp(u);
  const double qv = gain(v, m) * std::exp(v);
  const double qw = gain(w, m) * std::exp(w);

  DecoyBounds b;
  b.y0_low = clamp01(w == 0.0 ? qw : (v * qw - w * qv) / (v - w));
  const double y1 = (u * u * (qv - qw) - (v * v - w * w) * (qu - b.y0_low)) / (u * (u - v - w) * (v - w));
  if (!(y1 > 0.0)) return b;
  b.ok = true;
  b.y1_low = std::min(y1, 1.0);
  b.q1_low = b.y1_low * u * std::exp(-u);
  const double ev = error_gain(v, m) * std::exp(v);
  const double ew = error_gain(w, m) * std::exp(w);
  b.e1ph_up = clamp01((ev - ew) / ((v - w) * b.y1_low));
  return b;
}

/// Per-signal BB84 rate, d * [Q1 (1 - H(e1)) - f Q_u H(E_u)], floored at 0.
inline double bb84_rate(const DecoySet& s, const ChannelErrorModel& m, double f_ec, double duty = 1.0) {
  m.validate();
  const auto b = decoy_bounds(s, m);
  if (!b.ok) return 0.0;
  const double qu = gain(s.u, m);
  const double r = b.q1_low * (1.0 - error_entropy(b.e1ph_up)) - f_ec * qu * error_entropy(qber(s.u, m));
  return std::max(0.0, duty * r);
}

}  // namespace tfqkd
