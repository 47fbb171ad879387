#pragma once

/// Channel balancing, detectors, misalignment and the repeaterless bound.

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace tfqkd {

struct ChannelParams {
  double alpha_db_per_km = 0.2;
  double a_plus_db = 0.0;
  double l_a_km = 100.0;
  double l_b_km = 100.0;

  void validate() const {
    if (!(alpha_db_per_km >= 0.0)) throw std::invalid_argument("link.alpha_db_per_km must be >= 0");
    if (!(a_plus_db >= 0.0)) throw std::invalid_argument("link.a_plus_db must be >= 0");
    if (!(l_b_km >= 0.0 && l_a_km >= l_b_km)) throw std::invalid_argument("link: need l_a_km >= l_b_km >= 0");
  }
};

struct DetectorParams {
  std::string name = "snspd";
  double efficiency = 0.9;
  double dark_count_rate_hz = 10.0;
  double clock_rate_hz = 1e9;

  double dark_probability() const { return dark_count_rate_hz / clock_rate_hz; }

  void validate() const {
    if (!(efficiency > 0.0 && efficiency <= 1.0)) throw std::invalid_argument("detector.efficiency must be in (0,1]");
    if (!(dark_count_rate_hz >= 0.0)) throw std::invalid_argument("detector.dark_count_rate_hz must be >= 0");
    if (!(clock_rate_hz > 0.0)) throw std::invalid_argument("detector.clock_rate_hz must be > 0");
    if (!(dark_probability() < 1.0)) throw std::invalid_argument("detector: dark probability must be < 1");
  }

  static DetectorParams snspd() { return {"snspd", 0.9, 10.0, 1e9}; }
  static DetectorParams spad() { return {"spad", 0.25, 50.0, 1e9}; }

  static DetectorParams preset(const std::string& name) {
    if (name == "snspd") return snspd();
    if (name == "spad") return spad();
    throw std::invalid_argument("unknown detector preset '" + name + "' (expected snspd or spad)");
  }
};

struct MisalignmentParams {
  double e_theta = 0.02;

  /// Polarization angle with e_theta = sin^2(theta/2).
  double theta() const { return 2.0 * std::asin(std::sqrt(e_theta)); }

  void validate() const {
    if (!(e_theta >= 0.0 && e_theta <= 0.5)) throw std::invalid_argument("link.e_theta must be in [0, 0.5]");
  }
};

struct BalancedLink {
  double eta = 1.0;      // total A-B transmittance
  double eta_arm = 1.0;  // each arm after padding B
  double effective_length_km = 0.0;
  double attenuation_db = 0.0;
};

/// The shorter B arm is padded to match A; A_+ sits on A.
inline BalancedLink balanced_link(const ChannelParams& ch) {
  ch.validate();
  const double arm_db = ch.alpha_db_per_km * ch.l_a_km + ch.a_plus_db;
  BalancedLink b;
  b.eta_arm = std::pow(10.0, -arm_db / 10.0);
  b.eta = b.eta_arm * b.eta_arm;
  b.effective_length_km = 2.0 * ch.l_a_km;
  b.attenuation_db = 2.0 * arm_db;
  return b;
}

/// Balanced link with a given total attenuation, split evenly between arms.
inline BalancedLink link_from_attenuation(double total_db, double alpha_db_per_km = 0.2) {
  if (!(total_db >= 0.0)) throw std::domain_error("link_from_attenuation: attenuation must be >= 0");
  BalancedLink b;
  b.attenuation_db = total_db;
  b.eta_arm = std::pow(10.0, -total_db / 20.0);
  b.eta = std::pow(10.0, -total_db / 10.0);
  b.effective_length_km = alpha_db_per_km > 0.0 ? total_db / alpha_db_per_km : 0.0;
  return b;
}

inline double effective_transmittance(double eta, const DetectorParams& det) {
  if (!(eta >= 0.0 && eta <= 1.0)) throw std::domain_error("effective_transmittance: eta outside [0,1]");
  return eta * det.efficiency;
}

enum class EfficiencyConvention {
  SplitSquare,  // t = sqrt(eta * eta_D): the two arms multiply to eta_hat
  PerArm,       // t = eta_arm * eta_D
};

inline double arm_transmittance(const BalancedLink& link, const DetectorParams& det,
                                EfficiencyConvention c = EfficiencyConvention::SplitSquare) {
  if (c == EfficiencyConvention::SplitSquare) return std::sqrt(effective_transmittance(link.eta, det));
  return link.eta_arm * det.efficiency;
}

inline double plob_bound(double eta) {
  if (!(eta >= 0.0 && eta <= 1.0)) throw std::domain_error("plob_bound: eta outside [0,1]");
  if (eta == 1.0) throw std::domain_error("plob_bound: infinite capacity at eta = 1");
  return -std::log1p(-eta) / std::numbers::ln2;
}

/// Bound with the detector efficiency folded into the channel.
inline double plob_bound_realistic(double eta, const DetectorParams& det) {
  return plob_bound(effective_transmittance(eta, det));
}

}  // namespace tfqkd
