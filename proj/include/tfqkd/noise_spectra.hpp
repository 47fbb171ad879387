#pragma once

/// Phase-noise power spectral densities (rad^2/Hz) for lasers, fibers and
/// their composition into the interference spectrum seen at the central node.

#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace tfqkd {

inline constexpr double kSpeedOfLight = 299'792'458.0;  // m/s

namespace detail {
inline void require_positive_frequency(double f, const char* where) {
  if (!(f > 0.0) || !std::isfinite(f))
    throw std::domain_error(std::string(where) + ": frequency must be positive and finite");
}
inline void require_non_negative(double v, const char* what) {
  if (!(v >= 0.0)) throw std::invalid_argument(std::string(what) + " must be >= 0");
}
inline void require_positive(double v, const char* what) {
  if (!(v > 0.0)) throw std::invalid_argument(std::string(what) + " must be > 0");
}
}  // namespace detail

/// Free-running diode laser: r3/f^3 + (r2/f^2) (f_c/(f+f_c))^2.
struct LaserFreeParams {
  double r3 = 3e6;    // rad^2 Hz^2
  double r2 = 3e2;    // rad^2 Hz
  double f_c = 2e6;   // Hz

  void validate() const {
    detail::require_non_negative(r3, "laser.free.r3");
    detail::require_non_negative(r2, "laser.free.r2");
    detail::require_positive(f_c, "laser.free.f_c_hz");
  }
};

/// Reference cavity: C4/f^4 + C3/f^3 + C2/f^2.
struct CavityParams {
  double c4 = 0.5;
  double c3 = 0.0;
  double c2 = 2e-3;

  void validate() const {
    detail::require_non_negative(c4, "laser.cavity.c4");
    detail::require_non_negative(c3, "laser.cavity.c3");
    detail::require_non_negative(c2, "laser.cavity.c2");
  }
};

/// Servo loop locking the laser to the cavity. G0 is derived.
struct LoopParams {
  double bandwidth = 300e3;  // Hz
  double gamma = 0.1;
  double delta = 10.0;

  double g0() const {
    const double w = 2.0 * std::numbers::pi * bandwidth;
    return w * w * (1.0 + delta) / (1.0 + gamma);
  }

  void validate() const {
    detail::require_positive(bandwidth, "laser.loop.bandwidth_hz");
    if (!(gamma > 0.0 && gamma < 1.0 && delta > 1.0))
      throw std::invalid_argument("laser.loop: need 0 < gamma < 1 < delta");
  }
};

struct LaserSpec {
  LaserFreeParams free;
  CavityParams cavity;
  LoopParams loop;

  void validate() const {
    free.validate();
    cavity.validate();
    loop.validate();
  }
};

struct FiberParams {
  double l = 44.0;              // rad^2 Hz / km
  double f_c_prime = 100.0;     // Hz, free-fiber roll-off
  double s0 = 1e-8;             // rad^2/Hz, detection floor of the stabilization
  double f_c_dprime = 200e3;    // Hz, floor roll-off
  double lambda_s_nm = 1543.33;
  double lambda_q_nm = 1542.14;

  /// Residual fraction of fiber noise left by dual-wavelength cancellation.
  double suppression() const {
    const double r = (lambda_s_nm - lambda_q_nm) / lambda_s_nm;
    return r * r;
  }

  void validate() const {
    detail::require_non_negative(l, "fiber.l");
    detail::require_positive(f_c_prime, "fiber.f_c_prime_hz");
    detail::require_non_negative(s0, "fiber.s0");
    detail::require_positive(f_c_dprime, "fiber.f_c_dprime_hz");
    if (lambda_s_nm == 0.0) throw std::invalid_argument("fiber.lambda_s_nm must be non-zero");
  }
};

enum class TopologyKind { CommonLaser, IndependentLasers };

struct TopologyConfig {
  TopologyKind kind = TopologyKind::CommonLaser;
  bool laser_stabilized = false;
  bool fiber_stabilized = false;
  double l_a_km = 114.0;
  double l_b_km = 114.0;
  double refractive_index = 1.45;
  double speed_of_light = kSpeedOfLight;
  /// Fiber noise multiplier for the common-laser loop (4 = fully correlated round trip).
  double round_trip_factor = 4.0;
  /// Multiplier on the stabilization detection floor, applied once per stabilized arm.
  double floor_factor = 1.0;
  /// Overrides L_A - L_B for the self-delayed laser term only.
  std::optional<double> delay_mismatch_km;

  double delta_l_km() const { return delay_mismatch_km.value_or(l_a_km - l_b_km); }

  void validate() const {
    if (!(l_b_km >= 0.0 && l_a_km >= l_b_km))
      throw std::invalid_argument("topology: need l_a_km >= l_b_km >= 0");
    if (delay_mismatch_km && !(*delay_mismatch_km >= 0.0))
      throw std::invalid_argument("topology: delay mismatch must be >= 0");
    detail::require_positive(refractive_index, "topology.refractive_index");
    detail::require_positive(speed_of_light, "topology.speed_of_light_m_s");
    detail::require_non_negative(round_trip_factor, "topology.round_trip_factor");
    detail::require_non_negative(floor_factor, "topology.floor_factor");
  }
};

inline double psd_laser_free(double f, const LaserFreeParams& p) {
  detail::require_positive_frequency(f, "psd_laser_free");
  const double roll = p.f_c / (f + p.f_c);
  return p.r3 / (f * f * f) + p.r2 / (f * f) * roll * roll;
}

inline std::complex<double> loop_gain(double f, const LoopParams& p) {
  detail::require_positive_frequency(f, "loop_gain");
  const double w = 2.0 * std::numbers::pi * f;
  const std::complex<double> zero{p.bandwidth * p.gamma, f};
  const std::complex<double> pole{p.bandwidth * p.delta, f};
  return p.g0() / (w * w) * (zero / pole);
}

/// |1/(1+G)|^2, the fraction of free-running noise left inside the loop.
inline double loop_suppression(double f, const LoopParams& p) {
  return 1.0 / std::norm(1.0 + loop_gain(f, p));
}

inline double psd_cavity(double f, const CavityParams& p) {
  detail::require_positive_frequency(f, "psd_cavity");
  const double f2 = f * f;
  return p.c4 / (f2 * f2) + p.c3 / (f2 * f) + p.c2 / f2;
}

inline double psd_laser_stabilized(double f, const LaserFreeParams& laser, const CavityParams& cav,
                                   const LoopParams& loop) {
  return psd_cavity(f, cav) + loop_suppression(f, loop) * psd_laser_free(f, laser);
}

inline double psd_laser(double f, const LaserSpec& laser, bool stabilized) {
  return stabilized ? psd_laser_stabilized(f, laser.free, laser.cavity, laser.loop)
                    : psd_laser_free(f, laser.free);
}

/// Length-proportional part of the fiber noise.
inline double psd_fiber_propagation(double f, double length_km, const FiberParams& p,
                                    bool stabilized) {
  detail::require_positive_frequency(f, "psd_fiber");
  if (!(length_km >= 0.0)) throw std::domain_error("psd_fiber: negative fiber length");
  const double base = p.l * length_km / (f * f);
  if (stabilized) return p.suppression() * base;
  const double roll = p.f_c_prime / (f + p.f_c_prime);
  return base * roll * roll;
}

/// White detection floor of the fiber stabilization, rolled off at f_c''.
inline double psd_detection_floor(double f, const FiberParams& p) {
  detail::require_positive_frequency(f, "psd_detection_floor");
  const double roll = p.f_c_dprime / (f + p.f_c_dprime);
  return p.s0 * roll * roll;
}

inline double psd_fiber(double f, double length_km, const FiberParams& p, bool stabilized) {
  const double prop = psd_fiber_propagation(f, length_km, p, stabilized);
  return stabilized ? prop + psd_detection_floor(f, p) : prop;
}

/// A non-negative spectrum built as a weighted sum of labelled terms. A term can
/// carry a sin^2(pi f / f0) modulation (zeros every f0), which the integrator
/// resolves explicitly at low frequency and averages to 1/2 far above f0.
class NoiseSpectrum {
 public:
  using Density = std::function<double(double)>;

  struct Term {
    std::string label;
    double weight = 1.0;
    Density density;
    double zero_spacing_hz = 0.0;  // 0 => unmodulated

    bool modulated() const { return zero_spacing_hz > 0.0; }

    double modulation(double f) const {
      if (!modulated()) return 1.0;
      const double s = std::sin(std::numbers::pi * f / zero_spacing_hz);
      return s * s;
    }

    double value(double f) const { return weight * modulation(f) * density(f); }
    double averaged_value(double f) const {
      return weight * (modulated() ? 0.5 : 1.0) * density(f);
    }
  };

  NoiseSpectrum() = default;

  static NoiseSpectrum from_function(std::string label, Density d) {
    NoiseSpectrum s;
    s.add(std::move(label), 1.0, std::move(d));
    return s;
  }

  NoiseSpectrum& add(std::string label, double weight, Density d) {
    if (!(weight >= 0.0)) throw std::invalid_argument("NoiseSpectrum: negative term weight");
    terms_.push_back(Term{std::move(label), weight, std::move(d), 0.0});
    return *this;
  }

  NoiseSpectrum& add_modulated(std::string label, double weight, Density d, double zero_spacing_hz) {
    if (!(weight >= 0.0)) throw std::invalid_argument("NoiseSpectrum: negative term weight");
    if (!(zero_spacing_hz > 0.0)) throw std::invalid_argument("NoiseSpectrum: zero spacing must be > 0");
    terms_.push_back(Term{std::move(label), weight, std::move(d), zero_spacing_hz});
    return *this;
  }

  double operator()(double f) const {
    detail::require_positive_frequency(f, "NoiseSpectrum");
    double s = 0.0;
    for (const auto& t : terms_) s += t.value(f);
    return s;
  }

  const std::vector<Term>& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }

 private:
  std::vector<Term> terms_;
};

/// Zero spacing c/(2 n dL) of the self-delayed laser term, or nullopt for dL = 0.
inline std::optional<double> delay_zero_spacing(const TopologyConfig& topo) {
  const double dl_m = topo.delta_l_km() * 1e3;
  if (dl_m <= 0.0) return std::nullopt;
  return topo.speed_of_light / (2.0 * topo.refractive_index * dl_m);
}

/// Interference spectrum for the given topology, as separable terms.
inline NoiseSpectrum interference_spectrum(const TopologyConfig& topo, const LaserSpec& laser,
                                           const FiberParams& fiber) {
  topo.validate();
  NoiseSpectrum s;
  const bool lstab = topo.laser_stabilized;
  const bool fstab = topo.fiber_stabilized;
  auto laser_psd = [laser, lstab](double f) { return psd_laser(f, laser, lstab); };
  auto fiber_psd = [fiber, fstab, la = topo.l_a_km, lb = topo.l_b_km](double f) {
    return psd_fiber_propagation(f, la, fiber, fstab) + psd_fiber_propagation(f, lb, fiber, fstab);
  };

  if (topo.kind == TopologyKind::CommonLaser) {
    if (auto f0 = delay_zero_spacing(topo)) s.add_modulated("laser", 4.0, laser_psd, *f0);
    s.add("fiber", topo.round_trip_factor, fiber_psd);
  } else {
    s.add("laser", 2.0, laser_psd);
    s.add("fiber", 1.0, fiber_psd);
  }
  if (fstab) {
    // one sensing interferometer per arm
    s.add("floor", 2.0 * topo.floor_factor, [fiber](double f) { return psd_detection_floor(f, fiber); });
  }
  return s;
}

inline double psd_interference(double f, const TopologyConfig& topo, const LaserSpec& laser,
                               const FiberParams& fiber) {
  return interference_spectrum(topo, laser, fiber)(f);
}

}  // namespace tfqkd
