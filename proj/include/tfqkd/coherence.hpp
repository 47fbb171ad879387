#pragma once

/// Phase variance from a noise spectrum, the coherence-time solver, duty cycle
/// and the phase-noise QBER contribution.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "tfqkd/csv.hpp"
#include "tfqkd/noise_spectra.hpp"

namespace tfqkd {

class DivergentIntegralError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct IntegrationOptions {
  /// Upper integration limit; +inf integrates to `open_end_hz` and adds a power-law tail.
  double f_max_hz = 300e3;
  double open_end_hz = 1e10;
  int points_per_decade = 200;
  double rel_tol = 1e-4;
  int max_refinements = 5;
  int oscillation_points_per_period = 1000;
  int oscillation_periods = 50;

  void validate() const {
    if (!(f_max_hz > 0.0)) throw std::invalid_argument("integration.f_max_hz must be > 0");
    if (!(open_end_hz > 0.0 && std::isfinite(open_end_hz)))
      throw std::invalid_argument("integration.open_end_hz must be finite and > 0");
    if (points_per_decade < 10) throw std::invalid_argument("integration.points_per_decade must be >= 10");
    if (!(rel_tol > 0.0)) throw std::invalid_argument("integration.rel_tol must be > 0");
    if (max_refinements < 0) throw std::invalid_argument("integration.max_refinements must be >= 0");
    if (oscillation_points_per_period < 4)
      throw std::invalid_argument("integration.oscillation_points_per_period must be >= 4");
    if (oscillation_periods < 1) throw std::invalid_argument("integration.oscillation_periods must be >= 1");
  }
};

struct CoherenceBudget {
  double sigma_threshold = 0.2;  // rad
  double tau_max = 0.1;          // s
  double tau_ps = 1e-3;          // s
  double tau_floor = 1e-6;       // s
  double bisect_rel_tol = 0.01;

  void validate() const {
    if (!(sigma_threshold > 0.0 && tau_max > 0.0 && tau_ps > 0.0 && tau_floor > 0.0))
      throw std::invalid_argument("coherence: threshold and times must be > 0");
    if (!(tau_floor < tau_max)) throw std::invalid_argument("coherence: tau_floor_s must be < tau_max_s");
    if (!(bisect_rel_tol > 0.0)) throw std::invalid_argument("coherence.bisect_rel_tol must be > 0");
  }
};

inline double qber_from_variance(double sigma2) {
  if (!(sigma2 >= 0.0)) throw std::domain_error("qber_from_variance: negative variance");
  return -0.5 * std::expm1(-0.5 * sigma2);
}

/// Small-angle form sigma^2/4.
inline double qber_from_variance_approx(double sigma2) {
  if (!(sigma2 >= 0.0)) throw std::domain_error("qber_from_variance_approx: negative variance");
  return 0.25 * sigma2;
}

inline double duty_cycle(double tau_q, double tau_ps) {
  if (!(tau_q > 0.0 && tau_ps > 0.0)) throw std::domain_error("duty_cycle: times must be > 0");
  return tau_q / (tau_q + tau_ps);
}

struct CoherenceResult {
  double tau_q = 0.0;
  double sigma_phi = 0.0;
  double duty_cycle = 0.0;
  double e_phi = 0.0;
  bool clipped = false;   // threshold never reached below tau_max
  bool at_floor = false;  // threshold already exceeded at tau_floor
};

inline CoherenceResult make_coherence_result(double tau_q, double sigma_phi, double tau_ps) {
  CoherenceResult r;
  r.tau_q = tau_q;
  r.sigma_phi = sigma_phi;
  r.duty_cycle = duty_cycle(tau_q, tau_ps);
  r.e_phi = qber_from_variance(sigma_phi * sigma_phi);
  return r;
}

/// Cumulative high-frequency integral T(f) = int_f^{f_max} S df on a fixed node set,
/// serving every integration time above 1/f_lo from one pass.
class VarianceProfile {
 public:
  VarianceProfile(const NoiseSpectrum& psd, double f_lo, const IntegrationOptions& opt = {}) {
    opt.validate();
    if (!(f_lo > 0.0)) throw std::domain_error("VarianceProfile: f_lo must be > 0");
    f_lo_ = f_lo;
    open_ = std::isinf(opt.f_max_hz);
    f_hi_ = open_ ? std::max(opt.open_end_hz, f_lo) : opt.f_max_hz;
    if (f_lo_ >= f_hi_) {
      f_ = {f_lo_};
      tail_ = {0.0};
    } else {
      int ppd = opt.points_per_decade;
      build(psd, ppd, opt);
      for (int r = 0; r < opt.max_refinements; ++r) {
        const double coarse = tail_.front();
        ppd *= 2;
        build(psd, ppd, opt);
        const double fine = tail_.front();
        if (std::abs(fine - coarse) <= opt.rel_tol * std::abs(fine)) break;
      }
      ppd_ = ppd;
    }
    if (open_) add_open_tail(psd);
  }

  double f_lo() const { return f_lo_; }
  double f_hi() const { return f_hi_; }
  int points_per_decade() const { return ppd_; }
  std::size_t size() const { return f_.size(); }

  /// int_{f}^{f_max} S(f') df'
  double variance_above(double f) const {
    if (!(f > 0.0)) throw std::domain_error("variance_above: frequency must be > 0");
    if (f < f_lo_ * (1.0 - 1e-12)) throw std::out_of_range("variance_above: below profile range");
    if (f >= f_.back()) {
      if (!open_ || open_tail_ == 0.0) return f == f_.back() ? tail_.back() : 0.0;
      return open_tail_ * std::pow(f / f_hi_, tail_exponent_ + 1.0);
    }
    if (f <= f_.front()) return tail_.front();
    const auto it = std::upper_bound(f_.begin(), f_.end(), f);
    const std::size_t i = static_cast<std::size_t>(it - f_.begin()) - 1;
    const double w = std::log(f / f_[i]) / std::log(f_[i + 1] / f_[i]);
    const double a = tail_[i], b = tail_[i + 1];
    if (a > 0.0 && b > 0.0) return a * std::pow(b / a, w);
    return a + (b - a) * w;
  }

  double variance(double tau) const {
    if (!(tau > 0.0)) throw std::domain_error("variance: integration time must be > 0");
    return variance_above(1.0 / tau);
  }

  double sigma(double tau) const { return std::sqrt(variance(tau)); }

 private:
  struct OscBand {
    double end;  // modulation resolved below, averaged above
  };

  void build(const NoiseSpectrum& psd, int ppd, const IntegrationOptions& opt) {
    std::vector<double> nodes;
    nodes.push_back(f_lo_);
    const double step = 1.0 / ppd;
    for (long k = static_cast<long>(std::floor(std::log10(f_lo_) * ppd)) + 1;; ++k) {
      const double f = std::pow(10.0, k * step);
      if (f >= f_hi_) break;
      nodes.push_back(f);
    }
    nodes.push_back(f_hi_);

    const auto& terms = psd.terms();
    std::vector<double> osc_end(terms.size(), 0.0);
    const double log_gap = std::pow(10.0, step) - 1.0;
    for (std::size_t k = 0; k < terms.size(); ++k) {
      if (!terms[k].modulated()) continue;
      const double f0 = terms[k].zero_spacing_hz;
      const double end = std::min(f_hi_, opt.oscillation_periods * f0);
      osc_end[k] = end;
      const double h = f0 / opt.oscillation_points_per_period;
      const double start = std::max(f_lo_, h / log_gap);
      if (end > f_lo_) nodes.push_back(end);
      for (double j = std::ceil(start / h); j * h < end; j += 1.0) nodes.push_back(j * h);
    }
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end(),
                            [](double a, double b) { return b - a <= 1e-12 * b; }),
                nodes.end());

    // per-node: unmodulated sum, and raw modulated densities
    const std::size_t n = nodes.size();
    std::vector<double> flat(n, 0.0);
    std::vector<std::vector<double>> mod(terms.size());
    for (std::size_t k = 0; k < terms.size(); ++k)
      if (terms[k].modulated()) mod[k].resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double f = nodes[i];
      for (std::size_t k = 0; k < terms.size(); ++k) {
        const double v = terms[k].weight * terms[k].density(f);
        if (!(v >= 0.0)) throw std::domain_error("noise spectrum term '" + terms[k].label + "' is negative or NaN");
        if (terms[k].modulated()) mod[k][i] = v;
        else flat[i] += v;
      }
    }

    std::vector<double> tail(n, 0.0);
    for (std::size_t i = n - 1; i-- > 0;) {
      const double a = nodes[i], b = nodes[i + 1];
      const double mid = std::sqrt(a * b);
      double ga = flat[i], gb = flat[i + 1];
      for (std::size_t k = 0; k < terms.size(); ++k) {
        if (!terms[k].modulated()) continue;
        if (mid > osc_end[k]) {
          ga += 0.5 * mod[k][i];
          gb += 0.5 * mod[k][i + 1];
        } else {
          ga += terms[k].modulation(a) * mod[k][i];
          gb += terms[k].modulation(b) * mod[k][i + 1];
        }
      }
      tail[i] = tail[i + 1] + 0.5 * std::log(b / a) * (ga * a + gb * b);
    }
    f_ = std::move(nodes);
    tail_ = std::move(tail);
  }

  void add_open_tail(const NoiseSpectrum& psd) {
    auto averaged = [&](double f) {
      double s = 0.0;
      for (const auto& t : psd.terms()) s += t.averaged_value(f);
      return s;
    };
    const double hi = f_hi_;
    const double s_hi = averaged(hi);
    if (s_hi <= 0.0) return;
    const double s_lo = averaged(hi / 1.1);
    const double p = std::log(s_hi / s_lo) / std::log(1.1);
    if (!(p < -1.0 - 1e-6))
      throw DivergentIntegralError("phase variance diverges: spectrum decays as f^" + std::to_string(p) +
                                   " at high frequency");
    tail_exponent_ = p;
    open_tail_ = s_hi * hi / (-p - 1.0);
    for (auto& t : tail_) t += open_tail_;
  }

  double f_lo_ = 0.0;
  double f_hi_ = 0.0;
  bool open_ = false;
  int ppd_ = 0;
  double open_tail_ = 0.0;
  double tail_exponent_ = 0.0;
  std::vector<double> f_;
  std::vector<double> tail_;
};

inline double phase_variance(const NoiseSpectrum& psd, double tau_q, const IntegrationOptions& opt = {}) {
  if (!(tau_q > 0.0)) throw std::domain_error("phase_variance: tau_q must be > 0");
  return VarianceProfile(psd, 1.0 / tau_q, opt).variance(tau_q);
}

inline CoherenceResult solve_tau_q(const VarianceProfile& profile, const CoherenceBudget& b) {
  b.validate();
  if (profile.f_lo() > 1.0 / b.tau_max * (1.0 + 1e-12))
    throw std::invalid_argument("solve_tau_q: profile does not reach 1/tau_max");
  const double thr = b.sigma_threshold;
  const double s_max = profile.sigma(b.tau_max);
  if (s_max <= thr) {
    auto r = make_coherence_result(b.tau_max, s_max, b.tau_ps);
    r.clipped = true;
    return r;
  }
  const double s_floor = profile.sigma(b.tau_floor);
  if (s_floor > thr) {
    auto r = make_coherence_result(b.tau_floor, s_floor, b.tau_ps);
    r.at_floor = true;
    return r;
  }
  double lo = b.tau_floor, hi = b.tau_max;
  double s_lo = s_floor;
  while (hi > lo * (1.0 + b.bisect_rel_tol)) {
    const double mid = std::sqrt(lo * hi);
    const double s = profile.sigma(mid);
    if (s <= thr) {
      lo = mid;
      s_lo = s;
    } else {
      hi = mid;
    }
  }
  return make_coherence_result(lo, s_lo, b.tau_ps);
}

inline CoherenceResult solve_tau_q(const NoiseSpectrum& psd, const CoherenceBudget& b,
                                   const IntegrationOptions& opt = {}) {
  b.validate();
  return solve_tau_q(VarianceProfile(psd, 1.0 / b.tau_max, opt), b);
}

/// sigma_phi over a (delay mismatch, integration time) grid. Row-major in tau.
struct SigmaMap {
  std::vector<double> delta_l_km;
  std::vector<double> tau_s;
  std::vector<double> sigma;

  double at(std::size_t i_tau, std::size_t j_dl) const { return sigma.at(i_tau * delta_l_km.size() + j_dl); }
};

struct Isoline {
  double level = 0.0;
  std::vector<std::optional<double>> tau_s;  // one per delta_l column; nullopt when not crossed
};

struct SigmaMapResult {
  SigmaMap map;
  std::vector<Isoline> isolines;
};

namespace detail {
inline void require_increasing(const std::vector<double>& g, const char* what) {
  if (g.empty()) throw std::invalid_argument(std::string(what) + " grid is empty");
  for (std::size_t i = 1; i < g.size(); ++i)
    if (!(g[i] > g[i - 1])) throw std::invalid_argument(std::string(what) + " grid must be strictly increasing");
}

inline std::optional<double> crossing(const VarianceProfile& p, double level, double t0, double t1) {
  if (p.sigma(t0) > level || p.sigma(t1) < level) return std::nullopt;
  double lo = t0, hi = t1;
  while (hi > lo * (1.0 + 1e-10)) {
    const double mid = std::sqrt(lo * hi);
    (p.sigma(mid) <= level ? lo : hi) = mid;
  }
  return lo;
}
}  // namespace detail

/// The delta-L axis moves only the self-delayed laser term; fiber noise keeps the
/// template's arm lengths.
inline SigmaMapResult sigma_map(const TopologyConfig& tmpl, const LaserSpec& laser, const FiberParams& fiber,
                                const std::vector<double>& delta_l_km, const std::vector<double>& tau_s,
                                const CoherenceBudget& budget, const IntegrationOptions& opt = {},
                                std::vector<double> levels = {}) {
  detail::require_increasing(delta_l_km, "delta_l");
  detail::require_increasing(tau_s, "tau");
  if (!(tau_s.front() > 0.0)) throw std::invalid_argument("tau grid must be positive");
  if (!(delta_l_km.front() >= 0.0)) throw std::invalid_argument("delta_l grid must be >= 0");
  if (levels.empty()) levels.push_back(budget.sigma_threshold);

  SigmaMapResult out;
  out.map.delta_l_km = delta_l_km;
  out.map.tau_s = tau_s;
  out.map.sigma.assign(tau_s.size() * delta_l_km.size(), 0.0);
  for (double lv : levels) out.isolines.push_back(Isoline{lv, {}});

  for (std::size_t j = 0; j < delta_l_km.size(); ++j) {
    TopologyConfig topo = tmpl;
    topo.delay_mismatch_km = delta_l_km[j];
    const VarianceProfile prof(interference_spectrum(topo, laser, fiber), 1.0 / tau_s.back(), opt);
    for (std::size_t i = 0; i < tau_s.size(); ++i)
      out.map.sigma[i * delta_l_km.size() + j] = prof.sigma(tau_s[i]);
    for (auto& iso : out.isolines) iso.tau_s.push_back(detail::crossing(prof, iso.level, tau_s.front(), tau_s.back()));
  }
  return out;
}

inline void write_sigma_map_csv(std::ostream& os, const SigmaMap& m) {
  os << "delta_l_km,tau_q_s,sigma_phi_rad\n";
  for (std::size_t j = 0; j < m.delta_l_km.size(); ++j)
    for (std::size_t i = 0; i < m.tau_s.size(); ++i)
      os << csv::format(m.delta_l_km[j]) << ',' << csv::format(m.tau_s[i]) << ',' << csv::format(m.at(i, j))
         << '\n';
}

inline void write_isolines_csv(std::ostream& os, const SigmaMap& m, const std::vector<Isoline>& lines) {
  os << "level_rad,delta_l_km,tau_q_s\n";
  for (const auto& iso : lines)
    for (std::size_t j = 0; j < m.delta_l_km.size(); ++j)
      os << csv::format(iso.level) << ',' << csv::format(m.delta_l_km[j]) << ','
         << (iso.tau_s[j] ? csv::format(*iso.tau_s[j]) : std::string("nan")) << '\n';
}

}  // namespace tfqkd
