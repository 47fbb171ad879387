#pragma once

/// Side-by-side analytic vs sampled click statistics, with z-scores built from
/// the analytic standard error.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <ostream>
#include <string>
#include <vector>

#include "tfqkd/csv.hpp"
#include "tfqkd/oracle.hpp"
#include "tfqkd/protocol_cal.hpp"
#include "tfqkd/protocol_sns.hpp"

namespace tfqkd {

struct OracleRow {
  std::string label;
  std::string quantity;
  double mu_a = 0.0, mu_b = 0.0, arm_t = 0.0, p_d = 0.0;
  double analytic = 0.0;
  double sampled = 0.0;
  double std_error = 0.0;  // from the analytic value
  double z = 0.0;
  double expected_events = 0.0;
  double observed_events = 0.0;
  double p_value = 1.0;  // two-sided; exact Poisson when few events are expected
};

/// Two-sided tail probability of a count k under Poisson(lambda).
inline double poisson_two_sided(double lambda, std::uint64_t k) {
  if (lambda <= 0.0) return k == 0 ? 1.0 : 0.0;
  auto pmf = [lambda](std::uint64_t i) {
    return std::exp(static_cast<double>(i) * std::log(lambda) - lambda - std::lgamma(static_cast<double>(i) + 1.0));
  };
  double lower = 0.0;  // P(X <= k)
  for (std::uint64_t i = 0; i <= k; ++i) lower += pmf(i);
  const double upper = 1.0 - lower + pmf(k);  // P(X >= k)
  return std::min(1.0, 2.0 * std::min(lower, upper));
}

/// Sigma level k expressed as a two-sided tail probability.
inline double sigma_tail(double k) { return std::erfc(k / std::numbers::sqrt2); }

namespace detail {
inline constexpr double kNormalRegimeEvents = 25.0;

// q: analytic probability, n_eff: number of trials it applies to
inline OracleRow finish_row(OracleRow r, double n_eff) {
  const double q = r.analytic;
  r.std_error = n_eff > 0.0 ? std::sqrt(std::max(q * (1.0 - q), 0.0) / n_eff) : INFINITY;
  const double diff = r.sampled - r.analytic;
  r.z = r.std_error > 0.0 ? diff / r.std_error : (diff == 0.0 ? 0.0 : INFINITY);
  r.expected_events = n_eff * q;
  if (r.expected_events >= kNormalRegimeEvents) r.p_value = sigma_tail(std::abs(r.z));
  else r.p_value = poisson_two_sided(r.expected_events, static_cast<std::uint64_t>(std::llround(r.observed_events)));
  return r;
}
}  // namespace detail

/// Single-click windows for the three SNS intensity combinations under a
/// uniformly random relative phase.
inline std::vector<OracleRow> oracle_sns_rows(const SnsParams& p, double arm_t, const DetectorParams& det,
                                              McConfig cfg) {
  const auto s = sns_window_stats(p, arm_t, det, 0.0, 0.0);
  const double pd = det.dark_probability();
  cfg.phase = UniformRandomized{};
  struct Combo {
    const char* name;
    double ma, mb, q;
  };
  const Combo combos[] = {{"ss", p.mu_z, p.mu_z, s.q_ss}, {"sn", p.mu_z, p.mu_0, s.q_sn}, {"nn", p.mu_0, p.mu_0, s.q_nn}};
  std::vector<OracleRow> out;
  for (const auto& c : combos) {
    const auto mc = mc_click_stats(c.ma, c.mb, arm_t, pd, cfg);
    OracleRow r{std::string("sns_") + c.name, "single_click", c.ma, c.mb, arm_t, pd, c.q, mc.frequency.single()};
    r.observed_events = r.sampled * static_cast<double>(cfg.samples);
    out.push_back(detail::finish_row(r, static_cast<double>(cfg.samples)));
  }
  return out;
}

/// CAL X-basis gain and bit error for one bit value, sampling the relative phase
/// acos(Omega) (bit 0) or pi - acos(Omega) (bit 1). The gain row compares the
/// single-click rate, twice the per-outcome gain.
inline std::vector<OracleRow> oracle_cal_rows(const CalChannel& ch, double mu_zeta, double p_d, int bit,
                                              McConfig cfg) {
  if (bit != 0 && bit != 1) throw std::invalid_argument("oracle_cal_rows: bit must be 0 or 1");
  const double gain = cal_gain(ch, p_d);
  const double e_x = cal_bit_error(ch, p_d);
  const double base = std::acos(std::clamp(ch.omega, -1.0, 1.0));
  cfg.phase = FixedDelta{bit == 0 ? base : std::numbers::pi - base};
  const auto mc = mc_click_stats(mu_zeta, mu_zeta, ch.arm_t, p_d, cfg);
  const double n = static_cast<double>(cfg.samples);
  const double single = mc.frequency.single();
  const double wrong = bit == 0 ? mc.frequency.d_only : mc.frequency.c_only;
  const std::string tag = "cal_bit" + std::to_string(bit);

  OracleRow g{tag, "single_click", mu_zeta, mu_zeta, ch.arm_t, p_d, 2.0 * gain, single};
  g.observed_events = single * n;
  OracleRow e{tag, "bit_error", mu_zeta, mu_zeta, ch.arm_t, p_d, e_x, single > 0.0 ? wrong / single : 0.0};
  e.observed_events = wrong * n;
  return {detail::finish_row(g, n), detail::finish_row(e, n * 2.0 * gain)};
}

inline void write_oracle_csv(std::ostream& os, const std::vector<OracleRow>& rows) {
  os << "case,quantity,mu_a,mu_b,arm_t,p_d,analytic,monte_carlo,std_error,z_score,expected_events,p_value\n";
  for (const auto& r : rows)
    os << r.label << ',' << r.quantity << ',' << csv::format(r.mu_a) << ',' << csv::format(r.mu_b) << ','
       << csv::format(r.arm_t) << ',' << csv::format(r.p_d) << ',' << csv::format(r.analytic) << ','
       << csv::format(r.sampled) << ',' << csv::format(r.std_error) << ',' << csv::format(r.z) << ','
       << csv::format(r.expected_events) << ',' << csv::format(r.p_value) << '\n';
}

}  // namespace tfqkd
