#pragma once

/// Two-detector click statistics shared by the protocol engines and oracles.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace tfqkd {

struct ClickProbabilities {
  double none = 0.0;
  double c_only = 0.0;
  double d_only = 0.0;
  double both = 0.0;

  double single() const { return c_only + d_only; }
  double total() const { return none + c_only + d_only + both; }
};

/// 1 - (1 - p) e^{-I}, accurate when both p and I are tiny.
inline double click_probability(double intensity, double p_dark) {
  return -std::expm1(std::log1p(-p_dark) - intensity);
}

/// Threshold detectors with independent darks, given mean photon numbers at c and d.
inline ClickProbabilities detector_clicks(double i_c, double i_d, double p_dark) {
  const double pc = click_probability(i_c, p_dark);
  const double pd = click_probability(i_d, p_dark);
  return {(1.0 - pc) * (1.0 - pd), pc * (1.0 - pd), (1.0 - pc) * pd, pc * pd};
}

/// Coherent pulses of mean photon numbers mu_a, mu_b through per-arm transmittance t,
/// meeting at a 50:50 splitter with relative phase delta.
inline ClickProbabilities interference_clicks(double mu_a, double mu_b, double t, double p_dark, double delta) {
  if (!(mu_a >= 0.0 && mu_b >= 0.0)) throw std::domain_error("interference_clicks: negative intensity");
  const double cross = 2.0 * std::sqrt(mu_a * mu_b) * std::cos(delta);
  const double sum = mu_a + mu_b;
  return detector_clicks(0.5 * t * std::max(0.0, sum + cross), 0.5 * t * std::max(0.0, sum - cross), p_dark);
}

/// Average over a uniformly random relative phase, midpoint periodic rule.
inline ClickProbabilities phase_averaged_clicks(double mu_a, double mu_b, double t, double p_dark, int points = 256) {
  if (points < 1) throw std::invalid_argument("phase_averaged_clicks: need at least one phase point");
  ClickProbabilities acc;
  for (int k = 0; k < points; ++k) {
    const double delta = 2.0 * std::numbers::pi * (k + 0.5) / points;
    const auto c = interference_clicks(mu_a, mu_b, t, p_dark, delta);
    acc.none += c.none;
    acc.c_only += c.c_only;
    acc.d_only += c.d_only;
    acc.both += c.both;
  }
  const double inv = 1.0 / points;
  return {acc.none * inv, acc.c_only * inv, acc.d_only * inv, acc.both * inv};
}

}  // namespace tfqkd
