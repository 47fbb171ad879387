#pragma once

/// Brute-force references: Monte-Carlo click sampling, closed-form Fock-state
/// beamsplitter statistics and photon-number mixtures for decoy checks.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <type_traits>
#include <variant>
#include <vector>

#include "tfqkd/clicks.hpp"
#include "tfqkd/decoy.hpp"

namespace tfqkd {

struct UniformRandomized {};
struct FixedDelta {
  double delta_rad = 0.0;
};
struct GaussianSigma {
  double sigma_rad = 0.0;
};
using PhaseDistribution = std::variant<UniformRandomized, FixedDelta, GaussianSigma>;

struct McConfig {
  std::uint64_t samples = 10'000'000;
  std::uint64_t seed = 42;
  PhaseDistribution phase = UniformRandomized{};
  unsigned streams = 4;
};

struct McClickStats {
  ClickProbabilities frequency;
  ClickProbabilities std_error;
  std::uint64_t samples = 0;
  std::string generator;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Independent engine for sub-stream `stream` of `seed`.
inline std::mt19937_64 stream_engine(std::uint64_t seed, std::uint64_t stream) {
  return std::mt19937_64(splitmix64(seed ^ splitmix64(stream + 1)));
}

inline std::string mc_generator_id(const McConfig& cfg) {
  return "mt19937_64 seeded by splitmix64(seed ^ splitmix64(stream+1)); seed=" + std::to_string(cfg.seed) +
         " streams=" + std::to_string(cfg.streams);
}

namespace detail {
inline double uniform01(std::mt19937_64& g) { return static_cast<double>(g() >> 11) * 0x1.0p-53; }

struct McCounts {
  std::uint64_t none = 0, c_only = 0, d_only = 0, both = 0;
};

inline McCounts mc_stream(double mu_a, double mu_b, double t, double p_d, const PhaseDistribution& phase,
                          std::uint64_t n, std::mt19937_64 g) {
  McCounts k;
  const double sum = mu_a + mu_b;
  const double amp = 2.0 * std::sqrt(mu_a * mu_b);
  const double two_pi = 2.0 * std::numbers::pi;
  const bool fixed = std::holds_alternative<FixedDelta>(phase);
  const double fixed_cos = fixed ? std::cos(std::get<FixedDelta>(phase).delta_rad) : 0.0;
  const double fixed_pc = -std::expm1(-0.5 * t * std::max(0.0, sum + amp * fixed_cos));
  const double fixed_pd = -std::expm1(-0.5 * t * std::max(0.0, sum - amp * fixed_cos));
  for (std::uint64_t s = 0; s < n; ++s) {
    double pc = fixed_pc, pd = fixed_pd;
    if (!fixed) {
      double delta;
      if (std::holds_alternative<UniformRandomized>(phase)) {
        delta = two_pi * uniform01(g);
      } else {
        const double u1 = 1.0 - uniform01(g);
        const double u2 = uniform01(g);
        delta = std::get<GaussianSigma>(phase).sigma_rad * std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
      }
      const double cs = amp * std::cos(delta);
      pc = -std::expm1(-0.5 * t * std::max(0.0, sum + cs));
      pd = -std::expm1(-0.5 * t * std::max(0.0, sum - cs));
    }
    const bool c = uniform01(g) < pc || uniform01(g) < p_d;
    const bool d = uniform01(g) < pd || uniform01(g) < p_d;
    if (c && d) ++k.both;
    else if (c) ++k.c_only;
    else if (d) ++k.d_only;
    else ++k.none;
  }
  return k;
}
}  // namespace detail

/// Semiclassical click simulation; deterministic for a fixed (seed, streams).
inline McClickStats mc_click_stats(double mu_a, double mu_b, double arm_t, double p_d, const McConfig& cfg) {
  if (!(mu_a >= 0.0 && mu_b >= 0.0)) throw std::domain_error("mc_click_stats: negative intensity");
  if (!(arm_t >= 0.0 && arm_t <= 1.0)) throw std::domain_error("mc_click_stats: arm_t outside [0,1]");
  if (!(p_d >= 0.0 && p_d < 1.0)) throw std::domain_error("mc_click_stats: p_d outside [0,1)");
  if (cfg.samples == 0) throw std::invalid_argument("mc_click_stats: samples must be > 0");
  if (cfg.streams == 0) throw std::invalid_argument("mc_click_stats: streams must be > 0");

  std::vector<detail::McCounts> parts(cfg.streams);
  {
    std::vector<std::jthread> workers;
    for (unsigned s = 0; s < cfg.streams; ++s) {
      const std::uint64_t n = cfg.samples / cfg.streams + (s < cfg.samples % cfg.streams ? 1 : 0);
      workers.emplace_back([&, s, n] {
        parts[s] = detail::mc_stream(mu_a, mu_b, arm_t, p_d, cfg.phase, n, stream_engine(cfg.seed, s));
      });
    }
  }
  detail::McCounts total;
  for (const auto& k : parts) {
    total.none += k.none;
    total.c_only += k.c_only;
    total.d_only += k.d_only;
    total.both += k.both;
  }
  const double n = static_cast<double>(cfg.samples);
  auto freq = [n](std::uint64_t k) { return static_cast<double>(k) / n; };
  auto se = [n](double p) { return std::sqrt(p * (1.0 - p) / n); };
  McClickStats r;
  r.frequency = {freq(total.none), freq(total.c_only), freq(total.d_only), freq(total.both)};
  r.std_error = {se(r.frequency.none), se(r.frequency.c_only), se(r.frequency.d_only), se(r.frequency.both)};
  r.samples = cfg.samples;
  r.generator = mc_generator_id(cfg);
  return r;
}

/// Output distribution P[k] of k photons in port c (n_a + n_b - k in d) for Fock
/// inputs on a 50:50 splitter, from the binomial expansion of the transformed
/// creation operators.
inline std::vector<double> fock_bs_distribution(int n_a, int n_b) {
  if (n_a < 0 || n_b < 0 || n_a + n_b > 12) throw std::out_of_range("fock_bs_distribution: need 0 <= n_a+n_b <= 12");
  const int n = n_a + n_b;
  auto lchoose = [](int a, int b) { return std::lgamma(a + 1.0) - std::lgamma(b + 1.0) - std::lgamma(a - b + 1.0); };
  std::vector<double> prob(static_cast<std::size_t>(n) + 1, 0.0);
  for (int k = 0; k <= n; ++k) {
    const double lpre = 0.5 * (std::lgamma(k + 1.0) + std::lgamma(n - k + 1.0) - std::lgamma(n_a + 1.0) -
                               std::lgamma(n_b + 1.0)) -
                        0.5 * n * std::numbers::ln2;
    double amp = 0.0;
    for (int i = std::max(0, k - n_b); i <= std::min(n_a, k); ++i) {
      const int j = k - i;  // c photons drawn from the b input
      const double sign = ((n_b - j) % 2 == 0) ? 1.0 : -1.0;
      amp += sign * std::exp(lchoose(n_a, i) + lchoose(n_b, j) + lpre);
    }
    prob[k] = amp * amp;
  }
  return prob;
}

/// Fock-pair click statistics through the closed-form splitter distribution.
inline ClickProbabilities fock_click_oracle(int n_a, int n_b, double t, double p_d) {
  auto binom = [t](int n, int k) {
    return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0)) * std::pow(t, k) *
           std::pow(1.0 - t, n - k);
  };
  ClickProbabilities out;
  for (int ka = 0; ka <= n_a; ++ka)
    for (int kb = 0; kb <= n_b; ++kb) {
      const double w = binom(n_a, ka) * binom(n_b, kb);
      const auto dist = fock_bs_distribution(ka, kb);
      const int n = ka + kb;
      for (int k = 0; k <= n; ++k) {
        const double pr = w * dist[k];
        const double pc = k > 0 ? 1.0 : p_d;
        const double pd = n - k > 0 ? 1.0 : p_d;
        out.none += pr * (1 - pc) * (1 - pd);
        out.c_only += pr * pc * (1 - pd);
        out.d_only += pr * (1 - pc) * pd;
        out.both += pr * pc * pd;
      }
    }
  return out;
}

/// Per-photon-number yield Y_n and erroneous-click probability e_n Y_n.
struct PhotonYield {
  double yield = 0.0;
  double error_yield = 0.0;
  double error_rate() const { return yield > 0.0 ? error_yield / yield : 0.0; }
};

inline PhotonYield photon_yield(int n, const ChannelErrorModel& m) {
  const double log_lost = n * std::log1p(-m.eta_hat);  // no signal photon detected
  const double lost = std::exp(log_lost);
  return {-std::expm1(std::log1p(-m.p_dc) + log_lost), -m.e_optical() * std::expm1(log_lost) + 0.5 * m.p_dc * lost};
}

struct MixtureGain {
  double gain = 0.0;
  double error_gain = 0.0;
  double qber() const { return gain > 0.0 ? error_gain / gain : 0.0; }
};

/// Poisson mixture sum over n <= n_max of the per-photon models.
inline MixtureGain poisson_yield_gain(double mu, const ChannelErrorModel& m, int n_max) {
  if (!(mu >= 0.0)) throw std::domain_error("poisson_yield_gain: negative intensity");
  if (n_max < 0) throw std::invalid_argument("poisson_yield_gain: n_max must be >= 0");
  MixtureGain g;
  double pn = std::exp(-mu);
  for (int n = 0; n <= n_max; ++n) {
    if (n > 0) pn *= mu / n;
    const auto y = photon_yield(n, m);
    g.gain += pn * y.yield;
    g.error_gain += pn * y.error_yield;
  }
  return g;
}

/// Smallest n_max whose Poisson tail mass is below `tail`.
inline int poisson_cutoff(double mu, double tail = 1e-16) {
  double pn = std::exp(-mu), cum = pn;
  int n = 0;
  while (1.0 - cum > tail && n < 1000) {
    ++n;
    pn *= mu / n;
    cum += pn;
    if (pn < tail * 1e-3 && n > mu) break;
  }
  return n;
}

}  // namespace tfqkd
