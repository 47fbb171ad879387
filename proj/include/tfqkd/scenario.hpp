#pragma once

/// Scenario presets, operating-point resolution, attenuation sweeps and CSV output.

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "tfqkd/coherence.hpp"
#include "tfqkd/csv.hpp"
#include "tfqkd/decoy.hpp"
#include "tfqkd/link_model.hpp"
#include "tfqkd/noise_spectra.hpp"
#include "tfqkd/protocol_cal.hpp"
#include "tfqkd/protocol_sns.hpp"

namespace tfqkd {

enum class Protocol { BB84, SnsAopp, Cal, Sns, Plob, PlobRealistic };
inline constexpr std::array<Protocol, 6> kAllProtocols{Protocol::BB84, Protocol::SnsAopp, Protocol::Cal,
                                                       Protocol::Sns,  Protocol::Plob,    Protocol::PlobRealistic};

inline const char* protocol_name(Protocol p) {
  switch (p) {
    case Protocol::BB84: return "bb84";
    case Protocol::SnsAopp: return "sns_aopp";
    case Protocol::Cal: return "cal";
    case Protocol::Sns: return "sns";
    case Protocol::Plob: return "plob";
    case Protocol::PlobRealistic: return "plob_realistic";
  }
  return "?";
}

inline Protocol parse_protocol(const std::string& s) {
  for (auto p : kAllProtocols)
    if (s == protocol_name(p)) return p;
  throw std::invalid_argument("unknown protocol '" + s + "' (expected bb84, sns_aopp, cal, sns, plob, plob_realistic)");
}

/// Comma-separated protocol list, e.g. "bb84,cal".
inline std::vector<Protocol> parse_protocol_list(const std::string& s) {
  std::vector<Protocol> out;
  std::istringstream in(s);
  std::string item;
  while (std::getline(in, item, ','))
    if (!item.empty()) out.push_back(parse_protocol(item));
  if (out.empty()) throw std::invalid_argument("protocol list is empty");
  return out;
}

enum class XAxis { TotalAttenuationDb, TotalLengthKm };

inline const char* x_axis_name(XAxis a) {
  return a == XAxis::TotalAttenuationDb ? "total_attenuation_db" : "total_length_km";
}

struct SweepSpec {
  XAxis x_axis = XAxis::TotalAttenuationDb;
  double start = 0.0;
  double stop = 80.0;
  double step = 1.0;
  DetectorParams detector = DetectorParams::snspd();
  std::vector<Protocol> protocols{Protocol::BB84, Protocol::SnsAopp, Protocol::Cal, Protocol::Plob,
                                  Protocol::PlobRealistic};

  void validate() const {
    if (!(step > 0.0)) throw std::invalid_argument("sweep.step must be > 0");
    if (!(start >= 0.0 && stop >= start)) throw std::invalid_argument("sweep: need 0 <= start <= stop");
    if (protocols.empty()) throw std::invalid_argument("sweep.protocols must not be empty");
    detector.validate();
  }

  std::vector<double> grid() const {
    validate();
    std::vector<double> xs;
    const auto n = static_cast<long>(std::floor((stop - start) / step + 1e-9));
    for (long i = 0; i <= n; ++i) xs.push_back(start + step * static_cast<double>(i));
    return xs;
  }

  bool wants(Protocol p) const { return std::find(protocols.begin(), protocols.end(), p) != protocols.end(); }
};

/// Precision at which the solved coherence point is carried into the rate models.
struct OperatingPointRounding {
  int tau_significant_digits = 1;      // 0 keeps the solver value
  double sigma_resolution_rad = 0.01;  // 0 keeps the solver value
};

struct SimulationConfig {
  TopologyConfig topology;
  LaserSpec laser;
  FiberParams fiber;
  CoherenceBudget coherence;
  IntegrationOptions integration;
  OperatingPointRounding operating_point;

  double alpha_db_per_km = 0.2;
  double a_plus_db = 0.0;
  EfficiencyConvention efficiency_convention = EfficiencyConvention::SplitSquare;
  MisalignmentParams misalignment;

  DecoySet bb84_decoys;
  double bb84_f_ec = 1.15;
  bool bb84_use_duty_cycle = false;
  SnsParams sns;
  CalParams cal;
  bool cal_use_eta_hat = true;

  SweepSpec sweep;

  void validate() const {
    topology.validate();
    laser.validate();
    fiber.validate();
    coherence.validate();
    integration.validate();
    if (operating_point.tau_significant_digits < 0)
      throw std::invalid_argument("operating_point.tau_significant_digits must be >= 0");
    if (!(operating_point.sigma_resolution_rad >= 0.0))
      throw std::invalid_argument("operating_point.sigma_resolution_rad must be >= 0");
    if (!(alpha_db_per_km > 0.0)) throw std::invalid_argument("link.alpha_db_per_km must be > 0");
    if (!(a_plus_db >= 0.0)) throw std::invalid_argument("link.a_plus_db must be >= 0");
    misalignment.validate();
    bb84_decoys.validate();
    if (!(bb84_f_ec >= 1.0)) throw std::invalid_argument("bb84.f_ec must be >= 1");
    sns.validate();
    cal.validate();
    sweep.validate();
  }
};

struct ScenarioPreset {
  int id = 0;
  std::string title;
  TopologyConfig topology;
  double expected_tau_q = 0.0;  // s
  double expected_sigma = 0.0;  // rad
  bool expected_clipped = false;
};

inline std::vector<ScenarioPreset> builtin_scenarios() {
  constexpr double L = 114.0;
  auto topo = [](TopologyKind k, bool lstab, bool fstab, double dl) {
    TopologyConfig t;
    t.kind = k;
    t.laser_stabilized = lstab;
    t.fiber_stabilized = fstab;
    t.l_a_km = L;
    t.l_b_km = L - dl;
    return t;
  };
  using K = TopologyKind;
  return {
      {1, "common free-running laser, matched arms, no fiber stabilization", topo(K::CommonLaser, false, false, 0.02),
       700e-6, 0.2, false},
      {2, "common free-running laser, matched arms, fiber stabilization", topo(K::CommonLaser, false, true, 0.02),
       0.1, 0.06, true},
      {3, "common free-running laser, 2.5 km mismatch", topo(K::CommonLaser, false, false, 2.5), 50e-6, 0.2, false},
      {4, "common cavity-stabilized laser, 2.5 km mismatch, no fiber stabilization",
       topo(K::CommonLaser, true, false, 2.5), 700e-6, 0.2, false},
      {5, "common cavity-stabilized laser, 2.5 km mismatch, fiber stabilization",
       topo(K::CommonLaser, true, true, 2.5), 0.1, 0.08, true},
      {6, "independent cavity-stabilized lasers, no fiber stabilization",
       topo(K::IndependentLasers, true, false, 0.0), 1.1e-3, 0.2, false},
      {7, "independent cavity-stabilized lasers, fiber stabilization", topo(K::IndependentLasers, true, true, 0.0),
       0.1, 0.07, true},
  };
}

inline ScenarioPreset scenario_preset(int id) {
  for (auto& s : builtin_scenarios())
    if (s.id == id) return s;
  throw std::invalid_argument("scenario id must be 1-7, got " + std::to_string(id));
}

inline SimulationConfig scenario_config(int id, const DetectorParams& det = DetectorParams::snspd()) {
  SimulationConfig c;
  c.topology = scenario_preset(id).topology;
  c.sweep.detector = det;
  return c;
}

struct OperatingPoint {
  CoherenceResult solved;
  CoherenceResult used;
};

inline double round_significant(double x, int digits) {
  if (digits <= 0 || x == 0.0) return x;
  const double scale = std::pow(10.0, std::floor(std::log10(std::abs(x))) - (digits - 1));
  return std::round(x / scale) * scale;
}

inline OperatingPoint resolve_operating_point(const SimulationConfig& c) {
  const auto psd = interference_spectrum(c.topology, c.laser, c.fiber);
  OperatingPoint op;
  op.solved = solve_tau_q(psd, c.coherence, c.integration);
  double tau = round_significant(op.solved.tau_q, c.operating_point.tau_significant_digits);
  double sigma = op.solved.sigma_phi;
  if (c.operating_point.sigma_resolution_rad > 0.0)
    sigma = std::round(sigma / c.operating_point.sigma_resolution_rad) * c.operating_point.sigma_resolution_rad;
  op.used = make_coherence_result(tau, sigma, c.coherence.tau_ps);
  op.used.clipped = op.solved.clipped;
  op.used.at_floor = op.solved.at_floor;
  return op;
}

struct SweepRow {
  double x = 0.0;
  double attenuation_db = 0.0;
  double length_km = 0.0;
  std::array<double, kAllProtocols.size()> rate_bps{};  // indexed by Protocol
  double duty_cycle = 0.0;
  double sigma_phi = 0.0;
  double e_phi = 0.0;
  double bb84_e_u = 0.0;
  double bb84_e1ph = 0.0;
  double sns_e_z = 0.0;
  double sns_e1ph = 0.0;
  double aopp_e_z = 0.0;
  double aopp_n_t = 0.0;
  double cal_gain = 0.0;
  double cal_e_x = 0.0;
  double cal_e_z = 0.0;
  std::string flags;

  double rate(Protocol p) const { return rate_bps[static_cast<std::size_t>(p)]; }
};

/// All protocol rates at one total attenuation; rates in bits/s.
inline SweepRow evaluate_point(const SimulationConfig& c, const CoherenceResult& coh, double attenuation_db) {
  const auto& det = c.sweep.detector;
  const BalancedLink link = link_from_attenuation(attenuation_db, c.alpha_db_per_km);
  const double nu = det.clock_rate_hz;
  const double pd = det.dark_probability();
  const double eta_hat = effective_transmittance(link.eta, det);
  const double t = arm_transmittance(link, det, c.efficiency_convention);
  const double e_theta = c.misalignment.e_theta;

  SweepRow r;
  r.attenuation_db = attenuation_db;
  r.length_km = std::max(0.0, attenuation_db - 2.0 * c.a_plus_db) / c.alpha_db_per_km;
  r.duty_cycle = coh.duty_cycle;
  r.sigma_phi = coh.sigma_phi;
  r.e_phi = coh.e_phi;
  auto set = [&r](Protocol p, double v) { r.rate_bps[static_cast<std::size_t>(p)] = v; };
  auto flag = [&r](const char* f) {
    if (!r.flags.empty()) r.flags += ';';
    r.flags += f;
  };

  // BB84 over the full A-B link
  const ChannelErrorModel bb{eta_hat, pd, e_theta, coh.e_phi};
  const auto bounds = decoy_bounds(c.bb84_decoys, bb);
  if (!bounds.ok) flag("bb84_decoy_failed");
  r.bb84_e1ph = bounds.e1ph_up;
  r.bb84_e_u = qber(c.bb84_decoys.u, bb);
  set(Protocol::BB84, nu * bb84_rate(c.bb84_decoys, bb, c.bb84_f_ec, c.bb84_use_duty_cycle ? coh.duty_cycle : 1.0));

  // SNS, plain and paired
  SnsParams sp = c.sns;
  if (sp.optimize_epsilon) sp.epsilon = optimal_epsilon(sp, t, det, coh.e_phi, e_theta, false);
  const auto st = sns_window_stats(sp, t, det, coh.e_phi, e_theta);
  if (!st.decoy_ok) flag("sns_decoy_failed");
  r.sns_e_z = st.e_z;
  r.sns_e1ph = st.e1ph_up;
  set(Protocol::Sns, nu * coh.duty_cycle * sns_rate(st, sp));
  SnsParams ap = c.sns;
  if (ap.optimize_epsilon) ap.epsilon = optimal_epsilon(ap, t, det, coh.e_phi, e_theta, true);
  const auto ast = ap.optimize_epsilon ? sns_window_stats(ap, t, det, coh.e_phi, e_theta) : st;
  const auto aopp = aopp_transform(ast, ap);
  r.aopp_e_z = aopp.e_z_prime;
  r.aopp_n_t = aopp.n_t_prime;
  set(Protocol::SnsAopp, nu * coh.duty_cycle * sns_aopp_rate(aopp, ap));

  // CAL
  const double t_cal = c.cal_use_eta_hat ? t : std::sqrt(link.eta);
  const auto ch = make_cal_channel(t_cal, c.cal.mu_zeta, coh.sigma_phi, c.misalignment.theta(), c.cal.omega_model);
  const auto cal = cal_evaluate(c.cal, ch, pd, coh.duty_cycle);
  if (!(cal.gain > 0.0)) flag("cal_no_clicks");
  r.cal_gain = cal.gain;
  r.cal_e_x = cal.e_x;
  r.cal_e_z = cal.e_z;
  set(Protocol::Cal, nu * cal.rate);

  set(Protocol::Plob, link.eta < 1.0 ? nu * plob_bound(link.eta) : INFINITY);
  set(Protocol::PlobRealistic, eta_hat < 1.0 ? nu * plob_bound(eta_hat) : INFINITY);
  return r;
}

inline double attenuation_for(const SimulationConfig& c, double x) {
  if (c.sweep.x_axis == XAxis::TotalAttenuationDb) return x;
  return c.alpha_db_per_km * x + 2.0 * c.a_plus_db;
}

namespace detail {
template <class F>
void parallel_for(std::size_t n, F&& body) {
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(n, std::thread::hardware_concurrency()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) body(i);
    });
}
}  // namespace detail

struct SweepResult {
  OperatingPoint operating_point;
  std::vector<SweepRow> rows;
};

/// Rates along the configured x-axis; the coherence point is fixed per scenario.
inline SweepResult run_sweep(const SimulationConfig& c) {
  c.validate();
  SweepResult out;
  out.operating_point = resolve_operating_point(c);
  const auto xs = c.sweep.grid();
  out.rows.resize(xs.size());
  detail::parallel_for(xs.size(), [&](std::size_t i) {
    out.rows[i] = evaluate_point(c, out.operating_point.used, attenuation_for(c, xs[i]));
    out.rows[i].x = xs[i];
    if (c.sweep.x_axis == XAxis::TotalLengthKm) out.rows[i].length_km = xs[i];
  });
  return out;
}

/// Largest attenuation (dB) with a positive rate for `p`, searched on [0, hi_db].
inline std::optional<double> max_positive_attenuation(const SimulationConfig& c, const CoherenceResult& coh,
                                                      Protocol p, double hi_db = 200.0, double coarse_db = 0.5) {
  auto positive = [&](double a) { return evaluate_point(c, coh, a).rate(p) > 0.0; };
  std::optional<double> last;
  for (double a = 0.0; a <= hi_db + 1e-9; a += coarse_db)
    if (positive(a)) last = a;
  if (!last) return std::nullopt;
  double lo = *last, hi = std::min(hi_db, *last + coarse_db);
  if (lo == hi) return lo;
  for (int i = 0; i < 40 && hi - lo > 1e-6; ++i) {
    const double mid = 0.5 * (lo + hi);
    (positive(mid) ? lo : hi) = mid;
  }
  return lo;
}

inline std::vector<std::string> sweep_header(const SweepSpec& s) {
  std::vector<std::string> h{x_axis_name(s.x_axis), "attenuation_db", "length_km"};
  for (auto p : kAllProtocols)
    if (s.wants(p)) h.push_back(std::string("rate_") + protocol_name(p) + "_bps");
  for (const char* d : {"duty_cycle", "sigma_phi_rad", "e_phi", "bb84_e_u", "bb84_e1ph", "sns_e_z", "sns_e1ph",
                        "aopp_e_z", "aopp_n_t", "cal_gain", "cal_e_x", "cal_e_z", "flags"})
    h.emplace_back(d);
  return h;
}

inline void emit_csv(std::ostream& os, const std::vector<SweepRow>& rows, const SweepSpec& s) {
  os << csv::join(sweep_header(s)) << '\n';
  for (const auto& r : rows) {
    std::vector<std::string> cells{csv::format(r.x), csv::format(r.attenuation_db), csv::format(r.length_km)};
    for (auto p : kAllProtocols)
      if (s.wants(p)) cells.push_back(csv::format(r.rate(p)));
    for (double d : {r.duty_cycle, r.sigma_phi, r.e_phi, r.bb84_e_u, r.bb84_e1ph, r.sns_e_z, r.sns_e1ph, r.aopp_e_z,
                     r.aopp_n_t, r.cal_gain, r.cal_e_x, r.cal_e_z})
      cells.push_back(csv::format(d));
    cells.push_back(r.flags.empty() ? "none" : r.flags);
    os << csv::join(cells) << '\n';
  }
}

inline void emit_csv(const std::string& path, const std::vector<SweepRow>& rows, const SweepSpec& s) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  emit_csv(out, rows, s);
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline std::string sweep_csv(const SweepResult& r, const SweepSpec& s) {
  std::ostringstream os;
  emit_csv(os, r.rows, s);
  return os.str();
}

}  // namespace tfqkd
