#pragma once

/// JSON configuration: every model coefficient is optional and overridable;
/// unknown or mistyped fields are rejected with their path.

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "tfqkd/scenario.hpp"

namespace tfqkd {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& path, const std::string& what)
      : std::runtime_error(path + ": " + what), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

namespace detail {

using json = nlohmann::json;

class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(label(), "expected an object");
  }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json* find(const std::string& key) {
    if (!j_.contains(key)) return nullptr;
    seen_.insert(key);
    return &j_.at(key);
  }

  void number(const std::string& key, double& out) {
    if (const json* v = find(key)) {
      if (v->is_string() && (v->get<std::string>() == "inf" || v->get<std::string>() == "infinity")) {
        out = INFINITY;
        return;
      }
      if (!v->is_number()) throw ConfigError(at(key), "expected a number");
      out = v->get<double>();
    }
  }

  void integer(const std::string& key, int& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_integer()) throw ConfigError(at(key), "expected an integer");
      out = v->get<int>();
    }
  }

  void boolean(const std::string& key, bool& out) {
    if (const json* v = find(key)) {
      if (!v->is_boolean()) throw ConfigError(at(key), "expected true or false");
      out = v->get<bool>();
    }
  }

  void string(const std::string& key, std::string& out) {
    if (const json* v = find(key)) {
      if (!v->is_string()) throw ConfigError(at(key), "expected a string");
      out = v->get<std::string>();
    }
  }

  template <class F>
  void object(const std::string& key, F&& f) {
    if (const json* v = find(key)) {
      ObjectReader r(*v, at(key));
      f(r);
      r.finish();
    }
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError(at(it.key()), "unknown field");
  }

 private:
  std::string label() const { return path_.empty() ? "<root>" : path_; }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline json number_json(double v) {
  if (std::isinf(v)) return "inf";
  return v;
}

template <class F>
void rethrow_as_config(const std::string& path, F&& f) {
  try {
    f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path, e.what());
  }
}

inline TopologyKind parse_topology_kind(const std::string& s, const std::string& path) {
  if (s == "common_laser") return TopologyKind::CommonLaser;
  if (s == "independent_lasers") return TopologyKind::IndependentLasers;
  throw ConfigError(path, "expected common_laser or independent_lasers, got '" + s + "'");
}

inline void read_detector(const json& v, const std::string& path, DetectorParams& d) {
  if (v.is_string()) {
    rethrow_as_config(path, [&] { d = DetectorParams::preset(v.get<std::string>()); });
    return;
  }
  ObjectReader r(v, path);
  std::string preset;
  r.string("preset", preset);
  if (!preset.empty()) rethrow_as_config(r.at("preset"), [&] { d = DetectorParams::preset(preset); });
  r.string("name", d.name);
  r.number("efficiency", d.efficiency);
  r.number("dark_count_rate_hz", d.dark_count_rate_hz);
  r.number("clock_rate_hz", d.clock_rate_hz);
  r.finish();
}

inline IndexSet read_index_set(const json& v, const std::string& path) {
  if (!v.is_array()) throw ConfigError(path, "expected an array of [m_a, m_b] pairs");
  IndexSet out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto& e = v[i];
    if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer())
      throw ConfigError(path + "[" + std::to_string(i) + "]", "expected [m_a, m_b] integers");
    out.emplace_back(e[0].get<int>(), e[1].get<int>());
  }
  return out;
}

inline json index_set_json(const IndexSet& s) {
  json a = json::array();
  for (auto [x, y] : s) a.push_back({x, y});
  return a;
}

}  // namespace detail

inline SimulationConfig parse_config(const nlohmann::json& root) {
  using detail::ObjectReader;
  SimulationConfig c;
  ObjectReader r(root, "");

  if (const auto* v = r.find("scenario")) {
    if (!v->is_number_integer()) throw ConfigError("scenario", "expected an integer 1-7");
    detail::rethrow_as_config("scenario", [&] { c.topology = scenario_preset(v->get<int>()).topology; });
  }

  r.object("topology", [&](ObjectReader& t) {
    std::string kind;
    t.string("kind", kind);
    if (!kind.empty()) c.topology.kind = detail::parse_topology_kind(kind, t.at("kind"));
    t.boolean("laser_stabilized", c.topology.laser_stabilized);
    t.boolean("fiber_stabilized", c.topology.fiber_stabilized);
    t.number("l_a_km", c.topology.l_a_km);
    t.number("l_b_km", c.topology.l_b_km);
    t.number("refractive_index", c.topology.refractive_index);
    t.number("speed_of_light_m_s", c.topology.speed_of_light);
    t.number("round_trip_factor", c.topology.round_trip_factor);
    t.number("floor_factor", c.topology.floor_factor);
    if (const auto* v = t.find("delay_mismatch_km")) {
      if (v->is_null()) c.topology.delay_mismatch_km.reset();
      else if (v->is_number()) c.topology.delay_mismatch_km = v->get<double>();
      else throw ConfigError(t.at("delay_mismatch_km"), "expected a number or null");
    }
  });

  r.object("laser", [&](ObjectReader& l) {
    l.object("free", [&](ObjectReader& f) {
      f.number("r3", c.laser.free.r3);
      f.number("r2", c.laser.free.r2);
      f.number("f_c_hz", c.laser.free.f_c);
    });
    l.object("cavity", [&](ObjectReader& f) {
      f.number("c4", c.laser.cavity.c4);
      f.number("c3", c.laser.cavity.c3);
      f.number("c2", c.laser.cavity.c2);
    });
    l.object("loop", [&](ObjectReader& f) {
      f.number("bandwidth_hz", c.laser.loop.bandwidth);
      f.number("gamma", c.laser.loop.gamma);
      f.number("delta", c.laser.loop.delta);
    });
  });

  r.object("fiber", [&](ObjectReader& f) {
    f.number("l", c.fiber.l);
    f.number("f_c_prime_hz", c.fiber.f_c_prime);
    f.number("s0", c.fiber.s0);
    f.number("f_c_dprime_hz", c.fiber.f_c_dprime);
    f.number("lambda_s_nm", c.fiber.lambda_s_nm);
    f.number("lambda_q_nm", c.fiber.lambda_q_nm);
  });

  r.object("coherence", [&](ObjectReader& f) {
    f.number("sigma_threshold_rad", c.coherence.sigma_threshold);
    f.number("tau_max_s", c.coherence.tau_max);
    f.number("tau_ps_s", c.coherence.tau_ps);
    f.number("tau_floor_s", c.coherence.tau_floor);
    f.number("bisect_rel_tol", c.coherence.bisect_rel_tol);
  });

  r.object("integration", [&](ObjectReader& f) {
    f.number("f_max_hz", c.integration.f_max_hz);
    f.number("open_end_hz", c.integration.open_end_hz);
    f.integer("points_per_decade", c.integration.points_per_decade);
    f.number("rel_tol", c.integration.rel_tol);
    f.integer("max_refinements", c.integration.max_refinements);
    f.integer("oscillation_points_per_period", c.integration.oscillation_points_per_period);
    f.integer("oscillation_periods", c.integration.oscillation_periods);
  });

  r.object("operating_point", [&](ObjectReader& f) {
    f.integer("tau_significant_digits", c.operating_point.tau_significant_digits);
    f.number("sigma_resolution_rad", c.operating_point.sigma_resolution_rad);
  });

  r.object("link", [&](ObjectReader& f) {
    f.number("alpha_db_per_km", c.alpha_db_per_km);
    f.number("a_plus_db", c.a_plus_db);
    f.number("e_theta", c.misalignment.e_theta);
    std::string conv;
    f.string("efficiency_convention", conv);
    if (conv == "split_square") c.efficiency_convention = EfficiencyConvention::SplitSquare;
    else if (conv == "per_arm") c.efficiency_convention = EfficiencyConvention::PerArm;
    else if (!conv.empty())
      throw ConfigError(f.at("efficiency_convention"), "expected split_square or per_arm, got '" + conv + "'");
  });

  r.object("bb84", [&](ObjectReader& f) {
    f.object("decoys", [&](ObjectReader& d) {
      d.number("u", c.bb84_decoys.u);
      d.number("v", c.bb84_decoys.v);
      d.number("w", c.bb84_decoys.w);
    });
    f.number("f_ec", c.bb84_f_ec);
    f.boolean("use_duty_cycle", c.bb84_use_duty_cycle);
  });

  r.object("sns", [&](ObjectReader& f) {
    f.number("p_z", c.sns.p_z);
    f.number("epsilon", c.sns.epsilon);
    f.number("mu_z", c.sns.mu_z);
    f.number("mu_0", c.sns.mu_0);
    f.object("decoys", [&](ObjectReader& d) {
      d.number("u", c.sns.decoys.u);
      d.number("v", c.sns.decoys.v);
      d.number("w", c.sns.decoys.w);
    });
    f.number("f_ec", c.sns.f_ec);
    f.integer("phase_points", c.sns.phase_points);
    f.boolean("optimize_epsilon", c.sns.optimize_epsilon);
  });

  r.object("cal", [&](ObjectReader& f) {
    f.number("mu_zeta", c.cal.mu_zeta);
    f.number("f_ec", c.cal.f_ec);
    f.integer("tail_terms", c.cal.tail_terms);
    f.boolean("use_eta_hat", c.cal_use_eta_hat);
    std::string model;
    f.string("omega_model", model);
    if (model == "rms_cosine") c.cal.omega_model = OmegaModel::RmsCosine;
    else if (model == "gaussian_average") c.cal.omega_model = OmegaModel::GaussianAverage;
    else if (!model.empty())
      throw ConfigError(f.at("omega_model"), "expected rms_cosine or gaussian_average, got '" + model + "'");
    if (const auto* v = f.find("set_s0")) c.cal.set_s0 = detail::read_index_set(*v, f.at("set_s0"));
    if (const auto* v = f.find("set_s1")) c.cal.set_s1 = detail::read_index_set(*v, f.at("set_s1"));
  });

  r.object("sweep", [&](ObjectReader& f) {
    std::string axis;
    f.string("x_axis", axis);
    if (axis == "total_attenuation_db") c.sweep.x_axis = XAxis::TotalAttenuationDb;
    else if (axis == "total_length_km") c.sweep.x_axis = XAxis::TotalLengthKm;
    else if (!axis.empty())
      throw ConfigError(f.at("x_axis"), "expected total_attenuation_db or total_length_km, got '" + axis + "'");
    f.number("start", c.sweep.start);
    f.number("stop", c.sweep.stop);
    f.number("step", c.sweep.step);
    if (const auto* v = f.find("detector")) detail::read_detector(*v, f.at("detector"), c.sweep.detector);
    if (const auto* v = f.find("protocols")) {
      if (!v->is_array()) throw ConfigError(f.at("protocols"), "expected an array of protocol names");
      if (v->empty()) throw ConfigError(f.at("protocols"), "protocol list must not be empty");
      c.sweep.protocols.clear();
      for (std::size_t i = 0; i < v->size(); ++i) {
        const auto path = f.at("protocols") + "[" + std::to_string(i) + "]";
        if (!(*v)[i].is_string()) throw ConfigError(path, "expected a protocol name");
        detail::rethrow_as_config(path, [&] { c.sweep.protocols.push_back(parse_protocol((*v)[i].get<std::string>())); });
      }
    }
  });

  r.finish();
  detail::rethrow_as_config("<config>", [&] { c.validate(); });
  return c;
}

inline SimulationConfig parse_config_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("<config>", std::string("malformed JSON: ") + e.what());
  }
  return parse_config(j);
}

inline SimulationConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open config file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

inline nlohmann::json config_to_json(const SimulationConfig& c) {
  using detail::number_json;
  using nlohmann::json;
  json j;
  const auto& t = c.topology;
  j["topology"] = {{"kind", t.kind == TopologyKind::CommonLaser ? "common_laser" : "independent_lasers"},
                   {"laser_stabilized", t.laser_stabilized},
                   {"fiber_stabilized", t.fiber_stabilized},
                   {"l_a_km", t.l_a_km},
                   {"l_b_km", t.l_b_km},
                   {"refractive_index", t.refractive_index},
                   {"speed_of_light_m_s", t.speed_of_light},
                   {"round_trip_factor", t.round_trip_factor},
                   {"floor_factor", t.floor_factor},
                   {"delay_mismatch_km", t.delay_mismatch_km ? json(*t.delay_mismatch_km) : json(nullptr)}};
  j["laser"] = {
      {"free", {{"r3", c.laser.free.r3}, {"r2", c.laser.free.r2}, {"f_c_hz", c.laser.free.f_c}}},
      {"cavity", {{"c4", c.laser.cavity.c4}, {"c3", c.laser.cavity.c3}, {"c2", c.laser.cavity.c2}}},
      {"loop",
       {{"bandwidth_hz", c.laser.loop.bandwidth}, {"gamma", c.laser.loop.gamma}, {"delta", c.laser.loop.delta}}}};
  j["fiber"] = {{"l", c.fiber.l},
                {"f_c_prime_hz", c.fiber.f_c_prime},
                {"s0", c.fiber.s0},
                {"f_c_dprime_hz", c.fiber.f_c_dprime},
                {"lambda_s_nm", c.fiber.lambda_s_nm},
                {"lambda_q_nm", c.fiber.lambda_q_nm}};
  j["coherence"] = {{"sigma_threshold_rad", c.coherence.sigma_threshold},
                    {"tau_max_s", c.coherence.tau_max},
                    {"tau_ps_s", c.coherence.tau_ps},
                    {"tau_floor_s", c.coherence.tau_floor},
                    {"bisect_rel_tol", c.coherence.bisect_rel_tol}};
  j["integration"] = {{"f_max_hz", number_json(c.integration.f_max_hz)},
                      {"open_end_hz", c.integration.open_end_hz},
                      {"points_per_decade", c.integration.points_per_decade},
                      {"rel_tol", c.integration.rel_tol},
                      {"max_refinements", c.integration.max_refinements},
                      {"oscillation_points_per_period", c.integration.oscillation_points_per_period},
                      {"oscillation_periods", c.integration.oscillation_periods}};
  j["operating_point"] = {{"tau_significant_digits", c.operating_point.tau_significant_digits},
                          {"sigma_resolution_rad", c.operating_point.sigma_resolution_rad}};
  j["link"] = {{"alpha_db_per_km", c.alpha_db_per_km},
               {"a_plus_db", c.a_plus_db},
               {"e_theta", c.misalignment.e_theta},
               {"efficiency_convention",
                c.efficiency_convention == EfficiencyConvention::SplitSquare ? "split_square" : "per_arm"}};
  j["bb84"] = {{"decoys", {{"u", c.bb84_decoys.u}, {"v", c.bb84_decoys.v}, {"w", c.bb84_decoys.w}}},
               {"f_ec", c.bb84_f_ec},
               {"use_duty_cycle", c.bb84_use_duty_cycle}};
  j["sns"] = {{"p_z", c.sns.p_z},
              {"epsilon", c.sns.epsilon},
              {"mu_z", c.sns.mu_z},
              {"mu_0", c.sns.mu_0},
              {"decoys", {{"u", c.sns.decoys.u}, {"v", c.sns.decoys.v}, {"w", c.sns.decoys.w}}},
              {"f_ec", c.sns.f_ec},
              {"phase_points", c.sns.phase_points},
              {"optimize_epsilon", c.sns.optimize_epsilon}};
  j["cal"] = {{"mu_zeta", c.cal.mu_zeta},
              {"f_ec", c.cal.f_ec},
              {"tail_terms", c.cal.tail_terms},
              {"use_eta_hat", c.cal_use_eta_hat},
              {"omega_model", c.cal.omega_model == OmegaModel::RmsCosine ? "rms_cosine" : "gaussian_average"},
              {"set_s0", detail::index_set_json(c.cal.set_s0)},
              {"set_s1", detail::index_set_json(c.cal.set_s1)}};
  json protocols = json::array();
  for (auto p : c.sweep.protocols) protocols.push_back(protocol_name(p));
  const auto& d = c.sweep.detector;
  j["sweep"] = {{"x_axis", x_axis_name(c.sweep.x_axis)},
                {"start", c.sweep.start},
                {"stop", c.sweep.stop},
                {"step", c.sweep.step},
                {"detector",
                 {{"name", d.name},
                  {"efficiency", d.efficiency},
                  {"dark_count_rate_hz", d.dark_count_rate_hz},
                  {"clock_rate_hz", d.clock_rate_hz}}},
                {"protocols", protocols}};
  return j;
}

inline std::string emit_config(const SimulationConfig& c) { return config_to_json(c).dump(2) + "\n"; }

}  // namespace tfqkd
