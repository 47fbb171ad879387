// tfqkd_sim: command-line front end for the phase-noise / TF-QKD models.

#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tfqkd/tfqkd.hpp"

using namespace tfqkd;

namespace {

struct GlobalOptions {
  std::string detector;
  std::string protocols;
  std::string out;
  std::string config;
  std::uint64_t seed = 42;
};

void add_global_options(CLI::App& app, GlobalOptions& g) {
  app.add_option("--detector", g.detector, "Detector preset")->check(CLI::IsMember({"snspd", "spad"}));
  app.add_option("--protocols", g.protocols, "Comma-separated protocols (bb84,sns_aopp,cal,sns,plob,plob_realistic)");
  app.add_option("--out", g.out, "Output file (default: stdout)");
  app.add_option("--config", g.config, "JSON configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Monte-Carlo seed");
}

SimulationConfig make_config(const GlobalOptions& g, int scenario) {
  SimulationConfig c = g.config.empty() ? scenario_config(scenario) : load_config(g.config);
  if (!g.detector.empty()) c.sweep.detector = DetectorParams::preset(g.detector);
  if (!g.protocols.empty()) c.sweep.protocols = parse_protocol_list(g.protocols);
  c.validate();
  return c;
}

void write_output(const std::string& path, const std::function<void(std::ostream&)>& body) {
  if (path.empty() || path == "-") {
    body(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  body(f);
  if (!f) throw std::runtime_error("write failed: " + path);
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> v;
  std::istringstream in(s);
  std::string item;
  while (std::getline(in, item, ','))
    if (!item.empty()) v.push_back(std::stod(item));
  if (v.empty()) throw std::invalid_argument("empty number list '" + s + "'");
  return v;
}

std::vector<double> log_grid(double lo, double hi, double per_decade) {
  if (!(lo > 0.0 && hi > lo && per_decade > 0.0)) throw std::invalid_argument("bad log grid");
  std::vector<double> g;
  const auto n = static_cast<long>(std::ceil(std::log10(hi / lo) * per_decade - 1e-9));
  for (long i = 0; i <= n; ++i) g.push_back(std::min(hi, lo * std::pow(10.0, static_cast<double>(i) / per_decade)));
  return g;
}

void print_operating_point(const OperatingPoint& op) {
  std::cerr << "operating point: tau_q=" << op.used.tau_q << " s sigma_phi=" << op.used.sigma_phi
            << " rad duty=" << op.used.duty_cycle << (op.solved.clipped ? " (clipped at tau_max)" : "")
            << " [solver: tau_q=" << op.solved.tau_q << " sigma=" << op.solved.sigma_phi << "]\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Phase-noise and twin-field QKD key-rate simulator"};
  app.require_subcommand(1);
  GlobalOptions g;
  add_global_options(app, g);

  // psd
  auto* psd = app.add_subcommand("psd", "Interference phase-noise spectrum, total and per term");
  int psd_scenario = 1;
  double f_min = 1e-3, f_max = 1e7, ppd = 20;
  psd->add_option("--scenario", psd_scenario, "Built-in scenario 1-7")->check(CLI::Range(1, 7));
  psd->add_option("--f-min", f_min, "Lowest frequency [Hz]");
  psd->add_option("--f-max", f_max, "Highest frequency [Hz]");
  psd->add_option("--points-per-decade", ppd, "Grid density");

  // sigma-map
  auto* smap = app.add_subcommand("sigma-map", "sigma_phi over delay mismatch and integration time");
  int map_scenario = 1;
  double dl_min = 0.0, dl_max = 10.0, tau_min = 1e-6, tau_max = 10.0, tau_ppd = 10;
  int dl_steps = 41;
  std::string levels = "0.2", isolines_path;
  smap->add_option("--scenario", map_scenario, "Template scenario 1-7")->check(CLI::Range(1, 7));
  smap->add_option("--dl-min", dl_min, "Smallest delay mismatch [km]");
  smap->add_option("--dl-max", dl_max, "Largest delay mismatch [km]");
  smap->add_option("--dl-steps", dl_steps, "Number of mismatch columns")->check(CLI::PositiveNumber);
  smap->add_option("--tau-min", tau_min, "Shortest integration time [s]");
  smap->add_option("--tau-max", tau_max, "Longest integration time [s]");
  smap->add_option("--tau-per-decade", tau_ppd, "Integration-time grid density");
  smap->add_option("--levels", levels, "Comma-separated isoline levels [rad]");
  smap->add_option("--isolines", isolines_path, "Write isolines CSV here");

  // tau-solve
  auto* tsolve = app.add_subcommand("tau-solve", "Coherence time for one or all scenarios");
  int tau_scenario = 0;
  tsolve->add_option("--scenario", tau_scenario, "Scenario 1-7 (0: all)")->check(CLI::Range(0, 7));

  // keyrate
  auto* krate = app.add_subcommand("keyrate", "Key rates at one attenuation");
  int kr_scenario = 2;
  double attenuation = 40.0;
  krate->add_option("--scenario", kr_scenario, "Scenario 1-7")->check(CLI::Range(1, 7));
  krate->add_option("--attenuation", attenuation, "Total attenuation [dB]")->check(CLI::NonNegativeNumber);

  // scenario
  auto* scen = app.add_subcommand("scenario", "Rate sweep for a built-in scenario or a config file");
  std::string scen_id;
  scen->add_option("id", scen_id, "1-7, or 'config' with --config")->required();

  // oracle
  auto* orc = app.add_subcommand("oracle", "Monte-Carlo and closed-form cross-checks");
  std::string table = "clicks", att_list = "20,40,60";
  int orc_scenario = 2;
  std::uint64_t samples = 1'000'000;
  orc->add_option("--table", table, "clicks or fock")->check(CLI::IsMember({"clicks", "fock"}));
  orc->add_option("--attenuations", att_list, "Comma-separated total attenuations [dB]");
  orc->add_option("--samples", samples, "Samples per Monte-Carlo run")->check(CLI::PositiveNumber);
  orc->add_option("--scenario", orc_scenario, "Scenario fixing the CAL visibility")->check(CLI::Range(1, 7));

  for (auto* sub : {psd, smap, tsolve, krate, scen, orc}) sub->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*psd) {
      const auto c = make_config(g, psd_scenario);
      const auto spec = interference_spectrum(c.topology, c.laser, c.fiber);
      write_output(g.out, [&](std::ostream& os) {
        std::vector<std::string> head{"f_hz", "total"};
        for (const auto& t : spec.terms()) head.push_back(t.label);
        os << csv::join(head) << '\n';
        for (double f : log_grid(f_min, f_max, ppd)) {
          std::vector<std::string> row{csv::format(f), csv::format(spec(f))};
          for (const auto& t : spec.terms()) row.push_back(csv::format(t.value(f)));
          os << csv::join(row) << '\n';
        }
      });
    } else if (*smap) {
      const auto c = make_config(g, map_scenario);
      std::vector<double> dl;
      for (int i = 0; i < dl_steps; ++i)
        dl.push_back(dl_steps == 1 ? dl_min : dl_min + (dl_max - dl_min) * i / (dl_steps - 1));
      const auto r = sigma_map(c.topology, c.laser, c.fiber, dl, log_grid(tau_min, tau_max, tau_ppd), c.coherence,
                               c.integration, parse_list(levels));
      write_output(g.out, [&](std::ostream& os) { write_sigma_map_csv(os, r.map); });
      if (!isolines_path.empty())
        write_output(isolines_path, [&](std::ostream& os) { write_isolines_csv(os, r.map, r.isolines); });
    } else if (*tsolve) {
      std::vector<std::pair<std::string, SimulationConfig>> cases;
      if (!g.config.empty()) cases.emplace_back("config", make_config(g, 1));
      else
        for (int id = 1; id <= 7; ++id)
          if (tau_scenario == 0 || tau_scenario == id) cases.emplace_back(std::to_string(id), make_config(g, id));
      write_output(g.out, [&](std::ostream& os) {
        os << "scenario,tau_q_s,sigma_phi_rad,duty_cycle,e_phi,clipped,at_floor,tau_used_s,sigma_used_rad\n";
        for (const auto& [name, c] : cases) {
          const auto op = resolve_operating_point(c);
          os << name << ',' << csv::format(op.solved.tau_q) << ',' << csv::format(op.solved.sigma_phi) << ','
             << csv::format(op.solved.duty_cycle) << ',' << csv::format(op.solved.e_phi) << ','
             << (op.solved.clipped ? 1 : 0) << ',' << (op.solved.at_floor ? 1 : 0) << ','
             << csv::format(op.used.tau_q) << ',' << csv::format(op.used.sigma_phi) << '\n';
        }
      });
    } else if (*krate) {
      const auto c = make_config(g, kr_scenario);
      const auto op = resolve_operating_point(c);
      print_operating_point(op);
      auto row = evaluate_point(c, op.used, attenuation);
      row.x = attenuation;
      SweepSpec spec = c.sweep;
      spec.x_axis = XAxis::TotalAttenuationDb;
      write_output(g.out, [&](std::ostream& os) { emit_csv(os, {row}, spec); });
    } else if (*scen) {
      SimulationConfig c;
      if (scen_id == "config") {
        if (g.config.empty()) throw std::invalid_argument("scenario config requires --config <file>");
        c = make_config(g, 1);
      } else {
        int id = 0;
        try {
          std::size_t pos = 0;
          id = std::stoi(scen_id, &pos);
          if (pos != scen_id.size()) id = 0;
        } catch (const std::exception&) {
        }
        if (id < 1 || id > 7) throw std::invalid_argument("scenario must be 1-7 or 'config', got '" + scen_id + "'");
        if (!g.config.empty()) throw std::invalid_argument("--config is only used with 'scenario config'");
        c = make_config(g, id);
      }
      const auto r = run_sweep(c);
      print_operating_point(r.operating_point);
      write_output(g.out, [&](std::ostream& os) { emit_csv(os, r.rows, c.sweep); });
    } else if (*orc) {
      const auto c = make_config(g, orc_scenario);
      const auto& det = c.sweep.detector;
      if (table == "fock") {
        write_output(g.out, [&](std::ostream& os) {
          os << "n_a,n_b,arm_t,p_d,engine_c_only,closed_form_c_only,engine_both,closed_form_both,max_abs_diff\n";
          for (double t : {0.1, 0.5, 1.0})
            for (int a = 0; a <= 3; ++a)
              for (int b = 0; b <= 3; ++b) {
                const auto y = fock_pair_yield(a, b, t, det.dark_probability());
                const auto o = fock_click_oracle(a, b, t, det.dark_probability());
                const double d = std::max({std::abs(y.none - o.none), std::abs(y.c_only - o.c_only),
                                           std::abs(y.d_only - o.d_only), std::abs(y.both - o.both)});
                os << a << ',' << b << ',' << csv::format(t) << ',' << csv::format(det.dark_probability()) << ','
                   << csv::format(y.c_only) << ',' << csv::format(o.c_only) << ',' << csv::format(y.both) << ','
                   << csv::format(o.both) << ',' << csv::format(d) << '\n';
              }
        });
      } else {
        McConfig mc;
        mc.samples = samples;
        mc.seed = g.seed;
        const auto op = resolve_operating_point(c);
        std::vector<OracleRow> rows;
        for (double db : parse_list(att_list)) {
          const double t = arm_transmittance(link_from_attenuation(db, c.alpha_db_per_km), det, c.efficiency_convention);
          for (auto r : oracle_sns_rows(c.sns, t, det, mc)) {
            r.label += "@" + csv::format(db) + "dB";
            rows.push_back(r);
          }
          const auto ch = make_cal_channel(t, c.cal.mu_zeta, op.used.sigma_phi, c.misalignment.theta(),
                                           c.cal.omega_model);
          for (int bit = 0; bit <= 1; ++bit)
            for (auto r : oracle_cal_rows(ch, c.cal.mu_zeta, det.dark_probability(), bit, mc)) {
              r.label += "@" + csv::format(db) + "dB";
              rows.push_back(r);
            }
        }
        std::cerr << mc_generator_id(mc) << " samples=" << mc.samples << '\n';
        write_output(g.out, [&](std::ostream& os) { write_oracle_csv(os, rows); });
      }
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
