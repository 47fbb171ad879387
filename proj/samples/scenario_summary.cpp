// Prints the coherence operating point of every built-in scenario and, for each
// protocol, the largest attenuation with a positive key rate.

#include <cstdio>

#include "tfqkd/tfqkd.hpp"

using namespace tfqkd;

int main() {
  for (const char* det_name : {"snspd", "spad"}) {
    const auto det = DetectorParams::preset(det_name);
    std::printf("detector %s (eta_D=%.2f, dark=%.0f Hz)\n", det.name.c_str(), det.efficiency,
                det.dark_count_rate_hz);
    std::printf("  %-3s %-11s %-9s %-7s %8s %8s %8s\n", "id", "tau_q[s]", "sigma", "duty", "bb84", "sns_aopp", "cal");
    for (const auto& preset : builtin_scenarios()) {
      const auto c = scenario_config(preset.id, det);
      const auto op = resolve_operating_point(c);
      std::printf("  %-3d %-11.3g %-9.3f %-7.4f", preset.id, op.used.tau_q, op.used.sigma_phi, op.used.duty_cycle);
      for (auto p : {Protocol::BB84, Protocol::SnsAopp, Protocol::Cal}) {
        const auto a = max_positive_attenuation(c, op.used, p);
        if (a) std::printf(" %7.1fdB", *a);
        else std::printf(" %9s", "-");
      }
      std::printf("\n");
    }
  }
  return 0;
}
