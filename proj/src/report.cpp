#include "qlink/report.hpp"

#include <cmath>
#include <cstdio>

#include "qlink/config.hpp"

namespace qlink {

using nlohmann::json;

json report_to_json(const ReportInputs& in) {
  json j;
  if (in.chsh) {
    j["chsh"] = chsh_result_to_json(*in.chsh, in.chsh_provenance);
  }
  if (in.visibility) {
    const double v_tot = combine_visibilities(*in.visibility);
    j["visibility"] = {{"v_noise", in.visibility->v_noise},
                       {"v_source", in.visibility->v_source},
                       {"v_polarization", in.visibility->v_polarization},
                       {"v_total", v_tot},
                       {"s_max", predict_s_max(v_tot)},
                       {"provenance", in.visibility_provenance}};
  }
  if (in.snr) {
    j["snr"] = {{"signal_rate_hz", in.snr->signal_rate_hz},
                {"accidental_rate_hz", in.snr->accidental_rate_hz},
                {"snr", in.snr->snr},
                {"noise_visibility", noise_visibility_from_snr(in.snr->snr)},
                {"provenance", in.snr->provenance}};
  }
  if (in.budget) {
    j["loss_budget"] = budget_to_json(*in.budget);
    j["loss_budget"]["provenance"] = in.budget_provenance;
  }
  if (!in.notes.empty()) j["notes"] = in.notes;
  return j;
}

std::string report_to_text(const ReportInputs& in) {
  std::string out;
  char line[256];
  auto add = [&out, &line](auto... args) {
    std::snprintf(line, sizeof line, args...);
    out += line;
    out += '\n';
  };

  add("%s", "=== entanglement-link report ===");
  if (in.chsh) {
    const ChshResult& r = *in.chsh;
    add("CHSH   [%s]", in.chsh_provenance.c_str());
    add("  S            = %.3f +- %.3f", r.s, r.delta_s);
    add("  above S=2 by = %.1f standard deviations", r.sigmas_above_2);
    add("  QBER         = %.2f%% +- %.2f%%%s", 100.0 * r.qber, 100.0 * r.delta_qber,
        r.qber_clamped ? "  (S exceeded 2*sqrt(2); QBER clamped to 0)" : "");
  }
  if (in.visibility) {
    const double v_tot = combine_visibilities(*in.visibility);
    add("Visibility budget   [%s]", in.visibility_provenance.c_str());
    add("  noise %.4f x source %.4f x polarization %.4f = V_tot %.4f",
        in.visibility->v_noise, in.visibility->v_source, in.visibility->v_polarization, v_tot);
    add("  predicted S_max = %.3f", predict_s_max(v_tot));
  }
  if (in.snr) {
    add("Coincidence SNR   [%s]", in.snr->provenance.c_str());
    add("  signal %.3g /s vs accidentals %.3g /s -> SNR %.1f : 1", in.snr->signal_rate_hz,
        in.snr->accidental_rate_hz, in.snr->snr);
    add("  implied noise visibility = %.4f", noise_visibility_from_snr(in.snr->snr));
  }
  if (in.budget) {
    const LossBudget& b = *in.budget;
    add("Loss budget   [%s]", in.budget_provenance.c_str());
    for (const BudgetStage& s : b.stages) {
      add("  %-28s %12.4g /s -> %10.4g /s   %6.2f dB", s.name.c_str(), s.rate_in_hz,
          s.rate_out_hz, s.attenuation_db);
    }
    if (b.singles_total_db > 0.0) {
      add("  singles total %.1f dB = link %.1f dB + detector delta %.1f dB",
          b.singles_total_db, b.single_link_db, b.detector_delta_db);
    }
    if (b.pair_total_db > 0.0) {
      add("  pair total %.1f dB = link %.1f dB + BS %.1f dB + 2 x detector delta %.1f dB",
          b.pair_total_db, b.pair_link_db, b.beamsplitter_db, b.detector_delta_db);
      add("  pair/single link ratio = %.2f", b.pair_to_single_ratio);
    }
    if (b.flight_time_s > 0.0) {
      add("  photon flight time = %.3g s", b.flight_time_s);
    }
  }
  for (const std::string& note : in.notes) {
    add("note: %s", note.c_str());
  }
  return out;
}

}  // namespace qlink
