#include "qlink/config.hpp"

#include <fstream>
#include <set>

namespace qlink {

using nlohmann::json;

namespace {

void reject_unknown_keys(const json& j, const std::set<std::string>& known,
                         const std::string& context) {
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) {
      throw ConfigError("unknown field \"" + key + "\" in " + context);
    }
  }
}

double require_number(const json& j, const std::string& key, const std::string& context) {
  if (!j.contains(key)) {
    throw ConfigError("missing field \"" + key + "\" in " + context);
  }
  if (!j.at(key).is_number()) {
    throw ConfigError("field \"" + key + "\" in " + context + " must be a number");
  }
  return j.at(key).get<double>();
}

double number_or(const json& j, const std::string& key, double fallback,
                 const std::string& context) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) {
    throw ConfigError("field \"" + key + "\" in " + context + " must be a number");
  }
  return j.at(key).get<double>();
}

Convention convention_from_string(const std::string& s, const std::string& context) {
  if (s == "relative") return Convention::Relative;
  if (s == "mirrored") return Convention::Mirrored;
  throw ConfigError("convention in " + context + " must be \"relative\" or \"mirrored\", got \"" +
                    s + "\"");
}

std::string convention_to_string(Convention c) {
  return c == Convention::Relative ? "relative" : "mirrored";
}

BellState state_from_json(const json& j) {
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "psi_minus") return BellState::of(BellLabel::PsiMinus);
    if (s == "psi_plus") return BellState::of(BellLabel::PsiPlus);
    if (s == "phi_minus") return BellState::of(BellLabel::PhiMinus);
    if (s == "phi_plus") return BellState::of(BellLabel::PhiPlus);
    throw ConfigError("unknown Bell state label \"" + s + "\"");
  }
  reject_unknown_keys(j, {"family", "phase_rad"}, "source.state");
  const std::string family = j.value("family", "psi");
  BellState state;
  if (family == "psi") {
    state.family = BellFamily::Psi;
  } else if (family == "phi") {
    state.family = BellFamily::Phi;
  } else {
    throw ConfigError("source.state.family must be \"psi\" or \"phi\"");
  }
  state.phase = normalize_phase(require_number(j, "phase_rad", "source.state"));
  return state;
}

json state_to_json(const BellState& s) {
  return json{{"family", s.family == BellFamily::Psi ? "psi" : "phi"}, {"phase_rad", s.phase}};
}

DetectorParams detector_from_json(const json& j, const std::string& context) {
  reject_unknown_keys(j,
                      {"efficiency", "dark_rate_hz", "background_rate_hz", "jitter_sigma_s",
                       "dead_time_s", "tick_s"},
                      context);
  DetectorParams d;
  d.efficiency = number_or(j, "efficiency", d.efficiency, context);
  d.dark_rate_hz = number_or(j, "dark_rate_hz", d.dark_rate_hz, context);
  d.background_rate_hz = number_or(j, "background_rate_hz", d.background_rate_hz, context);
  d.jitter_sigma_s = number_or(j, "jitter_sigma_s", d.jitter_sigma_s, context);
  d.dead_time_s = number_or(j, "dead_time_s", d.dead_time_s, context);
  d.tick_s = number_or(j, "tick_s", d.tick_s, context);
  return d;
}

json detector_to_json(const DetectorParams& d) {
  return json{{"efficiency", d.efficiency},
              {"dark_rate_hz", d.dark_rate_hz},
              {"background_rate_hz", d.background_rate_hz},
              {"jitter_sigma_s", d.jitter_sigma_s},
              {"dead_time_s", d.dead_time_s},
              {"tick_s", d.tick_s}};
}

}  // namespace

LinkConfig config_from_json(const json& j) {
  reject_unknown_keys(
      j, {"source", "channel", "detectors", "analyzers", "run", "analysis", "chsh_plan"},
      "config");
  LinkConfig cfg;

  if (j.contains("source")) {
    const json& s = j.at("source");
    reject_unknown_keys(s,
                        {"pair_rate_hz", "orphan_singles_rate_hz", "fibre_delay_s", "state",
                         "intrinsic_visibility"},
                        "source");
    cfg.source.pair_rate_hz = number_or(s, "pair_rate_hz", cfg.source.pair_rate_hz, "source");
    cfg.source.orphan_singles_rate_hz =
        number_or(s, "orphan_singles_rate_hz", cfg.source.orphan_singles_rate_hz, "source");
    cfg.source.fibre_delay_s = number_or(s, "fibre_delay_s", cfg.source.fibre_delay_s, "source");
    if (s.contains("state")) cfg.source.state = state_from_json(s.at("state"));
    cfg.source.intrinsic_visibility =
        number_or(s, "intrinsic_visibility", cfg.source.intrinsic_visibility, "source");
  }

  if (j.contains("channel")) {
    const json& c = j.at("channel");
    reject_unknown_keys(c, {"loss_db_per_photon", "scintillation"}, "channel");
    cfg.channel.loss_db_per_photon =
        number_or(c, "loss_db_per_photon", cfg.channel.loss_db_per_photon, "channel");
    if (c.contains("scintillation") && !c.at("scintillation").is_null()) {
      const json& sc = c.at("scintillation");
      reject_unknown_keys(sc, {"log_std_db", "coherence_time_s"}, "channel.scintillation");
      Scintillation s;
      s.log_std_db = require_number(sc, "log_std_db", "channel.scintillation");
      s.coherence_time_s = number_or(sc, "coherence_time_s", s.coherence_time_s,
                                     "channel.scintillation");
      cfg.channel.scintillation = s;
    }
  }

  if (j.contains("detectors")) {
    const json& d = j.at("detectors");
    if (d.is_array()) {
      if (d.size() != 4) {
        throw ConfigError("detectors array must have exactly 4 entries, got " +
                          std::to_string(d.size()));
      }
      for (std::size_t i = 0; i < 4; ++i) {
        cfg.detectors[i] = detector_from_json(d.at(i), "detectors[" + std::to_string(i) + "]");
      }
    } else {
      // One object applies to all four channels.
      const DetectorParams shared = detector_from_json(d, "detectors");
      cfg.detectors.fill(shared);
    }
  } else {
    cfg.detectors.fill(DetectorParams{});
  }

  if (j.contains("analyzers")) {
    const json& a = j.at("analyzers");
    reject_unknown_keys(a,
                        {"angle_a_rad", "angle_b_rad", "convention_a", "convention_b",
                         "polarization_contrast"},
                        "analyzers");
    cfg.analyzers.a.angle_rad = number_or(a, "angle_a_rad", cfg.analyzers.a.angle_rad, "analyzers");
    cfg.analyzers.b.angle_rad = number_or(a, "angle_b_rad", cfg.analyzers.b.angle_rad, "analyzers");
    if (a.contains("convention_a")) {
      cfg.analyzers.a.convention =
          convention_from_string(a.at("convention_a").get<std::string>(), "analyzers");
    }
    if (a.contains("convention_b")) {
      cfg.analyzers.b.convention =
          convention_from_string(a.at("convention_b").get<std::string>(), "analyzers");
    }
    cfg.analyzers.polarization_contrast =
        number_or(a, "polarization_contrast", cfg.analyzers.polarization_contrast, "analyzers");
  }

  if (j.contains("run")) {
    const json& r = j.at("run");
    reject_unknown_keys(r, {"duration_s", "seed", "path_length_m"}, "run");
    cfg.run.duration_s = number_or(r, "duration_s", cfg.run.duration_s, "run");
    if (r.contains("seed")) {
      if (!r.at("seed").is_number_unsigned()) {
        throw ConfigError("run.seed must be an unsigned integer");
      }
      cfg.run.seed = r.at("seed").get<std::uint64_t>();
    }
    cfg.run.path_length_m = number_or(r, "path_length_m", cfg.run.path_length_m, "run");
  }

  if (j.contains("analysis")) {
    const json& a = j.at("analysis");
    reject_unknown_keys(a, {"coincidence_window_s", "correlogram_range_s"}, "analysis");
    cfg.analysis.coincidence_window_s =
        number_or(a, "coincidence_window_s", cfg.analysis.coincidence_window_s, "analysis");
    cfg.analysis.correlogram_range_s =
        number_or(a, "correlogram_range_s", cfg.analysis.correlogram_range_s, "analysis");
  }

  if (j.contains("chsh_plan")) {
    const json& plan = j.at("chsh_plan");
    if (!plan.is_array()) throw ConfigError("chsh_plan must be an array");
    for (const json& entry : plan) {
      reject_unknown_keys(entry, {"angle_a_rad", "angle_b_rad", "duration_s"}, "chsh_plan entry");
      ChshPlanEntry e;
      e.angle_a_rad = require_number(entry, "angle_a_rad", "chsh_plan entry");
      e.angle_b_rad = require_number(entry, "angle_b_rad", "chsh_plan entry");
      e.duration_s = number_or(entry, "duration_s", cfg.run.duration_s, "chsh_plan entry");
      cfg.chsh_plan.push_back(e);
    }
  }

  cfg.validate();
  return cfg;
}

json config_to_json(const LinkConfig& cfg) {
  json j;
  j["source"] = {{"pair_rate_hz", cfg.source.pair_rate_hz},
                 {"orphan_singles_rate_hz", cfg.source.orphan_singles_rate_hz},
                 {"fibre_delay_s", cfg.source.fibre_delay_s},
                 {"state", state_to_json(cfg.source.state)},
                 {"intrinsic_visibility", cfg.source.intrinsic_visibility}};
  j["channel"] = {{"loss_db_per_photon", cfg.channel.loss_db_per_photon}};
  if (cfg.channel.scintillation) {
    j["channel"]["scintillation"] = {
        {"log_std_db", cfg.channel.scintillation->log_std_db},
        {"coherence_time_s", cfg.channel.scintillation->coherence_time_s}};
  }
  j["detectors"] = json::array();
  for (const DetectorParams& d : cfg.detectors) j["detectors"].push_back(detector_to_json(d));
  j["analyzers"] = {{"angle_a_rad", cfg.analyzers.a.angle_rad},
                    {"angle_b_rad", cfg.analyzers.b.angle_rad},
                    {"convention_a", convention_to_string(cfg.analyzers.a.convention)},
                    {"convention_b", convention_to_string(cfg.analyzers.b.convention)},
                    {"polarization_contrast", cfg.analyzers.polarization_contrast}};
  j["run"] = {{"duration_s", cfg.run.duration_s},
              {"seed", cfg.run.seed},
              {"path_length_m", cfg.run.path_length_m}};
  j["analysis"] = {{"coincidence_window_s", cfg.analysis.coincidence_window_s},
                   {"correlogram_range_s", cfg.analysis.correlogram_range_s}};
  if (!cfg.chsh_plan.empty()) {
    j["chsh_plan"] = json::array();
    for (const ChshPlanEntry& e : cfg.chsh_plan) {
      j["chsh_plan"].push_back({{"angle_a_rad", e.angle_a_rad},
                                {"angle_b_rad", e.angle_b_rad},
                                {"duration_s", e.duration_s}});
    }
  }
  return j;
}

LinkConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

void save_config(const std::filesystem::path& path, const LinkConfig& config) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write config file " + path.string());
  out << config_to_json(config).dump(2) << "\n";
}

std::vector<SettingInput> counts_from_json(const json& j) {
  if (!j.contains("settings") || !j.at("settings").is_array()) {
    throw ConfigError("counts JSON must contain a \"settings\" array");
  }
  std::vector<SettingInput> result;
  for (const json& entry : j.at("settings")) {
    reject_unknown_keys(entry,
                        {"angle_a_rad", "angle_b_rad", "c_tt", "c_tr", "c_rt", "c_rr", "e",
                         "delta_e"},
                        "settings entry");
    SettingInput s;
    s.angle_a_rad = number_or(entry, "angle_a_rad", 0.0, "settings entry");
    s.angle_b_rad = number_or(entry, "angle_b_rad", 0.0, "settings entry");
    const bool has_counts = entry.contains("c_tt") || entry.contains("c_tr") ||
                            entry.contains("c_rt") || entry.contains("c_rr");
    const bool has_e = entry.contains("e");
    if (has_counts == has_e) {
      throw ConfigError(
          "each settings entry needs either the four counts c_tt/c_tr/c_rt/c_rr or e/delta_e");
    }
    if (has_counts) {
      s.has_counts = true;
      s.counts.angle_a_rad = s.angle_a_rad;
      s.counts.angle_b_rad = s.angle_b_rad;
      s.counts.c_tt = static_cast<std::uint64_t>(require_number(entry, "c_tt", "settings entry"));
      s.counts.c_tr = static_cast<std::uint64_t>(require_number(entry, "c_tr", "settings entry"));
      s.counts.c_rt = static_cast<std::uint64_t>(require_number(entry, "c_rt", "settings entry"));
      s.counts.c_rr = static_cast<std::uint64_t>(require_number(entry, "c_rr", "settings entry"));
    } else {
      s.correlation.e = require_number(entry, "e", "settings entry");
      s.correlation.delta_e = number_or(entry, "delta_e", 0.0, "settings entry");
    }
    result.push_back(s);
  }
  return result;
}

json counts_to_json(const std::vector<SettingCounts>& counts) {
  json j;
  j["settings"] = json::array();
  for (const SettingCounts& c : counts) {
    j["settings"].push_back({{"angle_a_rad", c.angle_a_rad},
                             {"angle_b_rad", c.angle_b_rad},
                             {"c_tt", c.c_tt},
                             {"c_tr", c.c_tr},
                             {"c_rt", c.c_rt},
                             {"c_rr", c.c_rr}});
  }
  return j;
}

json chsh_result_to_json(const ChshResult& r, const std::string& provenance) {
  return json{{"s", r.s},
              {"delta_s", r.delta_s},
              {"sigmas_above_2", r.sigmas_above_2},
              {"qber", r.qber},
              {"delta_qber", r.delta_qber},
              {"qber_clamped", r.qber_clamped},
              {"provenance", provenance}};
}

json budget_to_json(const LossBudget& b) {
  json stages = json::array();
  for (const BudgetStage& s : b.stages) {
    stages.push_back({{"name", s.name},
                      {"rate_in_hz", s.rate_in_hz},
                      {"rate_out_hz", s.rate_out_hz},
                      {"attenuation_db", s.attenuation_db}});
  }
  return json{{"stages", stages},
              {"singles_total_db", b.singles_total_db},
              {"pair_total_db", b.pair_total_db},
              {"beamsplitter_db", b.beamsplitter_db},
              {"detector_delta_db_per_photon", b.detector_delta_db},
              {"single_link_db", b.single_link_db},
              {"pair_link_db", b.pair_link_db},
              {"pair_to_single_ratio", b.pair_to_single_ratio},
              {"flight_time_s", b.flight_time_s}};
}

}  // namespace qlink
