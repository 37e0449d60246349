#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "qlink/chsh.hpp"
#include "qlink/link_sim.hpp"

#include "json.hpp"

namespace qlink {

/// JSON <-> LinkConfig. Field names carry explicit units (*_hz, *_s, *_db,
/// *_rad, *_m); unknown fields raise ConfigError rather than being ignored.
nlohmann::json config_to_json(const LinkConfig& config);
LinkConfig config_from_json(const nlohmann::json& j);

LinkConfig load_config(const std::filesystem::path& path);
void save_config(const std::filesystem::path& path, const LinkConfig& config);

/// Per-setting coincidence counts, the wire format between `simulate`/
/// `correlate` and `chsh`. Each entry either carries the four raw counts or
/// a pre-computed correlation (e, delta_e).
struct SettingInput {
  double angle_a_rad = 0.0;
  double angle_b_rad = 0.0;
  bool has_counts = false;
  SettingCounts counts;
  CorrelationResult correlation;
};

std::vector<SettingInput> counts_from_json(const nlohmann::json& j);
nlohmann::json counts_to_json(const std::vector<SettingCounts>& counts);

nlohmann::json chsh_result_to_json(const ChshResult& result, const std::string& provenance);
nlohmann::json budget_to_json(const LossBudget& budget);

}  // namespace qlink
