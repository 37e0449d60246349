#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qlink/bell.hpp"
#include "qlink/chsh.hpp"

#include "json.hpp"

namespace qlink {

struct SnrSummary {
  double signal_rate_hz = 0.0;
  double accidental_rate_hz = 0.0;
  double snr = 0.0;
  std::string provenance;  // "simulated" or "predicted"
};

/// Everything the `report` subcommand can assemble. Each block carries its
/// own provenance so simulated and supplied figures are never conflated.
struct ReportInputs {
  std::optional<ChshResult> chsh;
  std::string chsh_provenance;

  std::optional<VisibilityBudget> visibility;
  std::string visibility_provenance;

  std::optional<SnrSummary> snr;

  std::optional<LossBudget> budget;
  std::string budget_provenance;

  std::vector<std::string> notes;
};

nlohmann::json report_to_json(const ReportInputs& inputs);
std::string report_to_text(const ReportInputs& inputs);

}  // namespace qlink
