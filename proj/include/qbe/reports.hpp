#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "qbe/halmos_wallen.hpp"
#include "qbe/qtm.hpp"
#include "qbe/report.hpp"

namespace qbe {

using json = nlohmann::json;

// Floats in CSV and JSON text fields carry 17 significant digits so outputs
// are reproducible bit for bit.
std::string format_float(double x);

json to_json(const PredicateReport& r);
json to_json(const ConditionXReport& r);
json to_json(const PathSet& p);

json machine_verdict_json(const std::string& machine, const MachineVerdict& v);
json decomposition_summary_json(const Decomposition& d, Eigen::Index dim);

struct TowerPowerRow {
  int k = 0;
  double I_idempotence = 0;
  double F_idempotence = 0;
  bool partial_isometry = false;
  double power_norm = 0;
};
std::vector<TowerPowerRow> tower_power_table(const ComplexOperator& U, int k_max,
                                             const ToleranceContext& tol = tolerances());
json counterexample_json(int n, cd a, const std::vector<TowerPowerRow>& rows);

json error_json(const std::string& kind, const std::string& message);

}  // namespace qbe
