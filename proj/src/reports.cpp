#include "qbe/reports.hpp"

#include <cstdio>

#include "qbe/isometry.hpp"

namespace qbe {

std::string format_float(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

json to_json(const PredicateReport& r) {
  json j;
  j["verdict"] = r.verdict;
  json res = json::object();
  for (const auto& [name, value] : r.residuals) res[name] = value;
  j["residuals"] = res;
  if (r.witness) j["witness"] = *r.witness;
  return j;
}

json to_json(const ConditionXReport& r) {
  json j;
  j["verdict"] = r.verdict;
  json pairs = json::array();
  for (const auto& [a, b] : r.violating_pairs) pairs.push_back({a, b});
  j["violating_pairs"] = pairs;
  j["detail"] = r.detail;
  return j;
}

json to_json(const PathSet& p) {
  json j;
  json chains = json::array();
  for (const auto& c : p.chains) {
    json one;
    one["kind"] = c.kind == PathSet::Kind::cycle ? "cycle" : "open_chain";
    one["indices"] = c.indices;
    chains.push_back(one);
  }
  j["chains"] = chains;
  j["zero_length"] = std::vector<Eigen::Index>(p.zero_length.begin(),
                                               p.zero_length.end());
  return j;
}

json machine_verdict_json(const std::string& machine, const MachineVerdict& v) {
  json j;
  j["machine"] = machine;
  j["verdict"] = to_string(v.verdict);
  j["evidence"] = v.evidence;
  j["deterministic"] = v.deterministic;
  j["partial_isometry"] = to_json(v.partial_isometry);
  j["orthogonality_preserving"] = to_json(v.orthogonality_preserving);
  j["condition_x"] = to_json(v.condition_x);
  if (v.stability) j["stability"] = to_json(*v.stability);
  return j;
}

json decomposition_summary_json(const Decomposition& d, Eigen::Index dim) {
  json j;
  j["dimension"] = dim;
  j["unitary_rank"] = d.unitary_rank;
  j["isometry_rank"] = d.isometry_rank;
  j["coisometry_rank"] = d.coisometry_rank;
  json parts = json::array();
  for (const auto& t : d.truncated) {
    json one;
    one["index"] = t.index;
    one["rank"] = t.rank;
    one["copies"] = t.rank / t.index;
    parts.push_back(one);
  }
  j["truncated"] = parts;
  j["completeness_residual"] = d.completeness_residual;
  j["unitary_ballistic_compatible"] = d.unitary_ballistic_compatible;
  if (d.unitary_paths) j["unitary_paths"] = to_json(*d.unitary_paths);
  return j;
}

std::vector<TowerPowerRow> tower_power_table(const ComplexOperator& U, int k_max,
                                             const ToleranceContext& tol) {
  if (k_max < 1) throw validation_error("power table needs k_max >= 1");
  std::vector<TowerPowerRow> rows;
  ComplexOperator Uk = U;
  for (int k = 1; k <= k_max; ++k) {
    TowerPowerRow row;
    row.k = k;
    const ComplexOperator I = compose(adjoint(Uk), Uk);
    const ComplexOperator F = compose(Uk, adjoint(Uk));
    row.I_idempotence = max_abs(subtract(compose(I, I), I));
    row.F_idempotence = max_abs(subtract(compose(F, F), F));
    row.partial_isometry = row.I_idempotence <= tol.eps_proj &&
                           row.F_idempotence <= tol.eps_proj;
    row.power_norm = max_abs(Uk);
    rows.push_back(row);
    Uk = compose(Uk, U);
  }
  return rows;
}

json counterexample_json(int n, cd a, const std::vector<TowerPowerRow>& rows) {
  json j;
  j["tower_index"] = n;
  j["a"] = {{"re", a.real()}, {"im", a.imag()}};
  json table = json::array();
  for (const auto& r : rows) {
    json row;
    row["k"] = r.k;
    row["I_idempotence"] = r.I_idempotence;
    row["F_idempotence"] = r.F_idempotence;
    row["partial_isometry"] = r.partial_isometry;
    row["power_norm"] = r.power_norm;
    table.push_back(row);
  }
  j["powers"] = table;
  return j;
}

json error_json(const std::string& kind, const std::string& message) {
  json j;
  j["error"] = {{"kind", kind}, {"message", message}};
  return j;
}

}  // namespace qbe
