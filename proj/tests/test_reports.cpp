#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "qbe/lattice.hpp"
#include "qbe/qtm.hpp"
#include "qbe/reports.hpp"
#include "schema_check.hpp"

using namespace qbe;

namespace {

json load_schema(const std::string& name) {
  const std::filesystem::path here(__FILE__);
  std::ifstream in(here.parent_path().parent_path() / "schemas" / name);
  REQUIRE(in.good());
  return json::parse(in);
}

void check_against(const json& value, const std::string& schema_name) {
  const std::vector<std::string> errors =
      schema_check::validate(value, load_schema(schema_name));
  for (const std::string& e : errors) MESSAGE(e);
  CHECK(errors.empty());
}

LatticeShape machine_shape(int n_head, int length,
                           Topology topo = Topology::open) {
  LatticeShape s;
  s.n_head = n_head;
  s.length = length;
  s.topology = topo;
  s.spins = true;
  return s;
}

}  // namespace

TEST_CASE("float formatting survives a text round trip exactly") {
  for (double x : {1.0 / 3.0, 0.70710678118654735, 6.02e23, -1e-300, 0.0}) {
    const std::string text = format_float(x);
    CHECK(std::strtod(text.c_str(), nullptr) == x);
  }
}

TEST_CASE("machine verdicts serialize to the shipped schema") {
  MachineVerdict good =
      decide_ballistic(zero_motion_machine(), machine_shape(1, 4));
  json j = machine_verdict_json("zero_motion", good);
  check_against(j, "machine_verdict.schema.json");
  CHECK(j["machine"] == "zero_motion");
  CHECK(j["verdict"] == "ballistic");
  CHECK(j.contains("stability"));

  MachineVerdict bad = decide_ballistic(erasure_machine(),
                                        machine_shape(1, 3, Topology::cyclic));
  json jb = machine_verdict_json("erasure", bad);
  check_against(jb, "machine_verdict.schema.json");
  CHECK(jb["verdict"] == "not_ballistic");
  CHECK(jb["condition_x"]["violating_pairs"].size() == 1);
  CHECK(jb["partial_isometry"]["verdict"] == false);
  CHECK(jb["partial_isometry"].contains("witness"));
}

TEST_CASE("decomposition summaries serialize to the shipped schema") {
  const LatticeShape shape = machine_shape(1, 3, Topology::cyclic);
  const ComplexOperator T = build_step_operator(zero_motion_machine(), shape);
  Decomposition d = decompose(T);
  json j = decomposition_summary_json(d, T.rows());
  check_against(j, "decomposition.schema.json");
  CHECK(j["dimension"] == shape.dimension());
  CHECK(j["unitary_rank"].get<int>() > 0);  // the all-clear sector cycles
  CHECK(j.contains("unitary_paths"));
  for (const json& part : j["truncated"])
    CHECK(part["copies"].get<int>() * part["index"].get<int>() ==
          part["rank"].get<int>());
}

TEST_CASE("power tables flag the advertised failure pattern") {
  ComplexOperator U = hw_tower(3, cd(0.25, 0));
  std::vector<TowerPowerRow> rows = tower_power_table(U, 4);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].partial_isometry);
  CHECK(rows[1].partial_isometry);
  CHECK(!rows[2].partial_isometry);
  CHECK(rows[2].I_idempotence > 0.1);
  CHECK(rows[3].power_norm < 1e-12);

  json j = counterexample_json(3, cd(0.25, 0), rows);
  check_against(j, "counterexample.schema.json");
  CHECK(j["tower_index"] == 3);
  CHECK(j["a"]["re"] == 0.25);
  CHECK(j["powers"].size() == 4);

  CHECK_THROWS_AS(tower_power_table(U, 0), validation_error);
}

TEST_CASE("error reports serialize to the shipped schema") {
  json j = error_json("input", "lattice length must be positive");
  check_against(j, "error.schema.json");
  CHECK(j["error"]["kind"] == "input");
  CHECK(j["error"]["message"] == "lattice length must be positive");
}

TEST_CASE("path sets serialize chains with their kinds") {
  PathSet p;
  p.chains.push_back({PathSet::Kind::open_chain, {4, 5, 6}});
  p.chains.push_back({PathSet::Kind::cycle, {1, 2}});
  p.zero_length = {0};
  json j = to_json(p);
  CHECK(j["chains"][0]["kind"] == "open_chain");
  CHECK(j["chains"][1]["kind"] == "cycle");
  CHECK(j["chains"][0]["indices"] == json({4, 5, 6}));
  CHECK(j["zero_length"] == json({0}));
}
