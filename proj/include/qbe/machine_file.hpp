#pragma once

#include <string>

#include "qbe/lattice.hpp"
#include "qbe/qtm.hpp"

namespace qbe {

// On-disk machine description. Line oriented, '#' starts a comment:
//   machine <name>
//   heads <int>
//   lattice <length> <cyclic|open>
//   rule <l> <s> <f> <R|L> <v00> <v01> <v10> <v11>
// with complex literals <float>(+|-)<float>i, e.g. 0.5-0.5i.
struct MachineFile {
  std::string name;
  RuleTable rules;
  LatticeShape shape;
};

// Throws input_error with line and column diagnostics on syntax errors and
// with both line numbers on duplicate (l, s) rules.
MachineFile parse_machine_file(const std::string& text);

// Canonical serialization; parse(serialize(m)) reproduces m exactly.
std::string serialize_machine_file(const MachineFile& m);

MachineFile load_machine_file(const std::string& path);

}  // namespace qbe
