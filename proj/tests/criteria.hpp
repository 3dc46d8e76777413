#pragma once

#include <string>

namespace criteria {

struct Result {
  bool pass = false;
  std::string detail;
};

Result gradient_fidelity();
Result layer_oracles();
Result equation_conformance();
Result rule_suite();
Result learning_smoke();
Result architectural_identities();
Result directional_result();
Result evp_curve();
// cli is the path of the command-line binary.
Result determinism(const std::string& cli);

}  // namespace criteria
