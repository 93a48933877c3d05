#pragma once

#include <string>

#include "gpcc/grid.hpp"

namespace gpcc {

// Imports the standard mpc tabular sections (bus, gen, branch, gencost).
// Branch charging susceptance is folded into the endpoint bus shunts and
// off-nominal tap ratios are folded into an equivalent series admittance
// plus endpoint shunts, so the admittance model seen by the solver matches
// the original pi network at the buses. Branches with an off-nominal ratio
// are marked unmonitored (transformers carry no thermal monitoring here).
GridCase parse_matpower_case(const std::string& text);

}  // namespace gpcc
