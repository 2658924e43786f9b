// Bundled ready-to-run network specs. Server counts for the hospital and
// data-center networks are fixed reference values; routing fractions and
// arrival rates are synthetic defaults chosen so every node runs at
// utilization 0.8 (see the bundled notes).
#pragma once

#include <string>
#include <vector>

#include "qsim/network.hpp"

namespace qsim {

struct Scenario {
    std::string name;
    NetworkSpec spec;
    std::string notes;  // Markdown notes on parameter provenance
};

Scenario make_scenario(const std::string& name);
std::vector<std::string> scenario_names();

}  // namespace qsim
