#pragma once

#include <json.hpp>

#include "scenario.hpp"

namespace bbsim::cli {

/// Time the full reachability-based permanent-safety check (initial set
/// construction, set propagation over every step of a representative
/// look-ahead proposal, pairwise bounds, terminal condition) over the given
/// number of repetitions. Requires an uncertainty-mode MAS scenario.
nlohmann::json bench_decision_module(const ScenarioConfig& config, int repetitions);

}  // namespace bbsim::cli
