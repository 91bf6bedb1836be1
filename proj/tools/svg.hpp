#pragma once

#include <string>

namespace bbsim::cli {

struct RunData;

/// Deterministic SVG rendering of a completed run: historic paths, final
/// positions, velocity rays, the stored/rejected plan overlay at the first
/// rejection (green/blue), and the closest pair with its distance printed.
/// Identical inputs produce byte-identical documents.
std::string emit_plot(const RunData& data);

}  // namespace bbsim::cli
