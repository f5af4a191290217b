#pragma once

#include <string>

#include "tscal/metrics.hpp"

namespace tscal {

/// Reliability diagram: one `<rect class="bar">` per bin with height equal
/// to the bin accuracy (zero for empty bins), a confidence marker per
/// non-empty bin, and the identity diagonal.
std::string render_reliability_svg(const ReliabilityBins& bins, const std::string& title = "Reliability diagram");

}  // namespace tscal
