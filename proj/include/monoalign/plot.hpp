#ifndef MONOALIGN_PLOT_HPP
#define MONOALIGN_PLOT_HPP

#include <filesystem>
#include <string>
#include <vector>

#include "monoalign/align.hpp"
#include "monoalign/metrics.hpp"

namespace monoalign {

/// Learning curves of one metric: one line per model kind with its CI band,
/// train size on a log axis.
std::string curve_svg(const std::vector<CurvePoint>& curve, const std::string& metric, const std::string& title = {});

/// Partial dependence line with a two-standard-error band; flagged steps are drawn in red.
std::string pdp_svg(const PdpCurve& curve, const std::vector<Violation>& flagged = {});

void write_text(const std::string& text, const std::filesystem::path& path);

}  // namespace monoalign

#endif  // MONOALIGN_PLOT_HPP
