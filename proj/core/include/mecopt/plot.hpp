#pragma once

// Static SVG rendering of trajectories: best-so-far latency against
// iteration, and a strip of candidate allocation indices per iteration.

#include <string>
#include <vector>

#include "mecopt/trajectory.hpp"

namespace mecopt {

struct PlotSeries {
  std::string label;
  Trajectory trajectory;
};

struct PlotOutput {
  std::string svg;
  std::vector<std::string> warnings;
};

// Byte-identical output for identical input. Empty input or trajectories
// without candidates render a placeholder and add a warning.
PlotOutput render_svg(const std::vector<PlotSeries>& series);

}  // namespace mecopt
