#pragma once

#include <string>

#include "si/csv_io.hpp"

namespace si {

// Writes stacked per-channel panels of est (solid) with an optional ref
// overlay (dashed) as a standalone SVG. Channels present in ref but not in
// est are ignored; panel order follows est.
void write_trajectory_svg(const std::string& path, const TrajectoryTable& est,
                          const TrajectoryTable* ref = nullptr);

}  // namespace si
