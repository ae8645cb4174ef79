#pragma once

#include <string>
#include <vector>

#include "si/waveform.hpp"

namespace si {

// Column-oriented trajectory table: header `time_s,<name>[,<name>...]`,
// one row per frame. Values round-trip losslessly (17 significant digits).
struct TrajectoryTable {
  double rate_hz = kTrajectoryRateHz;
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;  // one per name, equal lengths

  std::size_t frames() const { return columns.empty() ? 0 : columns[0].size(); }

  static TrajectoryTable from_trajectories(const std::vector<Trajectory>& trajs);
  std::vector<Trajectory> to_trajectories() const;
  int column_index(const std::string& name) const;  // -1 if absent
};

void write_trajectory_csv(const std::string& path, const TrajectoryTable& table);
TrajectoryTable read_trajectory_csv(const std::string& path);

}  // namespace si
