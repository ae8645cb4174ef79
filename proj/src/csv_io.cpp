#include "si/csv_io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace si {

TrajectoryTable TrajectoryTable::from_trajectories(const std::vector<Trajectory>& trajs) {
  TrajectoryTable t;
  if (trajs.empty()) fail(ErrorCategory::EmptyInput, "no trajectories to tabulate");
  t.rate_hz = trajs[0].rate_hz;
  const std::size_t len = trajs[0].values.size();
  for (const auto& tr : trajs) {
    if (tr.values.size() != len)
      fail(ErrorCategory::Shape, "trajectory length mismatch for channel " + tr.name);
    if (tr.rate_hz != t.rate_hz)
      fail(ErrorCategory::InvalidInput, "trajectory rate mismatch for channel " + tr.name);
    t.names.push_back(tr.name);
    t.columns.push_back(tr.values);
  }
  return t;
}

std::vector<Trajectory> TrajectoryTable::to_trajectories() const {
  std::vector<Trajectory> out;
  for (std::size_t c = 0; c < names.size(); ++c)
    out.push_back(Trajectory{names[c], columns[c], rate_hz});
  return out;
}

int TrajectoryTable::column_index(const std::string& name) const {
  for (std::size_t c = 0; c < names.size(); ++c)
    if (names[c] == name) return static_cast<int>(c);
  return -1;
}

void write_trajectory_csv(const std::string& path, const TrajectoryTable& table) {
  if (table.names.empty()) fail(ErrorCategory::EmptyInput, "empty trajectory table");
  std::ofstream out(path);
  if (!out) fail(ErrorCategory::Io, "cannot write " + path);

  out << "time_s";
  for (const auto& n : table.names) out << ',' << n;
  out << '\n';

  char buf[40];
  const std::size_t frames = table.frames();
  for (std::size_t i = 0; i < frames; ++i) {
    std::snprintf(buf, sizeof(buf), "%.6f", static_cast<double>(i) / table.rate_hz);
    out << buf;
    for (const auto& col : table.columns) {
      std::snprintf(buf, sizeof(buf), "%.17g", col[i]);
      out << ',' << buf;
    }
    out << '\n';
  }
  if (!out) fail(ErrorCategory::Io, "write failed for " + path);
}

TrajectoryTable read_trajectory_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCategory::Io, "cannot open " + path);

  std::string line;
  if (!std::getline(in, line)) fail(ErrorCategory::Format, path + ": empty file");
  if (line.size() && line.back() == '\r') line.pop_back();

  TrajectoryTable t;
  {
    std::stringstream header(line);
    std::string field;
    bool first = true;
    while (std::getline(header, field, ',')) {
      if (first) {
        if (field != "time_s")
          fail(ErrorCategory::Format, path + ": header must start with time_s");
        first = false;
      } else {
        t.names.push_back(field);
      }
    }
  }
  if (t.names.empty()) fail(ErrorCategory::Format, path + ": no channel columns");
  t.columns.assign(t.names.size(), {});

  std::vector<double> times;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.size() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string field;
    std::size_t col = 0;
    while (std::getline(row, field, ',')) {
      char* end = nullptr;
      const double v = std::strtod(field.c_str(), &end);
      if (end == field.c_str())
        fail(ErrorCategory::Format,
             path + ": bad number at line " + std::to_string(line_no));
      if (col == 0) times.push_back(v);
      else if (col <= t.names.size()) t.columns[col - 1].push_back(v);
      else fail(ErrorCategory::Format, path + ": extra column at line " + std::to_string(line_no));
      ++col;
    }
    if (col != t.names.size() + 1)
      fail(ErrorCategory::Format, path + ": short row at line " + std::to_string(line_no));
  }
  if (times.size() >= 2) {
    const double dt = times[1] - times[0];
    if (dt > 0) t.rate_hz = 1.0 / dt;
  }
  // Snap near-100 Hz to the canonical trajectory rate.
  if (std::abs(t.rate_hz - kTrajectoryRateHz) < 0.5) t.rate_hz = kTrajectoryRateHz;
  return t;
}

}  // namespace si
