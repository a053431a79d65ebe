#pragma once

#include "edgewbc/config.hpp"

namespace edgewbc {

struct SweepRow {
  SweepItem item;
  EpisodeResult result;
};

// Runs every episode in the grid, parallel across up to `jobs` threads.
// Episodes share nothing; the returned rows keep grid order regardless of
// scheduling.
std::vector<SweepRow> run_sweep(const RobotModel& m, const std::vector<SweepItem>& grid,
                                int jobs = 1);

// Aggregation over the rows: success rate over all trials, metric means over
// the successful trials only.
struct SweepSummary {
  int total = 0;
  int succeeded = 0;
  double success_rate = 0.0;
  double com_error_avg = 0.0;
  double violation_avg = 0.0;
};
SweepSummary summarize(const std::vector<SweepRow>& rows);

// One CSV row per episode with every scalar metric plus channel counters.
void write_results_csv(const std::vector<SweepRow>& rows, const std::string& path);

}  // namespace edgewbc
