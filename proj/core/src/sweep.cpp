#include "edgewbc/sweep.hpp"

#include <atomic>
#include <cstdio>
#include <exception>
#include <mutex>
#include <thread>

namespace edgewbc {

std::vector<SweepRow> run_sweep(const RobotModel& m, const std::vector<SweepItem>& grid,
                                int jobs) {
  if (grid.empty()) throw InvalidInput("sweep grid is empty");
  std::vector<SweepRow> rows(grid.size());

  const int workers =
      std::max(1, std::min<int>(jobs, static_cast<int>(grid.size())));
  std::atomic<std::size_t> next{0};
  std::mutex err_mutex;
  std::exception_ptr first_error;

  auto work = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= grid.size()) return;
      try {
        rows[i] = {grid[i], run_episode(m, grid[i].config)};
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };

  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int i = 0; i < workers; ++i) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);
  return rows;
}

SweepSummary summarize(const std::vector<SweepRow>& rows) {
  SweepSummary s;
  s.total = static_cast<int>(rows.size());
  double com = 0.0, viol = 0.0;
  for (const SweepRow& r : rows) {
    if (!r.result.completed) continue;
    ++s.succeeded;
    com += r.result.com_error_avg;
    viol += r.result.violation_avg;
  }
  if (s.total > 0) s.success_rate = static_cast<double>(s.succeeded) / s.total;
  if (s.succeeded > 0) {
    s.com_error_avg = com / s.succeeded;
    s.violation_avg = viol / s.succeeded;
  }
  return s;
}

void write_results_csv(const std::vector<SweepRow>& rows, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw Error("cannot open " + path + " for writing");
  std::fprintf(f,
               "label,task,controller,channel,seed,delay,completed,fell,fall_time,cycles,"
               "com_error,violation,violation_max,walked_distance,fresh_fraction,"
               "cached_fraction,onboard_fraction,fault_cycles,remote_solves,onboard_solves,"
               "solve_avg_s,solve_worst_s,apply_avg_s,apply_worst_s,mean_discrepancy,"
               "max_discrepancy,sent,delivered,dropped,late,superseded,delay_p50,delay_p95,"
               "delay_max\n");
  for (const SweepRow& r : rows) {
    const EpisodeConfig& c = r.item.config;
    const EpisodeResult& e = r.result;
    const double delay = c.channel.kind == ChannelConfig::Kind::Constant
                             ? c.channel.constant_rtt
                             : e.delay_p50;
    std::fprintf(
        f,
        "%s,%s,%s,%s,%llu,%.9g,%d,%d,%.9g,%d,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%d,%d,%d,"
        "%.9g,%.9g,%.9g,%.9g,%.9g,%d,%lld,%lld,%lld,%lld,%lld,%.9g,%.9g,%.9g\n",
        r.item.label.c_str(), to_string(c.kind), to_string(c.scheme),
        c.channel.describe().c_str(), static_cast<unsigned long long>(c.seed), delay,
        e.completed ? 1 : 0, e.fell ? 1 : 0, e.fall_time, e.cycles, e.com_error_avg,
        e.violation_avg, e.violation_max, e.walked_distance, e.fresh_fraction,
        e.cached_fraction, e.onboard_fraction, e.fault_cycles, e.remote_solves,
        e.onboard_solves, e.solve_time.avg(), e.solve_time.worst, e.apply_time.avg(),
        e.apply_time.worst, e.mean_discrepancy, e.max_discrepancy,
        static_cast<long long>(e.channel.sent), static_cast<long long>(e.channel.delivered),
        static_cast<long long>(e.channel.dropped), static_cast<long long>(e.channel.late),
        static_cast<long long>(e.channel.superseded), e.delay_p50, e.delay_p95,
        e.delay_max);
  }
  std::fclose(f);
}

}  // namespace edgewbc
