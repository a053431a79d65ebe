#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "edgewbc/rng.hpp"
#include "edgewbc/types.hpp"

namespace edgewbc {

// Two-state renewal blockage process: line-of-sight periods interrupted by
// Poisson-arriving outages with log-normal durations. Each outage carries
// one extra-delay plateau (log-normal, clipped to a hard cap) added to the
// base round trip, and an elevated drop probability while it lasts.
struct BlockageParams {
  double outage_rate = 0.05;          // outage starts per second
  double mean_outage_duration = 0.15;
  double duration_sigma_ln = 0.8;
  double min_outage_duration = 0.01;
  double max_outage_duration = 4.0;
  double extra_delay_cap = 0.389;     // hard cap on per-outage extra delay
  double extra_delay_sigma_ln = 0.8;  // median is cap/2
  double drop_prob_in_outage = 0.1;
  double airlink_min = 1.0e-3;        // one-way radio leg, uniform jitter
  double airlink_max = 2.0e-3;
  double edge_delay = 1.0e-3;         // one-way wired leg

  double base_rtt_min() const { return 2.0 * (airlink_min + edge_delay); }
  double base_rtt_max() const { return 2.0 * (airlink_max + edge_delay); }

  static BlockageParams smart_factory();     // rare, long outages
  static BlockageParams burning_building();  // frequent, short outages
};

// Round-trip delay trace at the control rate; NaN marks a dropped slot.
struct Trace {
  double period = 1.0e-3;
  std::vector<double> rtt;

  std::size_t slots() const { return rtt.size(); }
};

// CSV schema: header "t_s,delay_s", one row per transmission slot, full
// float64 precision so a replay reproduces the generating run bit-for-bit.
// Dropped slots serialize as "inf".
void save_trace(const Trace& t, const std::string& path);
Trace load_trace(const std::string& path);  // throws ParseError with line number

struct ChannelConfig {
  enum class Kind { Constant, Blockage, Trace };
  Kind kind = Kind::Constant;
  double constant_rtt = 0.0;
  BlockageParams blockage;
  std::string trace_path;      // loaded lazily when kind == Trace
  std::optional<Trace> trace;  // takes precedence over trace_path

  static ChannelConfig constant(double rtt);
  static ChannelConfig preset(const std::string& name);  // throws ConfigError
  std::string describe() const;
};

// Delay/loss model for the robot<->server round trip. One transaction per
// control slot: the request samples the slot's round-trip budget once and
// the reply inherits it, so an exported trace replays exactly. Sampling is
// random-access deterministic in (config, seed, slot).
class DelayChannel {
 public:
  DelayChannel(const ChannelConfig& cfg, std::uint64_t seed);

  struct SlotSample {
    bool dropped = false;
    double rtt = 0.0;
  };
  SlotSample sample(std::int64_t slot);

  struct Transaction {
    bool dropped = false;
    double server_time = 0.0;  // when the request reaches the server
    double reply_time = 0.0;   // when the reply reaches the robot
    double rtt = 0.0;
  };
  Transaction transact(std::int64_t slot, double send_time);

  double period() const { return period_; }
  Trace export_trace(double duration);

 private:
  void extend_outages(double until);
  struct Outage {
    double start, end, extra;
  };

  ChannelConfig cfg_;
  std::uint64_t jitter_seed_ = 0;
  Rng outage_rng_;
  std::vector<Outage> outages_;
  double outage_horizon_ = 0.0;
  double period_ = 1.0e-3;
};

struct ChannelStats {
  std::int64_t sent = 0;
  std::int64_t delivered = 0;
  std::int64_t dropped = 0;
  std::int64_t late = 0;        // consumed with age >= freshness deadline
  std::int64_t superseded = 0;  // drained because a fresher packet existed
  std::int64_t in_flight = 0;

  bool conserved() const { return sent == delivered + dropped + in_flight; }
};

// Consumes every delivered message and returns the freshest one by the
// sender-side timestamp, so reordering cannot roll the receiver back to an
// older solution. Staleness relative to `deadline_age` only labels the
// result (and the late counter); even an old packet still supersedes an
// older cache. Requires members state_timestamp / delivery_time.
template <class P>
std::optional<P> receive_freshest(std::vector<P>& delivered, double now, double deadline_age,
                                  ChannelStats& stats) {
  std::optional<P> best;
  for (auto& p : delivered) {
    if (now - p.state_timestamp >= deadline_age) ++stats.late;
    if (!best || p.state_timestamp > best->state_timestamp) {
      if (best) ++stats.superseded;
      best = std::move(p);
    } else {
      ++stats.superseded;
    }
  }
  delivered.clear();
  return best;
}

}  // namespace edgewbc
