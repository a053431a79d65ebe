#include "edgewbc/channel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

namespace edgewbc {

BlockageParams BlockageParams::smart_factory() {
  BlockageParams p;
  p.outage_rate = 0.05;
  p.mean_outage_duration = 0.15;
  p.extra_delay_cap = 0.389;
  return p;
}

BlockageParams BlockageParams::burning_building() {
  BlockageParams p;
  p.outage_rate = 0.5;
  p.mean_outage_duration = 0.03;
  p.extra_delay_cap = 0.091;
  return p;
}

ChannelConfig ChannelConfig::constant(double rtt) {
  if (rtt < 0.0) throw ConfigError("constant channel delay must be non-negative");
  ChannelConfig c;
  c.kind = Kind::Constant;
  c.constant_rtt = rtt;
  return c;
}

ChannelConfig ChannelConfig::preset(const std::string& name) {
  ChannelConfig c;
  c.kind = Kind::Blockage;
  if (name == "smart_factory")
    c.blockage = BlockageParams::smart_factory();
  else if (name == "burning_building")
    c.blockage = BlockageParams::burning_building();
  else
    throw ConfigError("unknown channel preset: " + name);
  return c;
}

std::string ChannelConfig::describe() const {
  char buf[64];
  switch (kind) {
    case Kind::Constant:
      std::snprintf(buf, sizeof(buf), "constant:%g", constant_rtt);
      return buf;
    case Kind::Blockage:
      std::snprintf(buf, sizeof(buf), "blockage:rate=%g;cap=%g", blockage.outage_rate,
                    blockage.extra_delay_cap);
      return buf;
    case Kind::Trace:
      return "trace:" + (trace_path.empty() ? std::string("<inline>") : trace_path);
  }
  return "?";
}

void save_trace(const Trace& t, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write trace file: " + path);
  out << "t_s,delay_s\n";
  char line[80];
  for (std::size_t i = 0; i < t.rtt.size(); ++i) {
    if (std::isnan(t.rtt[i]))
      std::snprintf(line, sizeof(line), "%.17g,inf\n", static_cast<double>(i) * t.period);
    else
      std::snprintf(line, sizeof(line), "%.17g,%.17g\n", static_cast<double>(i) * t.period,
                    t.rtt[i]);
    out << line;
  }
}

Trace load_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open trace file: " + path);
  Trace t;
  std::string line;
  int lineno = 0;
  double prev_t = -1.0;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1) {
      if (line != "t_s,delay_s") throw ParseError("trace header must be 't_s,delay_s'", lineno);
      continue;
    }
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ParseError("trace row missing comma", lineno);
    char* end = nullptr;
    const std::string ts = line.substr(0, comma), ds = line.substr(comma + 1);
    const double tv = std::strtod(ts.c_str(), &end);
    if (end == ts.c_str() || !std::isfinite(tv)) throw ParseError("bad t_s value", lineno);
    double dv;
    if (ds == "inf" || ds == "+inf") {
      dv = std::numeric_limits<double>::quiet_NaN();  // dropped slot
    } else {
      dv = std::strtod(ds.c_str(), &end);
      if (end == ds.c_str() || !std::isfinite(dv) || dv < 0.0)
        throw ParseError("bad delay_s value", lineno);
    }
    if (t.rtt.size() == 1 && prev_t >= 0.0) t.period = tv - prev_t;
    if (tv <= prev_t) throw ParseError("t_s must be strictly increasing", lineno);
    // Replay indexes samples by slot, so the grid must be uniform.
    if (t.rtt.size() >= 2 &&
        std::abs(tv - static_cast<double>(t.rtt.size()) * t.period) > 1e-9 * std::max(1.0, tv))
      throw ParseError("t_s is off the uniform slot grid", lineno);
    prev_t = tv;
    t.rtt.push_back(dv);
    if (t.rtt.size() == 1 && tv != 0.0) throw ParseError("trace must start at t_s = 0", lineno);
  }
  if (t.rtt.empty()) throw ParseError("trace has no samples", lineno ? lineno : 1);
  return t;
}

DelayChannel::DelayChannel(const ChannelConfig& cfg, std::uint64_t seed)
    : cfg_(cfg), jitter_seed_(mix_seed(seed, 1)), outage_rng_(mix_seed(seed, 2)) {
  if (cfg_.kind == ChannelConfig::Kind::Trace && !cfg_.trace)
    cfg_.trace = load_trace(cfg_.trace_path);
  if (cfg_.trace) period_ = cfg_.trace->period;
}

void DelayChannel::extend_outages(double until) {
  const BlockageParams& b = cfg_.blockage;
  const double sig = b.duration_sigma_ln;
  // Log-normal median that realizes the requested mean duration.
  const double dur_median = b.mean_outage_duration * std::exp(-0.5 * sig * sig);
  while (outage_horizon_ < until) {
    const double gap = outage_rng_.exponential(b.outage_rate);
    const double start = outage_horizon_ + gap;
    const double dur = std::clamp(outage_rng_.lognormal_median(dur_median, sig),
                                  b.min_outage_duration, b.max_outage_duration);
    const double extra = std::min(
        outage_rng_.lognormal_median(0.5 * b.extra_delay_cap, b.extra_delay_sigma_ln),
        b.extra_delay_cap);
    outages_.push_back({start, start + dur, extra});
    outage_horizon_ = start + dur;
  }
}

DelayChannel::SlotSample DelayChannel::sample(std::int64_t slot) {
  if (slot < 0) throw InvalidInput("channel slot must be non-negative");
  SlotSample s;
  switch (cfg_.kind) {
    case ChannelConfig::Kind::Constant:
      s.rtt = cfg_.constant_rtt;
      return s;
    case ChannelConfig::Kind::Trace: {
      const auto& t = *cfg_.trace;
      if (slot >= static_cast<std::int64_t>(t.rtt.size()))
        throw InvalidInput("trace is shorter than the episode");
      if (std::isnan(t.rtt[slot]))
        s.dropped = true;
      else
        s.rtt = t.rtt[slot];
      return s;
    }
    case ChannelConfig::Kind::Blockage: {
      const BlockageParams& b = cfg_.blockage;
      const double t = static_cast<double>(slot) * period_;
      extend_outages(t + period_);
      Rng slot_rng(mix_seed(jitter_seed_, static_cast<std::uint64_t>(slot)));
      s.rtt = slot_rng.uniform(b.airlink_min, b.airlink_max) +
              slot_rng.uniform(b.airlink_min, b.airlink_max) + 2.0 * b.edge_delay;
      const double drop_u = slot_rng.uniform();
      for (const Outage& o : outages_) {
        if (t >= o.start && t < o.end) {
          s.rtt += o.extra;
          if (drop_u < b.drop_prob_in_outage) s.dropped = true;
          break;
        }
        if (o.start > t) break;
      }
      return s;
    }
  }
  throw InvalidInput("unhandled channel kind");
}

DelayChannel::Transaction DelayChannel::transact(std::int64_t slot, double send_time) {
  const SlotSample s = sample(slot);
  Transaction tr;
  tr.dropped = s.dropped;
  tr.rtt = s.rtt;
  if (!s.dropped) {
    tr.server_time = send_time + 0.5 * s.rtt;
    tr.reply_time = send_time + s.rtt;
  }
  return tr;
}

Trace DelayChannel::export_trace(double duration) {
  Trace t;
  t.period = period_;
  const auto slots = static_cast<std::int64_t>(std::llround(duration / period_));
  t.rtt.reserve(slots);
  for (std::int64_t k = 0; k < slots; ++k) {
    const SlotSample s = sample(k);
    t.rtt.push_back(s.dropped ? std::numeric_limits<double>::quiet_NaN() : s.rtt);
  }
  return t;
}

}  // namespace edgewbc
