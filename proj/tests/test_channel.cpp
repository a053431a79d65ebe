#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "edgewbc/channel.hpp"

using namespace edgewbc;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) {
    path = (std::filesystem::temp_directory_path() / name).string();
  }
  ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("constant channel is a fixed round trip, never drops") {
  DelayChannel ch(ChannelConfig::constant(0.012), 99);
  for (std::int64_t k = 0; k < 100; ++k) {
    const auto s = ch.sample(k);
    CHECK_FALSE(s.dropped);
    CHECK(s.rtt == 0.012);
    const auto tx = ch.transact(k, k * ch.period());
    CHECK(tx.reply_time == doctest::Approx(k * ch.period() + 0.012).epsilon(1e-15));
    CHECK(tx.server_time == doctest::Approx(k * ch.period() + 0.006).epsilon(1e-15));
  }
}

TEST_CASE("same config and seed replay the same slot sequence") {
  for (const char* preset : {"smart_factory", "burning_building"}) {
    const ChannelConfig cfg = ChannelConfig::preset(preset);
    DelayChannel a(cfg, 1234), b(cfg, 1234), c(cfg, 4321);
    bool any_difference_from_c = false;
    for (std::int64_t k = 0; k < 5000; ++k) {
      const auto sa = a.sample(k);
      const auto sb = b.sample(k);
      CHECK(sa.dropped == sb.dropped);
      CHECK(sa.rtt == sb.rtt);
      const auto sc = c.sample(k);
      if (sa.dropped != sc.dropped || sa.rtt != sc.rtt) any_difference_from_c = true;
    }
    CHECK(any_difference_from_c);
  }
}

TEST_CASE("slot sampling is random access: order does not matter") {
  const ChannelConfig cfg = ChannelConfig::preset("burning_building");
  DelayChannel fwd(cfg, 7), rev(cfg, 7), jmp(cfg, 7);
  const int n = 800;
  std::vector<DelayChannel::SlotSample> a(n), b(n), c(n);
  for (int k = 0; k < n; ++k) a[k] = fwd.sample(k);
  for (int k = n - 1; k >= 0; --k) b[k] = rev.sample(k);
  for (int k = 0; k < n; k += 7) c[k] = jmp.sample(k);  // sparse access
  for (int k = 0; k < n; ++k) {
    CHECK(a[k].dropped == b[k].dropped);
    CHECK(a[k].rtt == b[k].rtt);
    if (k % 7 == 0) {
      CHECK(a[k].dropped == c[k].dropped);
      CHECK(a[k].rtt == c[k].rtt);
    }
  }
}

TEST_CASE("delays respect the per-preset caps and the base window") {
  for (const char* preset : {"smart_factory", "burning_building"}) {
    const ChannelConfig cfg = ChannelConfig::preset(preset);
    const BlockageParams& bp = cfg.blockage;
    DelayChannel ch(cfg, 31);
    double max_seen = 0.0;
    for (std::int64_t k = 0; k < 200000; ++k) {
      const auto s = ch.sample(k);
      if (s.dropped) continue;
      CHECK(s.rtt >= bp.base_rtt_min() - 1e-12);
      CHECK(s.rtt <= bp.base_rtt_max() + bp.extra_delay_cap + 1e-12);
      max_seen = std::max(max_seen, s.rtt);
    }
    // The cap is actually approached (the plateau distribution has mass near it).
    CHECK(max_seen > bp.base_rtt_max());
  }
}

TEST_CASE("preset personalities differ: long rare vs short frequent outages") {
  const BlockageParams f = BlockageParams::smart_factory();
  const BlockageParams b = BlockageParams::burning_building();
  CHECK(f.outage_rate < b.outage_rate);
  CHECK(f.mean_outage_duration > b.mean_outage_duration);
  CHECK(f.extra_delay_cap == doctest::Approx(0.389));
  CHECK(b.extra_delay_cap == doctest::Approx(0.091));

  // Factory outages can push extra delay beyond the building's entire cap;
  // the building never exceeds its own.
  int factory_beyond = 0;
  double building_max_extra = 0.0;
  {
    ChannelConfig cfg = ChannelConfig::preset("smart_factory");
    DelayChannel ch(cfg, 5);
    for (std::int64_t k = 0; k < 400000; ++k) {
      const auto s = ch.sample(k);
      if (!s.dropped && s.rtt > f.base_rtt_max() + b.extra_delay_cap) ++factory_beyond;
    }
  }
  {
    ChannelConfig cfg = ChannelConfig::preset("burning_building");
    DelayChannel ch(cfg, 5);
    for (std::int64_t k = 0; k < 400000; ++k) {
      const auto s = ch.sample(k);
      if (!s.dropped) building_max_extra = std::max(building_max_extra, s.rtt - b.base_rtt_max());
    }
  }
  CHECK(factory_beyond > 0);
  CHECK(building_max_extra <= b.extra_delay_cap + 1e-12);

  // Outage frequency ordering: the building drops packets in more distinct
  // episodes per unit time.
  auto count_drop_episodes = [](const char* preset) {
    DelayChannel ch(ChannelConfig::preset(preset), 11);
    int episodes = 0;
    bool in_drop = false;
    for (std::int64_t k = 0; k < 600000; ++k) {
      const bool d = ch.sample(k).dropped;
      if (d && !in_drop) ++episodes;
      in_drop = d;
    }
    return episodes;
  };
  CHECK(count_drop_episodes("burning_building") > count_drop_episodes("smart_factory"));
}

TEST_CASE("trace files round trip byte for byte and replay exactly") {
  ChannelConfig cfg = ChannelConfig::preset("smart_factory");
  DelayChannel gen(cfg, 77);
  const Trace t = gen.export_trace(30.0);
  REQUIRE(t.slots() == 30000);

  TempFile f1("edgewbc_trace_a.csv"), f2("edgewbc_trace_b.csv");
  save_trace(t, f1.path);
  const Trace back = load_trace(f1.path);
  REQUIRE(back.slots() == t.slots());
  CHECK(back.period == t.period);
  int drops = 0;
  for (std::size_t k = 0; k < t.slots(); ++k) {
    if (std::isnan(t.rtt[k])) {
      ++drops;
      CHECK(std::isnan(back.rtt[k]));
    } else {
      CHECK(back.rtt[k] == t.rtt[k]);  // bit-exact via full-precision formatting
    }
  }
  CHECK(drops > 0);  // 30 s of factory traffic hits at least one outage

  // Saving the loaded trace reproduces the identical file.
  save_trace(back, f2.path);
  std::ifstream a(f1.path, std::ios::binary), b(f2.path, std::ios::binary);
  const std::string sa((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
  const std::string sb((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
  CHECK(sa == sb);

  // A trace-driven channel replays the generator slot for slot.
  ChannelConfig replay_cfg;
  replay_cfg.kind = ChannelConfig::Kind::Trace;
  replay_cfg.trace = back;
  DelayChannel replay(replay_cfg, 0);
  DelayChannel gen2(cfg, 77);
  for (std::int64_t k = 0; k < static_cast<std::int64_t>(t.slots()); ++k) {
    const auto s1 = gen2.sample(k);
    const auto s2 = replay.sample(k);
    CHECK(s1.dropped == s2.dropped);
    if (!s1.dropped) CHECK(s1.rtt == s2.rtt);
  }
}

TEST_CASE("malformed traces fail with the offending line number") {
  auto write = [](const std::string& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
  };
  TempFile f("edgewbc_trace_bad.csv");

  write(f.path, "wrong,header\n0,0.01\n");
  CHECK_THROWS_AS(load_trace(f.path), ParseError);
  try {
    load_trace(f.path);
  } catch (const ParseError& e) {
    CHECK(e.line == 1);
  }

  write(f.path, "t_s,delay_s\n0,0.01\n0.001,banana\n");
  try {
    load_trace(f.path);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line == 3);
  }

  // Non-uniform time grid.
  write(f.path, "t_s,delay_s\n0,0.01\n0.001,0.01\n0.005,0.01\n");
  CHECK_THROWS_AS(load_trace(f.path), ParseError);

  // Must start at t = 0.
  write(f.path, "t_s,delay_s\n0.5,0.01\n");
  CHECK_THROWS_AS(load_trace(f.path), ParseError);

  // Empty file.
  write(f.path, "");
  CHECK_THROWS_AS(load_trace(f.path), ParseError);

  CHECK_THROWS_AS(load_trace("/nonexistent/path/trace.csv"), Error);
}

TEST_CASE("dropped slots serialize as inf and replay as drops") {
  Trace t;
  t.period = 1e-3;
  t.rtt = {0.004, std::numeric_limits<double>::quiet_NaN(), 0.005};
  TempFile f("edgewbc_trace_drop.csv");
  save_trace(t, f.path);

  std::ifstream in(f.path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "t_s,delay_s");
  std::getline(in, line);
  std::getline(in, line);
  CHECK(line.find("inf") != std::string::npos);

  ChannelConfig cfg;
  cfg.kind = ChannelConfig::Kind::Trace;
  cfg.trace = load_trace(f.path);
  DelayChannel ch(cfg, 0);
  CHECK_FALSE(ch.sample(0).dropped);
  CHECK(ch.sample(1).dropped);
  CHECK_FALSE(ch.sample(2).dropped);
  // Past the end of the trace it refuses rather than inventing data.
  CHECK_THROWS_AS(ch.sample(3), InvalidInput);
}

TEST_CASE("freshest-wins receive never rolls back and counts bookkeeping") {
  struct Pkt {
    double state_timestamp;
    double delivery_time;
    int id;
  };
  ChannelStats st;

  // Two deliveries out of order: the fresher one (by sender timestamp) wins.
  std::vector<Pkt> inbox = {{0.0100, 0.0114, 1}, {0.0097, 0.0113, 2}};
  auto got = receive_freshest(inbox, 0.0114, 0.8e-3, st);
  REQUIRE(got.has_value());
  CHECK(got->id == 1);
  CHECK(inbox.empty());
  CHECK(st.superseded == 1);
  // Ages are 1.4 ms and 1.7 ms, both beyond the 0.8 ms bound.
  CHECK(st.late == 2);

  // A packet younger than the deadline is not counted late.
  ChannelStats st2;
  std::vector<Pkt> inbox2 = {{0.0111, 0.0114, 3}};
  auto got2 = receive_freshest(inbox2, 0.0114, 0.8e-3, st2);
  REQUIRE(got2.has_value());
  CHECK(got2->id == 3);
  CHECK(st2.late == 0);
  CHECK(st2.superseded == 0);

  // Empty inbox yields nothing.
  std::vector<Pkt> empty;
  CHECK_FALSE(receive_freshest(empty, 1.0, 0.8e-3, st2).has_value());
}

TEST_CASE("stats conservation identity") {
  ChannelStats st;
  st.sent = 10;
  st.delivered = 6;
  st.dropped = 3;
  st.in_flight = 1;
  CHECK(st.conserved());
  st.in_flight = 0;
  CHECK_FALSE(st.conserved());
}

TEST_CASE("config descriptions are stable CSV-safe labels") {
  CHECK(ChannelConfig::constant(0.01).describe() == "constant:0.01");
  const std::string d = ChannelConfig::preset("smart_factory").describe();
  CHECK(d.find(',') == std::string::npos);
  CHECK_THROWS_AS(ChannelConfig::preset("underwater"), ConfigError);
}
