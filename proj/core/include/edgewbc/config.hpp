#pragma once

#include <string>
#include <vector>

#include "edgewbc/episode.hpp"

namespace edgewbc {

const char* to_string(EpisodeKind k);    // "balancing" / "walking"
const char* to_string(ControlScheme s);  // "la" / "pr"
EpisodeKind parse_episode_kind(const std::string& s);
ControlScheme parse_control_scheme(const std::string& s);

// Channel shorthand: "constant:SECONDS", "smart_factory", "burning_building",
// or "trace:PATH".
ChannelConfig parse_channel_spec(const std::string& spec);

struct LoadedConfig {
  RobotModel model;
  EpisodeConfig episode;
};

// JSON configuration, schema "edgewbc-config/1". Defaults come from the
// task-specific presets; unknown keys are rejected and every error names the
// offending field path. The EDGEWBC_SEED environment variable overrides the
// file's seed (explicit per-row seeds in a sweep grid still win).
EpisodeConfig episode_config_from_json_text(const std::string& text,
                                            RobotModel* model_out = nullptr);
LoadedConfig load_episode_config(const std::string& path);

struct SweepItem {
  std::string label;
  EpisodeConfig config;
};

struct SweepGrid {
  RobotModel model;
  std::vector<SweepItem> items;
};

// Grid file: {"schema": ..., "model"?: path, "base": {episode fields},
// "grid": [{"label"?: ..., overriding episode fields...}, ...]}. Each item is
// deep-merged onto the base before parsing.
SweepGrid load_sweep_grid(const std::string& path);

}  // namespace edgewbc
