#pragma once

#include <map>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "ntnpred/harness.hpp"
#include "ntnpred/predictor.hpp"

namespace ntnpred {

// TOML subset: [section] and [section.sub] headers, key = value lines, '#'
// comments. Values are double-quoted strings, true/false, numbers, or flat
// arrays of numbers.

using ConfigValue = std::variant<bool, double, std::string, std::vector<double>>;

struct ConfigEntry {
    ConfigValue value;
    int line = 0;
};

/// Keys are full paths such as "train.lr_schedule.max_lr".
struct ConfigDoc {
    std::string source;
    std::map<std::string, ConfigEntry> entries;
};

/// Throws ConfigError with "<source>:<line>" on malformed input or a key
/// defined twice.
ConfigDoc parse_config(const std::string& text, const std::string& source = "<config>");
ConfigDoc load_config(const std::filesystem::path& path);

/// Start from the defaults and apply the [train] / [train.lr_schedule]
/// entries. Any other key is rejected with its full path, as is a value of
/// the wrong type. The result is validated.
TrainConfig train_config_from(const ConfigDoc& doc);
/// Same for [scenario]; relative checkpoint paths resolve against the config
/// file's directory.
ScenarioConfig scenario_config_from(const ConfigDoc& doc);

nlohmann::json to_json(const TrainConfig& c);
nlohmann::json to_json(const ScenarioConfig& c);

/// "a:b:s" (inclusive, s > 0) or "v1,v2,...". Numbers only.
std::vector<double> parse_number_list(const std::string& text);

}  // namespace ntnpred
