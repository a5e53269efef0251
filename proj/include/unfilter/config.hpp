#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "unfilter/training.hpp"

namespace unfilter {

// Flat "key = value" text. '#' starts a comment; blank lines are ignored.
// Keys use the TrainConfig field names, with "loss." and "model." prefixes
// for LossWeights and GeneratorConfig (e.g. loss.tex, model.channels).
// Lists are comma separated. The optional key "profile" (paper | desk)
// selects the base values and is applied before any other key.
using KeyValues = std::vector<std::pair<std::string, std::string>>;

// Throws ConfigError naming the line for malformed input.
KeyValues parse_key_values(std::string_view text);
KeyValues read_key_values(const std::filesystem::path& file);

// Throws ConfigError for unknown keys or unparsable values.
void apply_setting(TrainConfig& cfg, const std::string& key, const std::string& value);

// Profile, then file settings, then `overrides`, then UNFILTER_SEED.
TrainConfig build_train_config(const KeyValues& settings, const KeyValues& overrides = {});

// Seed from the UNFILTER_SEED environment variable, when set.
std::optional<std::uint64_t> env_seed();

// Every effective value as key = value lines, readable by parse_key_values.
std::string to_key_values(const TrainConfig& cfg);

}  // namespace unfilter
