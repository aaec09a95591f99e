#ifndef USGAN_CONFIG_HPP
#define USGAN_CONFIG_HPP

#include <filesystem>
#include <string>
#include <vector>

#include "usgan/trainer.hpp"

namespace usgan {

// Keys accepted in the flat `key = value` config file; they match the
// training-config field names (loss weights flattened to their own names).
const std::vector<std::string>& training_config_keys();

// Applies one key/value pair; unknown keys raise a DataError listing the
// valid keys.
void apply_config_entry(TrainingConfig& cfg, const std::string& key,
                        const std::string& value);

// Parses a `key = value` file ('#' comments, blank lines allowed) on top of
// the given defaults.
TrainingConfig load_training_config(const std::filesystem::path& path,
                                    TrainingConfig base = {});

}  // namespace usgan

#endif
