#pragma once

#include <string>
#include <string_view>

#include "drowsy/detector.hpp"

namespace drowsy {

// Flat `key = value` records whose keys are DetectorConfig field names.
// Blank lines and lines starting with '#' are ignored.

/// Throws ConfigError on an unknown key or unparsable value.
void set_config_value(DetectorConfig& config, std::string_view key, std::string_view value);

/// Applies every record in `text` on top of `base`. Does not validate.
DetectorConfig apply_config_text(std::string_view text, DetectorConfig base = {});

/// Reads and applies a config file. Throws ConfigError when unreadable.
DetectorConfig load_config_file(const std::string& path, DetectorConfig base = {});

std::string config_to_text(const DetectorConfig& config);

}  // namespace drowsy
