#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "gpo/driver.hpp"

namespace gpo {

/// Keys accepted in config files and by --set, in echo order.
const std::vector<std::string>& config_keys();

/// Assigns one key. Unknown keys and malformed values throw
/// std::invalid_argument naming the offending token.
void set_config_value(GpoConfig& config, const std::string& key, const std::string& value);

/// Plain `key = value` lines; '#' starts a comment, blank lines are ignored.
void parse_config(std::istream& in, GpoConfig& config, const std::string& source = "<config>");
GpoConfig load_config_file(const std::string& path);

/// Every key as `key=value`, one per line, in config_keys() order; parses back
/// to the same configuration.
std::string config_echo(const GpoConfig& config);

}  // namespace gpo
