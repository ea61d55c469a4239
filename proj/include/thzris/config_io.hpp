#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "thzris/config.hpp"

namespace thzris {

// Text format, one `key = value` per line, '#' starts a comment:
//
//   schema_version = 1
//   num_aps = 3
//   p_ap_max = 1, 1, 1          # per-node lists are comma separated
//   ris_pos = 5,3,6; 8,3,6      # points separated by ';'
//   ris_mode = active           # or passive
//
// Keys are the SystemConfig field names. A few derived keys are accepted as
// well: nt and m (factored into the UPA grid), p_ap_max_dbm and
// p_ris_max_dbm (applied to every node).

// Throws std::invalid_argument on unknown keys or malformed values.
void set_config_value(SystemConfig &config, const std::string &key, const std::string &value);

// Applies every line of `in` on top of `base`, then broadcasts per-node lists
// and validates. Errors carry the line number.
SystemConfig parse_config(std::istream &in, SystemConfig base);
// Same as parse_config; std::runtime_error if the file cannot be read.
SystemConfig load_config_file(const std::string &path, SystemConfig base);

// Round-trips through parse_config.
std::string dump_config(const SystemConfig &config);

// Canonical key order used by dump_config.
const std::vector<std::string> &config_keys();

// Shortest decimal that parses back to the same double (locale-free).
std::string format_double(double value);
double parse_double(const std::string &text);

} // namespace thzris
