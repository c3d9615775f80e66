#pragma once
// Small parsing and formatting helpers shared by the library and the CLI.

#include <string>
#include <utility>
#include <vector>

namespace mbp {

/// "key = value" lines; '#' starts a comment; blank lines ignored.
std::vector<std::pair<std::string, std::string>> parse_key_values(const std::string& text);
/// Comma-separated reals, e.g. "1,-1" or "0.5, 0.5".
std::vector<double> parse_list(const std::string& text);
std::string read_file(const std::string& path);
/// printf %.17g; nan and inf are spelled out.
std::string format_double(double x);

}  // namespace mbp
