#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "dentocc/error.hpp"

namespace dentocc {

/// Exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitIo = 2, kExitNumeric = 3 };

class ConfigError : public Error {
public:
    using Error::Error;
};

/// Flat `key = value` config text to `--key=value` arguments. Blank lines and
/// lines starting with '#' are skipped.
std::vector<std::string> config_to_args(const std::string& text);

/// "1-16", "3", "1,2,30-32" -> sorted unique class indices.
std::vector<int> parse_class_list(const std::string& text);

/// Runs one subcommand: args exclude the program name, e.g. {"synth", "--out", "d"}.
/// A `--config FILE` option is expanded in place so later flags override it.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dentocc
