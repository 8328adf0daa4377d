#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "run_config.hpp"

namespace llm3dti::cli {

const std::vector<std::string>& command_names();

// Runs one command; module errors propagate as exceptions. Returns the run
// directory.
std::filesystem::path run_command(const std::string& command, const RunConfig& cfg,
                                  std::ostream& log);

// 0 success, 2 configuration, 3 data, 4 numeric or convergence, 1 anything
// else. Prints the message to `err`.
int exit_code_for_current_exception(std::ostream& err);

}  // namespace llm3dti::cli
