#pragma once

#include <string>
#include <vector>

#include "sfdnn/config.hpp"
#include "sfdnn/error.hpp"

namespace sfdnn::cli {

inline const std::vector<std::string> kSubcommands = {"simulate", "fit",  "predict",  "tune",
                                                      "weights",  "moran", "mc-bench", "plotdata"};

/// Runs one subcommand; every artifact goes under config.out_dir. Throws sfdnn::Error.
void run(const std::string& subcommand, const RunConfig& config);

/// {"code", "message", "context"} on one line.
std::string error_json(const std::string& code, const std::string& message, const std::string& context);

/// Parses argv (subcommand plus --config/--seed/--out-dir/--jobs/--kind/--log-transform),
/// runs it and returns the exit status. Errors are reported as JSON on `err`.
int main_entry(int argc, char** argv);

}  // namespace sfdnn::cli
