#pragma once

#include <filesystem>

#include "lamn/io.hpp"

namespace lamn::run {

/// Exit codes: 0 success / all checks pass, 1 failed check, 2 config
/// error, 3 numerical failure.
enum ExitCode { kOk = 0, kCheckFailed = 1, kConfigError = 2, kNumericalError = 3 };

/// Fills defaults, validates keys against the command's schema, and
/// returns the fully resolved config (what the manifest echoes).
io::json resolve_config(const io::json& cfg);

/// Dispatches a resolved config to its command implementation; writes the
/// manifest plus the command's artifacts into out_dir.
int dispatch(const io::json& cfg, const std::filesystem::path& out_dir);

}  // namespace lamn::run
