#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>

#include "acctune/config.hpp"

namespace acctune {

// 0 success, 2 config error, 3 scan/probe error, 4 toolchain unavailable,
// 5 zero-fitness abort, 1 anything else.
int exit_code_for(const std::exception& e);

// Scan the source, probe every loop, report the candidate set. A run where
// every loop is rejected still exits 0; the report says so.
int cmd_analyze(const std::filesystem::path& config_path, std::ostream& out, std::ostream& err);

struct TuneOptions {
  std::optional<std::uint64_t> seed;                // overrides ga.seed
  std::optional<std::filesystem::path> sim_model;   // overrides the backend
};

// Probe, run the GA, and leave generations.csv, summary.json, the best
// variant source and both caches in the workdir.
int cmd_tune(const std::filesystem::path& config_path, const TuneOptions& options,
             std::ostream& out, std::ostream& err);

// Render the per-generation table and final summary of a finished workdir,
// checking that the running best never regressed.
int cmd_report(const std::filesystem::path& workdir, std::ostream& out, std::ostream& err);

}  // namespace acctune
