#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "acctune/evaluator.hpp"
#include "acctune/ga.hpp"

namespace acctune {

enum class CandidateFilter { All, Outermost };

std::string_view to_string(CandidateFilter f);

// One declarative file per run. Exactly one of {toolchain, sim_model} is
// set; every artifact lives under workdir at a fixed name so a workdir is
// self-describing.
struct RunConfig {
  std::filesystem::path source;
  std::filesystem::path workdir;
  CandidateFilter candidates = CandidateFilter::All;
  int jobs = 1;
  GAParams ga;
  std::optional<ToolchainConfig> toolchain;
  std::optional<std::filesystem::path> sim_model;

  std::filesystem::path resolved_config_path() const { return workdir / "config.resolved.json"; }
  std::filesystem::path probe_report_path() const { return workdir / "probe_report.jsonl"; }
  std::filesystem::path probe_cache_path() const { return workdir / "probe_cache.jsonl"; }
  std::filesystem::path eval_cache_path() const { return workdir / "eval_cache.jsonl"; }
  std::filesystem::path generations_csv_path() const { return workdir / "generations.csv"; }
  std::filesystem::path summary_path() const { return workdir / "summary.json"; }
  std::filesystem::path best_source_path() const;
};

// Parse and validate a config file. Relative paths resolve against the
// directory holding the file. Unknown keys are rejected so typos cannot
// silently fall back to defaults. Throws ConfigError.
RunConfig load_config(const std::filesystem::path& config_path);

// Fully resolved provenance blob, written into the workdir before any
// evaluation starts.
std::string render_resolved_config(const RunConfig& cfg);

}  // namespace acctune
