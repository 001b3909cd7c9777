#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "acctune/source_model.hpp"

namespace acctune {

// Why the compiler rejected a directive-annotated loop. Derived from the
// diagnostic text by pattern rules; reporting only, never part of the
// accept/reject decision itself.
enum class RejectClass { ExternalCall, NestedOverlap, EarlyExit, DataDependency, Other };

std::string_view to_string(RejectClass c);
std::optional<RejectClass> reject_class_from_string(std::string_view s);

struct ClassifierRule {
  std::string pattern;  // case-insensitive ECMAScript regex over the diagnostic
  RejectClass cls = RejectClass::Other;
};

// Defaults target PGI/NVHPC-style diagnostics and the bundled mock compiler.
std::vector<ClassifierRule> default_classifier_rules();

// First matching rule wins; no match falls back to Other.
RejectClass classify_diagnostic(const std::string& diagnostic,
                                const std::vector<ClassifierRule>& rules);

enum class ProbeVerdict { Parallelizable, Rejected };

struct ProbeResult {
  int loop_id = 0;
  ProbeVerdict verdict = ProbeVerdict::Rejected;
  RejectClass reject_class = RejectClass::Other;  // meaningful iff Rejected
  std::string compiler_message;
  bool timed_out = false;
};

// Compile command template; `{src}` and `{out}` are replaced with quoted
// paths. Success means exit status 0.
struct CompilerDriver {
  std::string compile_cmd;
  double timeout_s = 120.0;
};

struct CompileOutcome {
  bool ok = false;
  bool timed_out = false;
  std::string log;
  double wall_seconds = 0.0;
};

// Compiles src -> out with stdout/stderr captured into log_path. Throws
// ToolchainMissing when the command itself cannot be found.
CompileOutcome run_compile(const CompilerDriver& driver, const std::filesystem::path& src,
                           const std::filesystem::path& out, const std::filesystem::path& log_path);

struct ProbeOptions {
  std::filesystem::path workdir;  // probe artifacts live in workdir/probe/loop_<id>/
  int jobs = 1;
  std::vector<ClassifierRule> rules = default_classifier_rules();
  std::filesystem::path cache_file;   // optional: skip probes cached here
  std::filesystem::path report_file;  // optional: JSON-lines probe report
};

// Compiles the variant with the directive on exactly one loop and classifies
// the outcome. The variant source and compiler log are kept under workdir.
ProbeResult probe_loop(const SourceUnit& unit, const std::vector<LoopSite>& loops, int loop_id,
                       const CompilerDriver& driver, const ProbeOptions& options);

// Probes every loop in `loops` (cached probes are reused), writes the report
// when configured, and returns the candidate set over the accepted loops in
// document order. `report_out`, when given, receives one ProbeResult per
// loop even if the function then throws NoCandidates.
CandidateSet build_candidate_set(const SourceUnit& unit, const std::vector<LoopSite>& loops,
                                 const CompilerDriver& driver, const ProbeOptions& options,
                                 std::vector<ProbeResult>* report_out = nullptr);

// One JSON object per loop: {id, line, verdict, reject_class, message, timed_out}.
void write_probe_report(const std::filesystem::path& path, const SourceUnit& unit,
                        const std::vector<LoopSite>& loops,
                        const std::vector<ProbeResult>& results);

// FNV-1a, used for cache keys.
std::uint64_t fnv1a64(std::string_view data);

}  // namespace acctune
