#include "acctune/probe.hpp"

#include <atomic>
#include <exception>
#include <fstream>
#include <mutex>
#include <regex>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "json.hpp"

#include "acctune/errors.hpp"
#include "acctune/subprocess.hpp"

namespace acctune {

namespace fs = std::filesystem;
using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string_view to_string(RejectClass c) {
  switch (c) {
    case RejectClass::ExternalCall:
      return "external_call";
    case RejectClass::NestedOverlap:
      return "nested_overlap";
    case RejectClass::EarlyExit:
      return "early_exit";
    case RejectClass::DataDependency:
      return "data_dependency";
    case RejectClass::Other:
      break;
  }
  return "other";
}

std::optional<RejectClass> reject_class_from_string(std::string_view s) {
  if (s == "external_call") return RejectClass::ExternalCall;
  if (s == "nested_overlap") return RejectClass::NestedOverlap;
  if (s == "early_exit") return RejectClass::EarlyExit;
  if (s == "data_dependency") return RejectClass::DataDependency;
  if (s == "other") return RejectClass::Other;
  return std::nullopt;
}

std::vector<ClassifierRule> default_classifier_rules() {
  // Order matters: first match wins. Fragments follow PGI/NVHPC wording.
  return {
      {"no acc routine information|function calls are not supported|unsupported call|external routine",
       RejectClass::ExternalCall},
      {"may not be nested|nested compute region", RejectClass::NestedOverlap},
      {"branching out of|multiple exits|early exit", RejectClass::EarlyExit},
      {"loop carried dependence|data dependenc|prevents parallelization",
       RejectClass::DataDependency},
  };
}

RejectClass classify_diagnostic(const std::string& diagnostic,
                                const std::vector<ClassifierRule>& rules) {
  for (const auto& rule : rules) {
    std::regex re(rule.pattern, std::regex::ECMAScript | std::regex::icase);
    if (std::regex_search(diagnostic, re)) return rule.cls;
  }
  return RejectClass::Other;
}

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : data) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

namespace {

std::string read_whole_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) return {};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string variant_basename(const SourceUnit& unit) {
  std::string base = fs::path(unit.path).filename().string();
  if (base.empty()) base = "variant.c";
  return base;
}

const LoopSite& find_site(const std::vector<LoopSite>& loops, int loop_id) {
  for (const auto& l : loops) {
    if (l.id == loop_id) return l;
  }
  throw Error("probe: unknown loop id " + std::to_string(loop_id));
}

}  // namespace

CompileOutcome run_compile(const CompilerDriver& driver, const fs::path& src, const fs::path& out,
                           const fs::path& log_path) {
  const std::string cmd = expand_template(driver.compile_cmd, {{"src", shell_quote(src.string())},
                                                               {"out", shell_quote(out.string())}});
  std::error_code ec;
  fs::remove(log_path, ec);  // run_command appends; start each compile with a fresh log
  const CommandResult r = run_command(cmd, driver.timeout_s, log_path);
  if (r.not_found) throw ToolchainMissing("compile command not found: " + cmd);
  CompileOutcome o;
  o.timed_out = r.timed_out;
  o.ok = !r.timed_out && r.exit_code == 0;
  o.wall_seconds = r.wall_seconds;
  o.log = read_whole_file(log_path);
  return o;
}

ProbeResult probe_loop(const SourceUnit& unit, const std::vector<LoopSite>& loops, int loop_id,
                       const CompilerDriver& driver, const ProbeOptions& options) {
  find_site(loops, loop_id);  // validate the id before any filesystem work

  CandidateSet one;
  one.unit = unit;
  one.all_loops = loops;
  one.candidate_ids = {loop_id};
  Genome g = Genome::ones(1);
  const std::string text = render_variant(one, g);

  const fs::path dir = options.workdir / "probe" / ("loop_" + std::to_string(loop_id));
  fs::create_directories(dir);
  const fs::path src = dir / variant_basename(unit);
  {
    std::ofstream out(src, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) throw Error("probe: cannot write " + src.string());
  }

  const CompileOutcome outcome = run_compile(driver, src, dir / "probe.bin", dir / "compile.log");

  ProbeResult r;
  r.loop_id = loop_id;
  r.compiler_message = outcome.log;
  if (outcome.ok) {
    r.verdict = ProbeVerdict::Parallelizable;
  } else {
    r.verdict = ProbeVerdict::Rejected;
    r.timed_out = outcome.timed_out;
    r.reject_class =
        outcome.timed_out ? RejectClass::Other : classify_diagnostic(outcome.log, options.rules);
  }
  return r;
}

void write_probe_report(const fs::path& path, const SourceUnit& unit,
                        const std::vector<LoopSite>& loops,
                        const std::vector<ProbeResult>& results) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("probe: cannot write report " + path.string());
  for (const auto& r : results) {
    const LoopSite& site = find_site(loops, r.loop_id);
    ordered_json obj;
    obj["id"] = r.loop_id;
    obj["line"] = unit.lines.line_col_of(site.header_start).line;
    obj["verdict"] = r.verdict == ProbeVerdict::Parallelizable ? "parallelizable" : "rejected";
    if (r.verdict == ProbeVerdict::Rejected) {
      obj["reject_class"] = std::string(to_string(r.reject_class));
    } else {
      obj["reject_class"] = nullptr;
    }
    obj["message"] = r.compiler_message;
    obj["timed_out"] = r.timed_out;
    out << obj.dump() << "\n";
  }
}

CandidateSet build_candidate_set(const SourceUnit& unit, const std::vector<LoopSite>& loops,
                                 const CompilerDriver& driver, const ProbeOptions& options,
                                 std::vector<ProbeResult>* report_out) {
  const std::string source_hash = hex64(fnv1a64(unit.text));
  const std::string cmd_hash = hex64(fnv1a64(driver.compile_cmd));

  std::unordered_map<int, ProbeResult> cached;
  if (!options.cache_file.empty() && fs::exists(options.cache_file)) {
    std::ifstream in(options.cache_file, std::ios::binary);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      json obj = json::parse(line, nullptr, false);
      if (obj.is_discarded() || !obj.is_object()) continue;
      if (obj.value("source_hash", "") != source_hash) continue;
      if (obj.value("cmd_hash", "") != cmd_hash) continue;
      if (!obj.contains("loop_id") || !obj["loop_id"].is_number_integer()) continue;
      ProbeResult r;
      r.loop_id = obj["loop_id"].get<int>();
      r.verdict = obj.value("verdict", "") == "parallelizable" ? ProbeVerdict::Parallelizable
                                                               : ProbeVerdict::Rejected;
      auto cls = reject_class_from_string(obj.value("reject_class", "other"));
      r.reject_class = cls.value_or(RejectClass::Other);
      r.compiler_message = obj.value("message", "");
      cached[r.loop_id] = r;
    }
  }

  std::vector<ProbeResult> results(loops.size());
  std::vector<int> pending;  // indexes into `loops` that need a real probe
  for (std::size_t i = 0; i < loops.size(); ++i) {
    auto it = cached.find(loops[i].id);
    if (it != cached.end()) {
      results[i] = it->second;
    } else {
      pending.push_back(static_cast<int>(i));
    }
  }

  if (!pending.empty()) {
    const int jobs = std::max(1, options.jobs);
    std::atomic<std::size_t> next{0};
    std::mutex fail_mu;
    std::exception_ptr failure;
    auto worker = [&] {
      for (;;) {
        const std::size_t k = next.fetch_add(1);
        if (k >= pending.size()) return;
        {
          std::lock_guard<std::mutex> lock(fail_mu);
          if (failure) return;
        }
        const int idx = pending[k];
        try {
          results[idx] = probe_loop(unit, loops, loops[idx].id, driver, options);
        } catch (...) {
          std::lock_guard<std::mutex> lock(fail_mu);
          if (!failure) failure = std::current_exception();
          return;
        }
      }
    };
    if (jobs == 1 || pending.size() == 1) {
      worker();
    } else {
      std::vector<std::thread> threads;
      const int n = std::min<std::size_t>(jobs, pending.size());
      threads.reserve(n);
      for (int t = 0; t < n; ++t) threads.emplace_back(worker);
      for (auto& t : threads) t.join();
    }
    if (failure) std::rethrow_exception(failure);

    if (!options.cache_file.empty()) {
      if (options.cache_file.has_parent_path()) {
        fs::create_directories(options.cache_file.parent_path());
      }
      std::ofstream out(options.cache_file, std::ios::binary | std::ios::app);
      for (int idx : pending) {
        const ProbeResult& r = results[idx];
        if (r.timed_out) continue;  // timeouts are flaky; re-probe them next run
        ordered_json obj;
        obj["source_hash"] = source_hash;
        obj["cmd_hash"] = cmd_hash;
        obj["loop_id"] = r.loop_id;
        obj["verdict"] = r.verdict == ProbeVerdict::Parallelizable ? "parallelizable" : "rejected";
        obj["reject_class"] = std::string(to_string(r.reject_class));
        obj["message"] = r.compiler_message;
        out << obj.dump() << "\n";
      }
    }
  }

  if (!options.report_file.empty()) {
    if (options.report_file.has_parent_path()) {
      fs::create_directories(options.report_file.parent_path());
    }
    write_probe_report(options.report_file, unit, loops, results);
  }
  if (report_out) *report_out = results;

  CandidateSet cs;
  cs.unit = unit;
  cs.all_loops = loops;
  for (std::size_t i = 0; i < loops.size(); ++i) {
    if (results[i].verdict == ProbeVerdict::Parallelizable) cs.candidate_ids.push_back(loops[i].id);
  }
  if (cs.candidate_ids.empty()) {
    throw NoCandidates("probe rejected every loop; nothing to tune");
  }
  return cs;
}

}  // namespace acctune
