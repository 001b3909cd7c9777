#include "acctune/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "json.hpp"

#include "acctune/errors.hpp"
#include "acctune/evaluator.hpp"
#include "acctune/ga.hpp"
#include "acctune/probe.hpp"
#include "acctune/sim_model.hpp"
#include "acctune/source_model.hpp"

namespace fs = std::filesystem;

namespace acctune {

namespace {

std::string fmt_s(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return std::string(buf);
}

void ensure_workdir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw WorkdirUnwritable("cannot create workdir: " + dir.string());
  fs::path canary = dir / ".acctune_write_test";
  std::ofstream probe(canary);
  if (!probe) throw WorkdirUnwritable("workdir is not writable: " + dir.string());
  probe.close();
  fs::remove(canary, ec);
}

void write_text_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw WorkdirUnwritable("cannot write " + path.string());
  out << text;
  if (!out) throw WorkdirUnwritable("short write to " + path.string());
}

struct ScanOutput {
  SourceUnit unit;
  std::vector<LoopSite> loops;
};

ScanOutput scan_source(const RunConfig& cfg) {
  ScanOutput s{SourceUnit::from_file(cfg.source), {}};
  try {
    s.loops = scan_loops(s.unit);
  } catch (const ScanError& e) {
    std::string what = e.what();
    if (what.find(cfg.source.string()) == std::string::npos)
      throw ScanError(cfg.source.string() + ": " + what);
    throw;
  }
  return s;
}

bool keep_candidate(const LoopSite& loop, CandidateFilter filter) {
  return filter == CandidateFilter::All || loop.depth == 0;
}

// Sim runs have no compiler to probe with; every scanned loop that passes
// the filter is a candidate and the report records the skip.
std::vector<ProbeResult> synthesize_sim_probe(const std::vector<LoopSite>& loops) {
  std::vector<ProbeResult> results;
  results.reserve(loops.size());
  for (const auto& loop : loops) {
    ProbeResult r;
    r.loop_id = loop.id;
    r.verdict = ProbeVerdict::Parallelizable;
    r.compiler_message = "probe skipped: timings come from a sim model";
    results.push_back(r);
  }
  return results;
}

CandidateSet sim_candidate_set(const ScanOutput& s, const RunConfig& cfg,
                               std::vector<ProbeResult>* report_out) {
  auto results = synthesize_sim_probe(s.loops);
  write_probe_report(cfg.probe_report_path(), s.unit, s.loops, results);
  if (report_out) *report_out = std::move(results);
  CandidateSet cs;
  cs.unit = s.unit;
  cs.all_loops = s.loops;
  for (const auto& loop : s.loops)
    if (keep_candidate(loop, cfg.candidates)) cs.candidate_ids.push_back(loop.id);
  if (cs.candidate_ids.empty())
    throw NoCandidates("no candidate loops in " + cfg.source.string());
  return cs;
}

CandidateSet probe_candidate_set(const ScanOutput& s, const RunConfig& cfg,
                                 std::vector<ProbeResult>* report_out) {
  ProbeOptions options;
  options.workdir = cfg.workdir;
  options.jobs = cfg.jobs;
  options.cache_file = cfg.probe_cache_path();
  options.report_file = cfg.probe_report_path();
  CandidateSet cs = build_candidate_set(s.unit, s.loops, CompilerDriver{cfg.toolchain->compile_cmd, cfg.toolchain->timeout_s},
                                        options, report_out);
  if (cfg.candidates == CandidateFilter::Outermost) {
    std::vector<int> kept;
    for (int id : cs.candidate_ids)
      if (cs.all_loops[static_cast<std::size_t>(id)].depth == 0) kept.push_back(id);
    cs.candidate_ids = std::move(kept);
    if (cs.candidate_ids.empty())
      throw NoCandidates("no outermost candidate loops in " + cfg.source.string());
  }
  return cs;
}

void print_inventory(std::ostream& out, const RunConfig& cfg, const ScanOutput& s,
                     const std::vector<ProbeResult>& results, const std::vector<int>& candidate_ids) {
  out << "source: " << cfg.source.string() << "\n";
  out << "loops: " << s.loops.size() << "\n";
  for (const auto& loop : s.loops) {
    auto lc = s.unit.lines.line_col_of(loop.header_start);
    out << "  loop " << loop.id << ": line " << lc.line << ", depth " << loop.depth;
    const ProbeResult* r = nullptr;
    for (const auto& cand : results)
      if (cand.loop_id == loop.id) { r = &cand; break; }
    bool selected = std::find(candidate_ids.begin(), candidate_ids.end(), loop.id) != candidate_ids.end();
    if (r && r->verdict == ProbeVerdict::Parallelizable) {
      out << (selected ? " -> candidate" : " -> parallelizable, filtered out");
    } else if (r) {
      std::string msg = r->compiler_message;
      auto nl = msg.find('\n');
      if (nl != std::string::npos) msg.resize(nl);
      out << " -> rejected [" << to_string(r->reject_class) << "]";
      if (!msg.empty()) out << " " << msg;
    } else {
      out << " -> not probed";
    }
    out << "\n";
  }
  out << "candidates: " << candidate_ids.size() << " (filter: " << to_string(cfg.candidates) << ")\n";
  out << "gene length: " << candidate_ids.size() << "\n";
  out << "probe report: " << cfg.probe_report_path().string() << "\n";
}

std::string render_summary_json(const TuningResult& result, const EvalCounters& counters) {
  nlohmann::ordered_json j;
  j["baseline_s"] = result.baseline_s;
  j["best_s"] = result.best_time_s;
  j["speedup"] = result.baseline_s / result.best_time_s;
  j["best_genome"] = result.best_genome.to_string();
  j["distinct_evals"] = counters.distinct;
  j["elapsed_s"] = counters.elapsed_s;
  return j.dump(2) + "\n";
}

}  // namespace

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ZeroTotalFitness*>(&e)) return 5;
  if (dynamic_cast<const ToolchainMissing*>(&e)) return 4;
  if (dynamic_cast<const EvaluatorUnavailable*>(&e)) return 4;
  if (dynamic_cast<const ScanError*>(&e)) return 3;
  if (dynamic_cast<const NoCandidates*>(&e)) return 3;
  if (dynamic_cast<const ConfigError*>(&e)) return 2;
  if (dynamic_cast<const ModelError*>(&e)) return 2;
  if (dynamic_cast<const MissingLog*>(&e)) return 2;
  if (dynamic_cast<const WorkdirUnwritable*>(&e)) return 2;
  return 1;
}

int cmd_analyze(const fs::path& config_path, std::ostream& out, std::ostream& err) {
  try {
    RunConfig cfg = load_config(config_path);
    ensure_workdir(cfg.workdir);
    write_text_file(cfg.resolved_config_path(), render_resolved_config(cfg));
    ScanOutput s = scan_source(cfg);

    std::vector<ProbeResult> results;
    std::vector<int> candidate_ids;
    try {
      CandidateSet cs = cfg.sim_model ? sim_candidate_set(s, cfg, &results)
                                      : probe_candidate_set(s, cfg, &results);
      candidate_ids = cs.candidate_ids;
    } catch (const NoCandidates&) {
      // An all-rejected source is a legitimate answer, not a failure.
    }
    print_inventory(out, cfg, s, results, candidate_ids);
    if (candidate_ids.empty()) out << "nothing to tune: every loop was rejected or filtered out\n";
    return 0;
  } catch (const std::exception& e) {
    err << "analyze: " << e.what() << "\n";
    return exit_code_for(e);
  }
}

int cmd_tune(const fs::path& config_path, const TuneOptions& options, std::ostream& out,
             std::ostream& err) {
  try {
    RunConfig cfg = load_config(config_path);
    if (options.seed) cfg.ga.seed = *options.seed;
    if (options.sim_model) {
      cfg.sim_model = fs::absolute(*options.sim_model).lexically_normal();
      cfg.toolchain.reset();
    }

    ensure_workdir(cfg.workdir);
    write_text_file(cfg.resolved_config_path(), render_resolved_config(cfg));

    ScanOutput s = scan_source(cfg);
    std::unique_ptr<EvalBackend> backend;
    CandidateSet cs;
    if (cfg.sim_model) {
      cs = sim_candidate_set(s, cfg, nullptr);
      CostModel model = load_model(*cfg.sim_model);
      if (model.gene_length() != cs.gene_length())
        throw ConfigError("sim model has " + std::to_string(model.gene_length()) +
                          " loops but the source has " + std::to_string(cs.gene_length()) +
                          " candidates");
      backend = std::make_unique<SimBackend>(std::move(model));
    } else {
      cs = probe_candidate_set(s, cfg, nullptr);
      backend = std::make_unique<ToolchainBackend>(cs, *cfg.toolchain, cfg.workdir);
    }

    out << "candidates: " << cs.gene_length() << " of " << cs.all_loops.size() << " loops\n";

    Evaluator evaluator{std::move(backend), cfg.jobs, cfg.eval_cache_path()};
    TuningResult result = run_ga(cs, cfg.ga, evaluator);
    EvalCounters counters = evaluator.counters();

    {
      std::ofstream csv(cfg.generations_csv_path(), std::ios::binary);
      if (!csv) throw WorkdirUnwritable("cannot write " + cfg.generations_csv_path().string());
      write_generation_csv(csv, result);
    }
    write_text_file(cfg.summary_path(), render_summary_json(result, counters));
    write_text_file(cfg.best_source_path(), result.best_source);

    out << "baseline: " << fmt_s(result.baseline_s) << " s\n";
    out << "best:     " << fmt_s(result.best_time_s) << " s (speedup "
        << fmt_s(result.baseline_s / result.best_time_s) << ")\n";
    out << "genome:   " << result.best_genome.to_string() << "\n";
    out << "evaluations: " << counters.distinct << " distinct, " << counters.cache_hits
        << " cache hits, " << counters.backend_calls << " backend calls\n";
    out << "workdir: " << cfg.workdir.string() << "\n";
    return 0;
  } catch (const std::exception& e) {
    err << "tune: " << e.what() << "\n";
    return exit_code_for(e);
  }
}

namespace {

struct CsvRow {
  int generation = 0;
  double best_time_s = 0.0;
  double best_speedup = 0.0;
  std::string best_genome;
  std::string mean_fitness;
  std::string distinct_evals;
  std::string cache_hits;
};

bool parse_csv_row(const std::string& line, CsvRow& row) {
  std::vector<std::string> fields;
  std::string::size_type start = 0;
  while (true) {
    auto comma = line.find(',', start);
    fields.push_back(line.substr(start, comma == std::string::npos ? comma : comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (fields.size() != 7) return false;
  try {
    std::size_t used = 0;
    row.generation = std::stoi(fields[0], &used);
    if (used != fields[0].size()) return false;
    row.best_time_s = std::stod(fields[1], &used);
    if (used != fields[1].size()) return false;
    row.best_speedup = std::stod(fields[2], &used);
    if (used != fields[2].size()) return false;
  } catch (const std::exception&) {
    return false;
  }
  row.best_genome = fields[3];
  if (row.best_genome.empty() ||
      row.best_genome.find_first_not_of("01") != std::string::npos)
    return false;
  row.mean_fitness = fields[4];
  row.distinct_evals = fields[5];
  row.cache_hits = fields[6];
  return true;
}

}  // namespace

int cmd_report(const fs::path& workdir, std::ostream& out, std::ostream& err) {
  try {
    fs::path csv_path = workdir / "generations.csv";
    fs::path summary_path = workdir / "summary.json";
    std::ifstream csv(csv_path);
    if (!csv) throw MissingLog("no generations.csv in " + workdir.string());

    std::string header;
    if (!std::getline(csv, header) ||
        header != "generation,best_time_s,best_speedup,best_genome,mean_fitness,distinct_evals,cache_hits") {
      err << "report: corrupted log: unexpected header in " << csv_path.string() << "\n";
      return 1;
    }
    std::vector<CsvRow> rows;
    std::string line;
    while (std::getline(csv, line)) {
      if (line.empty()) continue;
      CsvRow row;
      if (!parse_csv_row(line, row)) {
        err << "report: corrupted log: bad row '" << line << "'\n";
        return 1;
      }
      rows.push_back(std::move(row));
    }
    if (rows.empty()) {
      err << "report: corrupted log: no generation rows in " << csv_path.string() << "\n";
      return 1;
    }

    out << "generation  best_time_s   speedup     genome\n";
    char buf[128];
    for (const auto& row : rows) {
      std::snprintf(buf, sizeof(buf), "%10d  %-12.9g  %-10.6g  %s\n", row.generation,
                    row.best_time_s, row.best_speedup, row.best_genome.c_str());
      out << buf;
    }

    for (std::size_t i = 1; i < rows.size(); ++i) {
      if (rows[i].best_time_s > rows[i - 1].best_time_s) {
        err << "report: corrupted log: best time regresses at generation " << rows[i].generation
            << " (" << rows[i - 1].best_time_s << " -> " << rows[i].best_time_s << ")\n";
        return 1;
      }
    }

    std::ifstream summary_in(summary_path);
    if (!summary_in) throw MissingLog("no summary.json in " + workdir.string());
    nlohmann::json summary;
    try {
      summary = nlohmann::json::parse(summary_in);
    } catch (const nlohmann::json::exception& e) {
      err << "report: corrupted log: " << summary_path.string() << ": " << e.what() << "\n";
      return 1;
    }
    if (!summary.contains("baseline_s") || !summary.contains("best_s") ||
        !summary.contains("speedup") || !summary.contains("best_genome")) {
      err << "report: corrupted log: summary.json is missing keys\n";
      return 1;
    }
    out << "baseline " << fmt_s(summary["baseline_s"].get<double>()) << " s -> best "
        << fmt_s(summary["best_s"].get<double>()) << " s, speedup "
        << fmt_s(summary["speedup"].get<double>()) << ", genome "
        << summary["best_genome"].get<std::string>() << "\n";
    return 0;
  } catch (const std::exception& e) {
    err << "report: " << e.what() << "\n";
    return exit_code_for(e);
  }
}

}  // namespace acctune
