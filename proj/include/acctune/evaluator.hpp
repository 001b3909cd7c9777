#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <condition_variable>
#include <string>
#include <vector>

#include "acctune/evaluation.hpp"
#include "acctune/sim_model.hpp"
#include "acctune/source_model.hpp"

namespace acctune {

// One backend call = one real measurement of one genome. Backends carry no
// cache; the Evaluator wraps them with memoization and concurrency.
class EvalBackend {
 public:
  virtual ~EvalBackend() = default;
  virtual EvaluationOutcome measure(const Genome& genome) = 0;
  virtual std::size_t gene_length() const = 0;
};

// Synthetic backend: times come from a CostModel. wall_cost equals the
// model time, standing in for the run the benchmark would have taken, so
// cold and resumed runs account identical elapsed totals.
class SimBackend : public EvalBackend {
 public:
  explicit SimBackend(CostModel model) : model_(std::move(model)) {}
  EvaluationOutcome measure(const Genome& genome) override;
  std::size_t gene_length() const override { return model_.gene_length(); }
  const CostModel& model() const { return model_; }

 private:
  CostModel model_;
};

struct ToolchainConfig {
  std::string compile_cmd;  // {src}, {out} placeholders
  std::string bench_cmd;    // {exe} placeholder
  std::string time_regex;   // empty: use wall-clock time of the run
  double timeout_s = 120.0;  // per compile and per benchmark run
  int repetitions = 1;       // benchmark runs per genome, median taken
};

// If a regex is configured, parse the first capture group of its first match
// as seconds (TimePatternNotFound when it never matches); otherwise return
// the wall-clock duration.
double extract_time(const std::string& output, double wall_seconds, const std::string& time_regex);

// Real backend: render the genome's variant into workdir/eval/<bits>/,
// compile it, run the benchmark, extract the time. Compile or run failures
// become CompileError/RuntimeError/Timeout outcomes; a missing compiler or
// benchmark command throws ToolchainMissing.
class ToolchainBackend : public EvalBackend {
 public:
  ToolchainBackend(CandidateSet cs, ToolchainConfig config, std::filesystem::path workdir);
  EvaluationOutcome measure(const Genome& genome) override;
  std::size_t gene_length() const override { return cs_.gene_length(); }

 private:
  CandidateSet cs_;
  ToolchainConfig config_;
  std::filesystem::path workdir_;
  std::string basename_;
};

// Memoizing front end. Each distinct genome is measured exactly once per
// run (concurrent duplicate requests wait for the first); outcomes are
// appended to a JSON-lines cache file and reloaded on resume, so resumed
// runs skip the toolchain entirely for known genomes.
class Evaluator : public GenomeEvaluator {
 public:
  explicit Evaluator(std::unique_ptr<EvalBackend> backend, int jobs = 1,
                     std::filesystem::path cache_file = {});

  EvaluationOutcome evaluate(const Genome& genome) override;
  std::vector<EvaluationOutcome> evaluate_all(const std::vector<Genome>& genomes) override;
  EvalCounters counters() const override;

  std::size_t gene_length() const { return backend_->gene_length(); }

 private:
  struct Entry {
    bool done = false;
    bool counted = false;  // encountered this run (drives distinct/elapsed)
    EvaluationOutcome outcome;
    std::exception_ptr error;
  };

  EvaluationOutcome measure_and_store(const Genome& genome, Entry& entry,
                                      std::unique_lock<std::mutex>& lock);
  void append_cache_line(const Genome& genome, const EvaluationOutcome& outcome);
  void load_cache_file();

  std::unique_ptr<EvalBackend> backend_;
  int jobs_;
  std::filesystem::path cache_file_;

  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::map<Genome, Entry> entries_;
  std::uint64_t requests_ = 0;
  std::uint64_t distinct_ = 0;
  std::uint64_t cache_hits_ = 0;
  std::uint64_t backend_calls_ = 0;
};

}  // namespace acctune
