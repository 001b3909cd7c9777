#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "acctune/genome.hpp"

namespace acctune {

enum class EvalStatus { Measured, CompileError, RuntimeError, Timeout };

std::string_view to_string(EvalStatus s);
std::optional<EvalStatus> eval_status_from_string(std::string_view s);

// Result of one compile+run of a genome's source variant.
struct EvaluationOutcome {
  EvalStatus status = EvalStatus::RuntimeError;
  // Measured: the benchmark time. Timeout: the configured budget, so the
  // genome keeps a small positive fitness. Unset otherwise.
  double time_s = 0.0;
  // Wall-clock cost of originally producing this outcome (compile + runs).
  // Cache hits return the stored cost; elapsed accounting counts each
  // distinct genome once.
  double wall_cost_s = 0.0;
};

struct EvalCounters {
  std::uint64_t requests = 0;      // evaluate() calls
  std::uint64_t distinct = 0;      // unique genomes seen this run
  std::uint64_t cache_hits = 0;    // requests - distinct
  std::uint64_t backend_calls = 0; // real compile+run invocations (disk-cache
                                   // hits from earlier runs don't count)
  double elapsed_s = 0.0;          // total wall cost across distinct genomes
};

// What the GA needs from an evaluator: measure genomes (deduplicating
// repeats) and report counters. evaluate_all may measure distinct unseen
// genomes concurrently but must return outcomes aligned with its input.
class GenomeEvaluator {
 public:
  virtual ~GenomeEvaluator() = default;

  virtual EvaluationOutcome evaluate(const Genome& genome) = 0;

  virtual std::vector<EvaluationOutcome> evaluate_all(const std::vector<Genome>& genomes) {
    std::vector<EvaluationOutcome> out;
    out.reserve(genomes.size());
    for (const auto& g : genomes) out.push_back(evaluate(g));
    return out;
  }

  virtual EvalCounters counters() const = 0;
};

}  // namespace acctune
