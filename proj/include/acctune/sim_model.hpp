#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <unordered_set>
#include <vector>

#include "acctune/genome.hpp"

namespace acctune {

// Additive synthetic timing model. Offloading loop i replaces its CPU cost
// c_i with c_i / g_i plus a transfer cost d_i; pairwise terms J_ij model
// shared-transfer savings (J < 0) or conflicts (J > 0) between loops that
// are offloaded together.
struct LoopCost {
  double compute_s = 0.0;   // c_i, CPU time spent in the loop
  double speedup = 1.0;     // g_i >= 1, accelerator speedup of the loop body
  double transfer_s = 0.0;  // d_i >= 0, per-loop transfer overhead
};

struct Interaction {
  int i = 0;
  int j = 0;          // i < j after normalization
  double value = 0.0;  // added when both loops are offloaded
};

struct CostModel {
  double serial_s = 0.0;  // s, time outside any candidate loop
  std::vector<LoopCost> loops;
  std::vector<Interaction> interactions;
  std::unordered_set<Genome, Genome::Hash> fail_set;  // genomes that fail to compile

  std::size_t gene_length() const { return loops.size(); }
  // B = s + sum of c_i; the model's all-zero (CPU only) time.
  double baseline_s() const;
};

// t(genome) = s + sum_{bit=0} c_i + sum_{bit=1} (c_i / g_i + d_i)
//             + sum_{i<j, both set} J_ij
// Throws ModelGenomeMismatch on length mismatch and SimulatedCompileError
// for genomes in the fail set.
double model_time(const CostModel& model, const Genome& genome);

struct OracleResult {
  Genome genome;
  double time_s = 0.0;
};

// Brute force over all 2^a genomes, skipping the fail set. Ties go to the
// lexicographically smallest bit string. Throws GeneLengthTooLarge above
// a = 20.
OracleResult exhaustive_best(const CostModel& model);

// Parses and validates a model: c_i >= 0, g_i >= 1, d_i >= 0, s >= 0,
// normalized interaction pairs, fail entries of the right length, and
// positive times over all 2^a genomes for a <= 16 (sampled above that).
// Throws ModelError (or a subtype) on any violation.
CostModel parse_model(const std::string& json_text);
CostModel load_model(const std::filesystem::path& path);

}  // namespace acctune
