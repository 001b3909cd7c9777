#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "acctune/evaluation.hpp"
#include "acctune/genome.hpp"
#include "acctune/rng.hpp"
#include "acctune/source_model.hpp"

namespace acctune {

struct GAParams {
  int population = 12;          // M
  int generations = 12;         // T
  double crossover_rate = 0.9;  // Pc
  double mutation_rate = 0.05;  // Pm
  std::uint64_t seed = 1;
  int elite_count = 1;          // individuals copied verbatim each generation
};

// ConfigError unless M >= 2, T >= 1, both rates in [0,1], 1 <= elite < M.
void validate_params(const GAParams& params);

enum class IndividualStatus { Unevaluated, Measured, Failed };

struct Individual {
  Genome genome;
  IndividualStatus status = IndividualStatus::Unevaluated;
  double time_s = 0.0;   // meaningful iff Measured
  double fitness = 0.0;  // set by assign_fitness
};

struct GenerationStats {
  int generation = 0;        // 0 is the baseline row
  double best_time_s = 0.0;  // running best over everything measured so far
  Genome best_genome;
  double mean_fitness = 0.0;  // over this generation's population
  std::uint64_t distinct_evals = 0;
  std::uint64_t cache_hits = 0;
};

struct TuningResult {
  Genome best_genome;
  double best_time_s = 0.0;
  double baseline_s = 0.0;  // all-zero genome measurement
  std::vector<GenerationStats> generations;  // T+1 rows, row 0 = baseline
  std::string best_source;  // rendered variant of best_genome
};

// t^(-1/2). Throws NonPositiveTime unless t > 0.
double fitness_from_time(double t);

// M genomes of length a, bits i.i.d. uniform; one rng bit per gene.
std::vector<Genome> init_population(std::size_t a, const GAParams& params, Rng& rng);

// Measured individuals get t^(-1/2). Failed ones get 1e-3 times the smallest
// measured fitness in the population, keeping roulette defined while pushing
// selection away from broken genomes; if nothing measured they get 0 and the
// next selection throws ZeroTotalFitness.
void assign_fitness(std::vector<Individual>& population);

// `count` draws with replacement, P(i) proportional to fitness; one
// rng.real01() per draw. Throws ZeroTotalFitness when the wheel is empty.
std::vector<Genome> roulette_select(const std::vector<Individual>& population, std::size_t count,
                                    Rng& rng);

// Each bit flips independently with probability pm; consumes one
// rng.real01() per bit regardless of pm.
Genome mutate(const Genome& g, double pm, Rng& rng);

// Children swap tails at cut point k in [1, a-1].
std::pair<Genome, Genome> crossover_at(const Genome& p1, const Genome& p2, std::size_t k);
// Draws k uniformly from [1, a-1] (one rng.index call).
std::pair<Genome, Genome> one_point_crossover(const Genome& p1, const Genome& p2, Rng& rng);

// Next population: elite_count best individuals verbatim (best = highest
// fitness, ties to the lexicographically smaller genome), then M - elite
// offspring from roulette selection, pairwise one-point crossover at rate
// Pc (odd last parent copied), and per-bit mutation at rate Pm.
// RNG order: selection draws, then per pair the Pc draw, the cut point when
// crossing, and the two children's mutation bits.
std::vector<Individual> breed(const std::vector<Individual>& population, const GAParams& params,
                              Rng& rng);

// Lowest time wins; equal times go to the lexicographically smaller genome.
struct RunningBest {
  double time_s = 0.0;
  Genome genome;

  bool update(double t, const Genome& g);
};

// One GA step over an evaluated-or-not population: measure what is still
// unevaluated, fold results into `best`, compute stats, breed the next
// population.
std::pair<std::vector<Individual>, GenerationStats> evolve_generation(
    const std::vector<Individual>& population, const GAParams& params, GenomeEvaluator& evaluator,
    Rng& rng, int generation, RunningBest& best);

// Full run: baseline measurement, T generations, best-ever genome and its
// rendered source. No breeding happens after the final evaluation, so an
// all-failed last generation still yields a result.
TuningResult run_ga(const CandidateSet& cs, const GAParams& params, GenomeEvaluator& evaluator);

// generation,best_time_s,best_speedup,best_genome,mean_fitness,distinct_evals,cache_hits
void write_generation_csv(std::ostream& out, const TuningResult& result);

}  // namespace acctune
