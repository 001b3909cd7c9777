#include "acctune/ga.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>

#include "acctune/errors.hpp"

namespace acctune {

void validate_params(const GAParams& params) {
  if (params.population < 2) throw ConfigError("population must be at least 2");
  if (params.generations < 1) throw ConfigError("generations must be at least 1");
  if (params.crossover_rate < 0.0 || params.crossover_rate > 1.0) {
    throw ConfigError("crossover_rate must be in [0, 1]");
  }
  if (params.mutation_rate < 0.0 || params.mutation_rate > 1.0) {
    throw ConfigError("mutation_rate must be in [0, 1]");
  }
  if (params.elite_count < 1) throw ConfigError("elite_count must be at least 1");
  if (params.elite_count >= params.population) {
    throw ConfigError("elite_count must be smaller than the population");
  }
}

double fitness_from_time(double t) {
  if (!(t > 0.0)) throw NonPositiveTime("fitness needs a positive time, got " + std::to_string(t));
  return std::pow(t, -0.5);
}

std::vector<Genome> init_population(std::size_t a, const GAParams& params, Rng& rng) {
  if (a < 1) throw ConfigError("gene length must be at least 1");
  std::vector<Genome> out;
  out.reserve(params.population);
  for (int m = 0; m < params.population; ++m) {
    Genome g = Genome::zeros(a);
    for (std::size_t k = 0; k < a; ++k) g.set(k, rng.bit());
    out.push_back(std::move(g));
  }
  return out;
}

void assign_fitness(std::vector<Individual>& population) {
  double min_measured = std::numeric_limits<double>::infinity();
  for (auto& ind : population) {
    if (ind.status == IndividualStatus::Measured) {
      ind.fitness = fitness_from_time(ind.time_s);
      min_measured = std::min(min_measured, ind.fitness);
    }
  }
  const double penalty = std::isinf(min_measured) ? 0.0 : 1e-3 * min_measured;
  for (auto& ind : population) {
    if (ind.status != IndividualStatus::Measured) ind.fitness = penalty;
  }
}

std::vector<Genome> roulette_select(const std::vector<Individual>& population, std::size_t count,
                                    Rng& rng) {
  double total = 0.0;
  for (const auto& ind : population) total += ind.fitness;
  if (!(total > 0.0)) {
    throw ZeroTotalFitness("every individual has zero selection weight; the run cannot proceed");
  }
  std::vector<Genome> out;
  out.reserve(count);
  for (std::size_t n = 0; n < count; ++n) {
    const double u = rng.real01() * total;
    double cum = 0.0;
    std::size_t pick = population.size() - 1;  // guards against rounding at the top edge
    for (std::size_t i = 0; i < population.size(); ++i) {
      cum += population[i].fitness;
      if (u < cum) {
        pick = i;
        break;
      }
    }
    out.push_back(population[pick].genome);
  }
  return out;
}

Genome mutate(const Genome& g, double pm, Rng& rng) {
  if (pm < 0.0 || pm > 1.0) throw ConfigError("mutation rate must be in [0, 1]");
  Genome out = g;
  for (std::size_t k = 0; k < out.size(); ++k) {
    if (rng.real01() < pm) out.flip(k);
  }
  return out;
}

std::pair<Genome, Genome> crossover_at(const Genome& p1, const Genome& p2, std::size_t k) {
  if (p1.size() != p2.size()) {
    throw GenomeLengthMismatch("crossover parents differ in length: " +
                               std::to_string(p1.size()) + " vs " + std::to_string(p2.size()));
  }
  if (k < 1 || k >= p1.size()) {
    throw Error("crossover cut point " + std::to_string(k) + " outside [1, " +
                std::to_string(p1.size() == 0 ? 0 : p1.size() - 1) + "]");
  }
  Genome c1 = p1;
  Genome c2 = p2;
  for (std::size_t i = k; i < p1.size(); ++i) {
    c1.set(i, p2.test(i));
    c2.set(i, p1.test(i));
  }
  return {std::move(c1), std::move(c2)};
}

std::pair<Genome, Genome> one_point_crossover(const Genome& p1, const Genome& p2, Rng& rng) {
  if (p1.size() != p2.size()) {
    throw GenomeLengthMismatch("crossover parents differ in length: " +
                               std::to_string(p1.size()) + " vs " + std::to_string(p2.size()));
  }
  if (p1.size() < 2) throw GenomeLengthMismatch("one-point crossover needs at least 2 genes");
  const std::size_t k = 1 + rng.index(p1.size() - 1);
  return crossover_at(p1, p2, k);
}

namespace {

// Highest fitness first; ties to the lexicographically smaller genome.
std::vector<std::size_t> rank_indices(const std::vector<Individual>& population) {
  std::vector<std::size_t> idx(population.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) {
    if (population[x].fitness != population[y].fitness) {
      return population[x].fitness > population[y].fitness;
    }
    return population[x].genome < population[y].genome;
  });
  return idx;
}

}  // namespace

std::vector<Individual> breed(const std::vector<Individual>& population, const GAParams& params,
                              Rng& rng) {
  validate_params(params);
  if (population.size() != static_cast<std::size_t>(params.population)) {
    throw ConfigError("population size " + std::to_string(population.size()) +
                      " does not match params.population " + std::to_string(params.population));
  }

  std::vector<Individual> next;
  next.reserve(population.size());
  const auto ranked = rank_indices(population);
  for (int e = 0; e < params.elite_count; ++e) next.push_back(population[ranked[e]]);

  const std::size_t offspring = population.size() - static_cast<std::size_t>(params.elite_count);
  const auto parents = roulette_select(population, offspring, rng);
  const std::size_t a = parents.empty() ? 0 : parents[0].size();

  auto emit = [&](Genome child) {
    Individual ind;
    ind.genome = mutate(child, params.mutation_rate, rng);
    next.push_back(std::move(ind));
  };

  for (std::size_t p = 0; p + 1 < parents.size(); p += 2) {
    const bool cross = rng.real01() < params.crossover_rate && a >= 2;
    if (cross) {
      auto [c1, c2] = one_point_crossover(parents[p], parents[p + 1], rng);
      emit(std::move(c1));
      emit(std::move(c2));
    } else {
      emit(parents[p]);
      emit(parents[p + 1]);
    }
  }
  if (parents.size() % 2 == 1) emit(parents.back());

  return next;
}

bool RunningBest::update(double t, const Genome& g) {
  if (genome.empty() || t < time_s || (t == time_s && g < genome)) {
    time_s = t;
    genome = g;
    return true;
  }
  return false;
}

namespace {

// Measure whatever is still unevaluated, fold into the running best, and
// compute this generation's stats row.
GenerationStats evaluate_and_rate(std::vector<Individual>& population, GenomeEvaluator& evaluator,
                                  int generation, RunningBest& best) {
  std::vector<std::size_t> todo;
  std::vector<Genome> genomes;
  for (std::size_t i = 0; i < population.size(); ++i) {
    if (population[i].status == IndividualStatus::Unevaluated) {
      todo.push_back(i);
      genomes.push_back(population[i].genome);
    }
  }
  const auto outcomes = evaluator.evaluate_all(genomes);
  for (std::size_t n = 0; n < todo.size(); ++n) {
    Individual& ind = population[todo[n]];
    const EvaluationOutcome& out = outcomes[n];
    switch (out.status) {
      case EvalStatus::Measured:
      case EvalStatus::Timeout:
        // a timeout scores as if it ran for the whole budget
        ind.status = IndividualStatus::Measured;
        ind.time_s = out.time_s;
        break;
      case EvalStatus::CompileError:
      case EvalStatus::RuntimeError:
        ind.status = IndividualStatus::Failed;
        break;
    }
  }
  assign_fitness(population);

  for (const auto& ind : population) {
    if (ind.status == IndividualStatus::Measured) best.update(ind.time_s, ind.genome);
  }

  GenerationStats stats;
  stats.generation = generation;
  stats.best_time_s = best.time_s;
  stats.best_genome = best.genome;
  double sum = 0.0;
  for (const auto& ind : population) sum += ind.fitness;
  stats.mean_fitness = population.empty() ? 0.0 : sum / static_cast<double>(population.size());
  const auto counters = evaluator.counters();
  stats.distinct_evals = counters.distinct;
  stats.cache_hits = counters.cache_hits;
  return stats;
}

}  // namespace

std::pair<std::vector<Individual>, GenerationStats> evolve_generation(
    const std::vector<Individual>& population, const GAParams& params, GenomeEvaluator& evaluator,
    Rng& rng, int generation, RunningBest& best) {
  std::vector<Individual> current = population;
  GenerationStats stats = evaluate_and_rate(current, evaluator, generation, best);
  return {breed(current, params, rng), stats};
}

TuningResult run_ga(const CandidateSet& cs, const GAParams& params, GenomeEvaluator& evaluator) {
  validate_params(params);
  const std::size_t a = cs.gene_length();
  if (a == 0) throw NoCandidates("candidate set is empty; nothing to tune");

  Rng rng(params.seed);

  const Genome zero = Genome::zeros(a);
  const EvaluationOutcome baseline = evaluator.evaluate(zero);
  if (baseline.status != EvalStatus::Measured || !(baseline.time_s > 0.0)) {
    throw EvaluatorUnavailable("baseline (all-zero genome) could not be measured");
  }

  TuningResult result;
  result.baseline_s = baseline.time_s;

  RunningBest best;
  best.update(baseline.time_s, zero);

  {
    GenerationStats row;
    row.generation = 0;
    row.best_time_s = best.time_s;
    row.best_genome = best.genome;
    row.mean_fitness = fitness_from_time(baseline.time_s);
    const auto counters = evaluator.counters();
    row.distinct_evals = counters.distinct;
    row.cache_hits = counters.cache_hits;
    result.generations.push_back(row);
  }

  std::vector<Individual> population;
  for (auto& g : init_population(a, params, rng)) {
    Individual ind;
    ind.genome = std::move(g);
    population.push_back(std::move(ind));
  }

  for (int g = 1; g <= params.generations; ++g) {
    GenerationStats stats = evaluate_and_rate(population, evaluator, g, best);
    result.generations.push_back(stats);
    if (g < params.generations) population = breed(population, params, rng);
  }

  result.best_genome = best.genome;
  result.best_time_s = best.time_s;
  result.best_source = render_variant(cs, best.genome);
  return result;
}

void write_generation_csv(std::ostream& out, const TuningResult& result) {
  out << "generation,best_time_s,best_speedup,best_genome,mean_fitness,distinct_evals,cache_hits\n";
  char buf[64];
  auto fmt = [&buf](double v) {
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return std::string(buf);
  };
  for (const auto& row : result.generations) {
    out << row.generation << ',' << fmt(row.best_time_s) << ','
        << fmt(result.baseline_s / row.best_time_s) << ',' << row.best_genome.to_string() << ','
        << fmt(row.mean_fitness) << ',' << row.distinct_evals << ',' << row.cache_hits << '\n';
  }
}

}  // namespace acctune
