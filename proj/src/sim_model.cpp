#include "acctune/sim_model.hpp"

#include <cstdint>
#include <fstream>
#include <random>
#include <sstream>

#include "json.hpp"

#include "acctune/errors.hpp"

namespace acctune {

using nlohmann::json;

double CostModel::baseline_s() const {
  double b = serial_s;
  for (const auto& l : loops) b += l.compute_s;
  return b;
}

double model_time(const CostModel& model, const Genome& genome) {
  if (genome.size() != model.loops.size()) {
    throw ModelGenomeMismatch("genome length " + std::to_string(genome.size()) +
                              " does not match model loop count " +
                              std::to_string(model.loops.size()));
  }
  if (model.fail_set.count(genome) != 0) {
    throw SimulatedCompileError("genome " + genome.to_string() +
                                " is in the model's fail set");
  }
  double t = model.serial_s;
  for (std::size_t i = 0; i < model.loops.size(); ++i) {
    const LoopCost& l = model.loops[i];
    t += genome.test(i) ? l.compute_s / l.speedup + l.transfer_s : l.compute_s;
  }
  for (const auto& inter : model.interactions) {
    if (genome.test(inter.i) && genome.test(inter.j)) t += inter.value;
  }
  return t;
}

namespace {

Genome genome_of_mask(std::uint32_t mask, std::size_t a) {
  std::vector<std::uint8_t> bits(a);
  for (std::size_t k = 0; k < a; ++k) bits[k] = (mask >> k) & 1u;
  return Genome(std::move(bits));
}

// Same formula as model_time but over a mask, without the fail-set check.
double mask_time(const CostModel& model, std::uint32_t mask) {
  double t = model.serial_s;
  for (std::size_t i = 0; i < model.loops.size(); ++i) {
    const LoopCost& l = model.loops[i];
    t += (mask >> i) & 1u ? l.compute_s / l.speedup + l.transfer_s : l.compute_s;
  }
  for (const auto& inter : model.interactions) {
    if (((mask >> inter.i) & 1u) && ((mask >> inter.j) & 1u)) t += inter.value;
  }
  return t;
}

// Bit-string lexicographic order: position 0 is the most significant digit.
bool lex_less(std::uint32_t x, std::uint32_t y, std::size_t a) {
  for (std::size_t k = 0; k < a; ++k) {
    const unsigned bx = (x >> k) & 1u;
    const unsigned by = (y >> k) & 1u;
    if (bx != by) return bx < by;
  }
  return false;
}

}  // namespace

OracleResult exhaustive_best(const CostModel& model) {
  const std::size_t a = model.loops.size();
  if (a > 20) {
    throw GeneLengthTooLarge("exhaustive search over " + std::to_string(a) +
                             " genes is not enumerable (limit 20)");
  }
  const std::uint64_t total = 1ull << a;
  bool found = false;
  std::uint32_t best_mask = 0;
  double best_time = 0.0;
  for (std::uint64_t m = 0; m < total; ++m) {
    const auto mask = static_cast<std::uint32_t>(m);
    if (!model.fail_set.empty() && model.fail_set.count(genome_of_mask(mask, a)) != 0) continue;
    const double t = mask_time(model, mask);
    if (!found || t < best_time || (t == best_time && lex_less(mask, best_mask, a))) {
      found = true;
      best_mask = mask;
      best_time = t;
    }
  }
  if (!found) throw ModelError("every genome is in the model's fail set");
  return {genome_of_mask(best_mask, a), best_time};
}

namespace {

double require_number(const json& obj, const char* key) {
  if (!obj.contains(key) || !obj[key].is_number()) {
    throw ModelError(std::string("model: missing or non-numeric '") + key + "'");
  }
  return obj[key].get<double>();
}

// model_time without the fail-set check; fail genomes never return a time,
// but the validator still wants every possible sum positive.
double raw_time(const CostModel& model, const Genome& g) {
  double t = model.serial_s;
  for (std::size_t i = 0; i < model.loops.size(); ++i) {
    const LoopCost& l = model.loops[i];
    t += g.test(i) ? l.compute_s / l.speedup + l.transfer_s : l.compute_s;
  }
  for (const auto& inter : model.interactions) {
    if (g.test(inter.i) && g.test(inter.j)) t += inter.value;
  }
  return t;
}

// All-genome positivity check, exhaustive up to 16 genes, sampled above.
void check_positive_times(const CostModel& model) {
  const std::size_t a = model.loops.size();
  auto check = [&](const Genome& g) {
    if (raw_time(model, g) <= 0.0) {
      throw ModelError("model: genome " + g.to_string() + " has non-positive time");
    }
  };
  if (a <= 16) {
    for (std::uint64_t m = 0; m < (1ull << a); ++m) {
      check(genome_of_mask(static_cast<std::uint32_t>(m), a));
    }
    return;
  }
  check(Genome::zeros(a));
  check(Genome::ones(a));
  for (std::size_t k = 0; k < a; ++k) {
    Genome alone = Genome::zeros(a);
    alone.set(k, true);
    check(alone);  // each loop by itself
    Genome but_one = Genome::ones(a);
    but_one.set(k, false);
    check(but_one);  // everything except one loop
  }
  std::mt19937_64 rng(0x5eed);
  for (int n = 0; n < 4096; ++n) {
    Genome g = Genome::zeros(a);
    for (std::size_t k = 0; k < a; ++k) g.set(k, (rng() & 1u) != 0);
    check(g);
  }
}

}  // namespace

CostModel parse_model(const std::string& json_text) {
  json root = json::parse(json_text, nullptr, false);
  if (root.is_discarded() || !root.is_object()) throw ModelError("model: not a JSON object");

  CostModel model;
  model.serial_s = require_number(root, "serial_s");
  if (model.serial_s < 0.0) throw ModelError("model: serial_s must be >= 0");

  if (!root.contains("loops") || !root["loops"].is_array()) {
    throw ModelError("model: missing 'loops' array");
  }
  for (const auto& entry : root["loops"]) {
    if (!entry.is_object()) throw ModelError("model: loop entries must be objects");
    LoopCost l;
    l.compute_s = require_number(entry, "compute_s");
    l.speedup = require_number(entry, "speedup");
    l.transfer_s = require_number(entry, "transfer_s");
    if (l.compute_s < 0.0) throw ModelError("model: compute_s must be >= 0");
    if (l.speedup < 1.0) throw ModelError("model: speedup must be >= 1");
    if (l.transfer_s < 0.0) throw ModelError("model: transfer_s must be >= 0");
    model.loops.push_back(l);
  }
  const auto a = static_cast<int>(model.loops.size());

  if (root.contains("interactions")) {
    if (!root["interactions"].is_array()) throw ModelError("model: 'interactions' must be an array");
    for (const auto& entry : root["interactions"]) {
      if (!entry.is_array() || entry.size() != 3 || !entry[0].is_number_integer() ||
          !entry[1].is_number_integer() || !entry[2].is_number()) {
        throw ModelError("model: interactions must be [i, j, value] triples");
      }
      Interaction inter;
      inter.i = entry[0].get<int>();
      inter.j = entry[1].get<int>();
      inter.value = entry[2].get<double>();
      if (inter.i > inter.j) std::swap(inter.i, inter.j);
      if (inter.i < 0 || inter.j >= a || inter.i == inter.j) {
        throw ModelError("model: interaction pair (" + std::to_string(inter.i) + ", " +
                         std::to_string(inter.j) + ") out of range");
      }
      for (const auto& seen : model.interactions) {
        if (seen.i == inter.i && seen.j == inter.j) {
          throw ModelError("model: duplicate interaction pair (" + std::to_string(inter.i) +
                           ", " + std::to_string(inter.j) + ")");
        }
      }
      model.interactions.push_back(inter);
    }
  }

  if (root.contains("fail")) {
    if (!root["fail"].is_array()) throw ModelError("model: 'fail' must be an array");
    for (const auto& entry : root["fail"]) {
      if (!entry.is_string()) throw ModelError("model: fail entries must be bit strings");
      const auto s = entry.get<std::string>();
      if (static_cast<int>(s.size()) != a) {
        throw ModelError("model: fail entry '" + s + "' does not have " + std::to_string(a) +
                         " bits");
      }
      Genome g;
      try {
        g = Genome::from_string(s);
      } catch (const Error&) {
        throw ModelError("model: fail entry '" + s + "' is not a bit string");
      }
      model.fail_set.insert(g);
    }
  }

  check_positive_times(model);
  return model;
}

CostModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelError("model: cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_model(buf.str());
}

}  // namespace acctune
