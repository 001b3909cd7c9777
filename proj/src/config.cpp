#include "acctune/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "acctune/errors.hpp"

namespace acctune {

namespace fs = std::filesystem;
using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string_view to_string(CandidateFilter f) {
  return f == CandidateFilter::All ? "all" : "outermost";
}

std::filesystem::path RunConfig::best_source_path() const {
  auto name = source.filename();
  if (name.empty()) name = "variant.c";
  return workdir / "best" / name;
}

namespace {

void reject_unknown_keys(const json& obj, const std::set<std::string>& known,
                         const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (!known.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

fs::path resolve_path(const fs::path& base, const std::string& p) {
  fs::path path(p);
  if (path.is_absolute()) return path.lexically_normal();
  return (base / path).lexically_normal();
}

std::string require_string(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw ConfigError(where + " needs a '" + key + "' entry");
  if (!obj[key].is_string() || obj[key].get<std::string>().empty()) {
    throw ConfigError("'" + std::string(key) + "' in " + where + " must be a non-empty string");
  }
  return obj[key].get<std::string>();
}

double number_or(const json& obj, const char* key, double fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number()) throw ConfigError("'" + std::string(key) + "' in " + where + " must be a number");
  return obj[key].get<double>();
}

int integer_or(const json& obj, const char* key, int fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number_integer()) {
    throw ConfigError("'" + std::string(key) + "' in " + where + " must be an integer");
  }
  return obj[key].get<int>();
}

GAParams parse_ga(const json& obj) {
  GAParams ga;
  reject_unknown_keys(obj, {"population", "generations", "crossover_rate", "mutation_rate",
                            "seed", "elite_count"},
                      "'ga'");
  ga.population = integer_or(obj, "population", ga.population, "'ga'");
  ga.generations = integer_or(obj, "generations", ga.generations, "'ga'");
  ga.crossover_rate = number_or(obj, "crossover_rate", ga.crossover_rate, "'ga'");
  ga.mutation_rate = number_or(obj, "mutation_rate", ga.mutation_rate, "'ga'");
  if (obj.contains("seed")) {
    if (!obj["seed"].is_number_unsigned()) {
      throw ConfigError("'seed' in 'ga' must be a non-negative integer");
    }
    ga.seed = obj["seed"].get<std::uint64_t>();
  }
  ga.elite_count = integer_or(obj, "elite_count", ga.elite_count, "'ga'");
  return ga;
}

ToolchainConfig parse_toolchain(const json& obj) {
  ToolchainConfig tc;
  reject_unknown_keys(obj, {"compile_cmd", "bench_cmd", "time_regex", "timeout_s", "repetitions"},
                      "'toolchain'");
  tc.compile_cmd = require_string(obj, "compile_cmd", "'toolchain'");
  tc.bench_cmd = require_string(obj, "bench_cmd", "'toolchain'");
  if (obj.contains("time_regex")) {
    if (!obj["time_regex"].is_string()) throw ConfigError("'time_regex' must be a string");
    tc.time_regex = obj["time_regex"].get<std::string>();
  }
  tc.timeout_s = number_or(obj, "timeout_s", tc.timeout_s, "'toolchain'");
  if (!(tc.timeout_s > 0.0)) throw ConfigError("'timeout_s' must be positive");
  tc.repetitions = integer_or(obj, "repetitions", tc.repetitions, "'toolchain'");
  if (tc.repetitions < 1) throw ConfigError("'repetitions' must be at least 1");
  return tc;
}

}  // namespace

RunConfig load_config(const std::filesystem::path& config_path) {
  std::ifstream in(config_path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file: " + config_path.string());
  json obj = json::parse(in, nullptr, false);
  if (obj.is_discarded() || !obj.is_object()) {
    throw ConfigError("config file is not a JSON object: " + config_path.string());
  }
  reject_unknown_keys(
      obj, {"source", "workdir", "candidates", "jobs", "ga", "toolchain", "sim_model"},
      "the config");

  const fs::path base = fs::absolute(config_path).parent_path();

  RunConfig cfg;
  cfg.source = resolve_path(base, require_string(obj, "source", "the config"));
  cfg.workdir = resolve_path(base, require_string(obj, "workdir", "the config"));

  if (obj.contains("candidates")) {
    const std::string c = require_string(obj, "candidates", "the config");
    if (c == "all") {
      cfg.candidates = CandidateFilter::All;
    } else if (c == "outermost") {
      cfg.candidates = CandidateFilter::Outermost;
    } else {
      throw ConfigError("'candidates' must be \"all\" or \"outermost\", got \"" + c + "\"");
    }
  }

  cfg.jobs = integer_or(obj, "jobs", 1, "the config");
  if (cfg.jobs < 1) throw ConfigError("'jobs' must be at least 1");

  if (obj.contains("ga")) {
    if (!obj["ga"].is_object()) throw ConfigError("'ga' must be an object");
    cfg.ga = parse_ga(obj["ga"]);
  }
  validate_params(cfg.ga);

  const bool has_toolchain = obj.contains("toolchain");
  const bool has_sim = obj.contains("sim_model");
  if (has_toolchain == has_sim) {
    throw ConfigError("exactly one of 'toolchain' and 'sim_model' must be configured");
  }
  if (has_toolchain) {
    if (!obj["toolchain"].is_object()) throw ConfigError("'toolchain' must be an object");
    cfg.toolchain = parse_toolchain(obj["toolchain"]);
  } else {
    cfg.sim_model = resolve_path(base, require_string(obj, "sim_model", "the config"));
  }
  return cfg;
}

std::string render_resolved_config(const RunConfig& cfg) {
  ordered_json obj;
  obj["source"] = cfg.source.string();
  obj["workdir"] = cfg.workdir.string();
  obj["candidates"] = std::string(to_string(cfg.candidates));
  obj["jobs"] = cfg.jobs;
  obj["ga"] = {{"population", cfg.ga.population},
               {"generations", cfg.ga.generations},
               {"crossover_rate", cfg.ga.crossover_rate},
               {"mutation_rate", cfg.ga.mutation_rate},
               {"seed", cfg.ga.seed},
               {"elite_count", cfg.ga.elite_count}};
  if (cfg.toolchain) {
    obj["toolchain"] = {{"compile_cmd", cfg.toolchain->compile_cmd},
                        {"bench_cmd", cfg.toolchain->bench_cmd},
                        {"time_regex", cfg.toolchain->time_regex},
                        {"timeout_s", cfg.toolchain->timeout_s},
                        {"repetitions", cfg.toolchain->repetitions}};
  } else {
    obj["sim_model"] = cfg.sim_model->string();
  }
  obj["artifacts"] = {{"resolved_config", cfg.resolved_config_path().string()},
                      {"probe_report", cfg.probe_report_path().string()},
                      {"probe_cache", cfg.probe_cache_path().string()},
                      {"eval_cache", cfg.eval_cache_path().string()},
                      {"generations_csv", cfg.generations_csv_path().string()},
                      {"summary", cfg.summary_path().string()},
                      {"best_source", cfg.best_source_path().string()}};
  return obj.dump(2) + "\n";
}

}  // namespace acctune
