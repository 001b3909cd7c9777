#include "acctune/evaluator.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <regex>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "acctune/errors.hpp"
#include "acctune/probe.hpp"
#include "acctune/subprocess.hpp"

namespace acctune {

namespace fs = std::filesystem;
using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

EvaluationOutcome SimBackend::measure(const Genome& genome) {
  EvaluationOutcome out;
  try {
    out.time_s = model_time(model_, genome);
    out.status = EvalStatus::Measured;
    out.wall_cost_s = out.time_s;
  } catch (const SimulatedCompileError&) {
    out.status = EvalStatus::CompileError;
    out.time_s = 0.0;
    out.wall_cost_s = 0.0;
  }
  return out;
}

double extract_time(const std::string& output, double wall_seconds,
                    const std::string& time_regex) {
  if (time_regex.empty()) return wall_seconds;
  const std::regex re(time_regex, std::regex::ECMAScript);
  std::smatch m;
  if (!std::regex_search(output, m, re) || m.size() < 2 || !m[1].matched) {
    throw TimePatternNotFound("benchmark output never matched time regex '" + time_regex + "'");
  }
  const std::string text = m[1].str();
  char* end = nullptr;
  const double value = std::strtod(text.c_str(), &end);
  if (end == text.c_str()) {
    throw TimePatternNotFound("time regex captured non-numeric text '" + text + "'");
  }
  return value;
}

ToolchainBackend::ToolchainBackend(CandidateSet cs, ToolchainConfig config,
                                   std::filesystem::path workdir)
    : cs_(std::move(cs)), config_(std::move(config)), workdir_(std::move(workdir)) {
  basename_ = fs::path(cs_.unit.path).filename().string();
  if (basename_.empty()) basename_ = "variant.c";
}

EvaluationOutcome ToolchainBackend::measure(const Genome& genome) {
  EvaluationOutcome out;
  double wall = 0.0;

  const fs::path dir = workdir_ / "eval" / genome.to_string();
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw WorkdirUnwritable("cannot create " + dir.string() + ": " + ec.message());

  const fs::path src = dir / basename_;
  {
    std::ofstream f(src, std::ios::binary | std::ios::trunc);
    f << render_variant(cs_, genome);
    if (!f) throw WorkdirUnwritable("cannot write " + src.string());
  }

  const fs::path exe = dir / "app.bin";
  const CompilerDriver driver{config_.compile_cmd, config_.timeout_s};
  const CompileOutcome comp = run_compile(driver, src, exe, dir / "compile.log");
  wall += comp.wall_seconds;
  if (comp.timed_out) {
    out.status = EvalStatus::Timeout;
    out.time_s = config_.timeout_s;
    out.wall_cost_s = wall;
    return out;
  }
  if (!comp.ok) {
    out.status = EvalStatus::CompileError;
    out.wall_cost_s = wall;
    return out;
  }

  const std::string cmd =
      expand_template(config_.bench_cmd, {{"exe", shell_quote(exe.string())}});
  std::vector<double> times;
  const int reps = std::max(1, config_.repetitions);
  for (int r = 1; r <= reps; ++r) {
    const fs::path log = dir / ("run_" + std::to_string(r) + ".log");
    fs::remove(log, ec);
    const CommandResult res = run_command(cmd, config_.timeout_s, log);
    wall += res.wall_seconds;
    if (res.not_found) throw ToolchainMissing("benchmark command not found: " + cmd);
    if (res.timed_out) {
      out.status = EvalStatus::Timeout;
      out.time_s = config_.timeout_s;
      out.wall_cost_s = wall;
      return out;
    }
    if (res.exit_code != 0) {
      out.status = EvalStatus::RuntimeError;
      out.wall_cost_s = wall;
      return out;
    }
    std::ifstream in(log, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    double t = 0.0;
    try {
      t = extract_time(buf.str(), res.wall_seconds, config_.time_regex);
    } catch (const TimePatternNotFound&) {
      out.status = EvalStatus::RuntimeError;
      out.wall_cost_s = wall;
      return out;
    }
    if (!(t > 0.0)) {
      out.status = EvalStatus::RuntimeError;
      out.wall_cost_s = wall;
      return out;
    }
    times.push_back(t);
  }

  std::sort(times.begin(), times.end());
  const std::size_t n = times.size();
  const double median =
      n % 2 == 1 ? times[n / 2] : 0.5 * (times[n / 2 - 1] + times[n / 2]);

  out.status = EvalStatus::Measured;
  out.time_s = median;
  out.wall_cost_s = wall;
  return out;
}

Evaluator::Evaluator(std::unique_ptr<EvalBackend> backend, int jobs,
                     std::filesystem::path cache_file)
    : backend_(std::move(backend)), jobs_(std::max(1, jobs)), cache_file_(std::move(cache_file)) {
  if (!cache_file_.empty()) load_cache_file();
}

void Evaluator::load_cache_file() {
  std::ifstream in(cache_file_, std::ios::binary);
  if (!in) return;  // nothing persisted yet
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json obj = json::parse(line, nullptr, false);
    if (obj.is_discarded() || !obj.is_object()) continue;
    if (!obj.contains("genome") || !obj["genome"].is_string()) continue;
    Genome g;
    try {
      g = Genome::from_string(obj["genome"].get<std::string>());
    } catch (const Error&) {
      continue;
    }
    if (g.size() != backend_->gene_length()) continue;
    const auto status = eval_status_from_string(obj.value("status", ""));
    if (!status) continue;
    Entry entry;
    entry.done = true;
    entry.outcome.status = *status;
    entry.outcome.time_s = obj.value("time_s", 0.0);
    entry.outcome.wall_cost_s = obj.value("wall_cost_s", 0.0);
    if (entry.outcome.status == EvalStatus::Measured && !(entry.outcome.time_s > 0.0)) continue;
    entries_.emplace(std::move(g), std::move(entry));
  }
}

void Evaluator::append_cache_line(const Genome& genome, const EvaluationOutcome& outcome) {
  if (cache_file_.empty()) return;
  if (cache_file_.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(cache_file_.parent_path(), ec);
  }
  std::ofstream out(cache_file_, std::ios::binary | std::ios::app);
  if (!out) throw WorkdirUnwritable("cannot append to cache file " + cache_file_.string());
  ordered_json obj;
  obj["genome"] = genome.to_string();
  obj["status"] = std::string(to_string(outcome.status));
  obj["time_s"] = outcome.time_s;
  obj["wall_cost_s"] = outcome.wall_cost_s;
  out << obj.dump() << "\n";
}

EvaluationOutcome Evaluator::measure_and_store(const Genome& genome, Entry& entry,
                                               std::unique_lock<std::mutex>& lock) {
  ++backend_calls_;
  lock.unlock();
  EvaluationOutcome outcome;
  std::exception_ptr error;
  try {
    outcome = backend_->measure(genome);
  } catch (...) {
    error = std::current_exception();
  }
  lock.lock();
  if (error) {
    entry.error = error;
    entry.done = true;
    cv_.notify_all();
    std::rethrow_exception(error);
  }
  entry.outcome = outcome;
  entry.done = true;
  append_cache_line(genome, outcome);
  cv_.notify_all();
  return outcome;
}

EvaluationOutcome Evaluator::evaluate(const Genome& genome) {
  if (genome.size() != backend_->gene_length()) {
    throw GenomeLengthMismatch("evaluate: genome length " + std::to_string(genome.size()) +
                               " does not match candidate count " +
                               std::to_string(backend_->gene_length()));
  }
  std::unique_lock<std::mutex> lock(mu_);
  ++requests_;
  auto [it, inserted] = entries_.try_emplace(genome);
  Entry& entry = it->second;
  if (inserted) {
    entry.counted = true;
    ++distinct_;
    return measure_and_store(genome, entry, lock);
  }
  if (!entry.counted) {
    // first encounter this run of an outcome loaded from the cache file
    entry.counted = true;
    ++distinct_;
  } else {
    ++cache_hits_;
  }
  cv_.wait(lock, [&] { return entry.done; });
  if (entry.error) std::rethrow_exception(entry.error);
  return entry.outcome;
}

std::vector<EvaluationOutcome> Evaluator::evaluate_all(const std::vector<Genome>& genomes) {
  std::vector<EvaluationOutcome> out(genomes.size());
  if (genomes.empty()) return out;
  const int jobs = std::min<std::size_t>(jobs_, genomes.size());
  if (jobs <= 1) {
    for (std::size_t i = 0; i < genomes.size(); ++i) out[i] = evaluate(genomes[i]);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::mutex fail_mu;
  std::exception_ptr failure;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= genomes.size()) return;
      try {
        out[i] = evaluate(genomes[i]);
      } catch (...) {
        std::lock_guard<std::mutex> g(fail_mu);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> threads;
  threads.reserve(jobs);
  for (int t = 0; t < jobs; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

EvalCounters Evaluator::counters() const {
  std::unique_lock<std::mutex> lock(mu_);
  EvalCounters c;
  c.requests = requests_;
  c.distinct = distinct_;
  c.cache_hits = cache_hits_;
  c.backend_calls = backend_calls_;
  // canonical (genome-sorted) order keeps the sum byte-stable across
  // schedulings
  for (const auto& [genome, entry] : entries_) {
    (void)genome;
    if (entry.counted && entry.done && !entry.error) c.elapsed_s += entry.outcome.wall_cost_s;
  }
  return c;
}

}  // namespace acctune
