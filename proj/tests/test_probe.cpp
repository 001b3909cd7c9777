#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "acctune/errors.hpp"
#include "acctune/probe.hpp"
#include "acctune/subprocess.hpp"
#include "test_util.hpp"

using namespace acctune;
using testutil::TempDir;

namespace {

// Five top-level loops: #1 calls a function, #4 breaks out early, the rest
// are clean array arithmetic.
const char* kFiveLoops = R"(void foo(int x);

void work(int* a, int* b, int n) {
  for (int i = 0; i < n; i++) {
    a[i] = b[i] + 1;
  }
  for (int i = 0; i < n; i++) {
    foo(a[i]);
  }
  for (int i = 0; i < n; i++) {
    a[i] = a[i] * 2;
  }
  for (int i = 0; i < n; i++) {
    b[i] = a[i] - 3;
  }
  for (int i = 0; i < n; i++) {
    if (a[i] == 0) break;
    b[i] += i;
  }
}
)";

std::string mockacc_cmd() {
  return shell_quote(MOCKACC_PATH) + " -acc {src} -o {out}";
}

SourceUnit write_unit(const TempDir& dir, const std::string& name, const std::string& text) {
  testutil::write_file(dir.path() / name, text);
  return SourceUnit::from_file(dir.path() / name);
}

bool same_result(const ProbeResult& x, const ProbeResult& y) {
  return x.loop_id == y.loop_id && x.verdict == y.verdict && x.reject_class == y.reject_class &&
         x.compiler_message == y.compiler_message && x.timed_out == y.timed_out;
}

std::size_t line_count(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) ++n;
  return n;
}

}  // namespace

TEST_CASE("reject class names round-trip") {
  for (RejectClass c : {RejectClass::ExternalCall, RejectClass::NestedOverlap,
                        RejectClass::EarlyExit, RejectClass::DataDependency, RejectClass::Other}) {
    auto back = reject_class_from_string(to_string(c));
    REQUIRE(back.has_value());
    CHECK(*back == c);
  }
  CHECK(!reject_class_from_string("bogus").has_value());
}

TEST_CASE("default rules classify PGI-style diagnostics") {
  auto rules = default_classifier_rules();
  CHECK(classify_diagnostic("Accelerator restriction: call to 'foo' with no acc routine information",
                            rules) == RejectClass::ExternalCall);
  CHECK(classify_diagnostic("compute regions may not be nested", rules) ==
        RejectClass::NestedOverlap);
  CHECK(classify_diagnostic("Accelerator restriction: branching out of compute region", rules) ==
        RejectClass::EarlyExit);
  CHECK(classify_diagnostic("Loop carried dependence of a prevents parallelization", rules) ==
        RejectClass::DataDependency);
  CHECK(classify_diagnostic("something else entirely", rules) == RejectClass::Other);
  CHECK(classify_diagnostic("", rules) == RejectClass::Other);
}

TEST_CASE("classification is case-insensitive and first match wins") {
  auto rules = default_classifier_rules();
  CHECK(classify_diagnostic("LOOP CARRIED DEPENDENCE OF X", rules) == RejectClass::DataDependency);

  std::vector<ClassifierRule> custom = {{"dependence", RejectClass::EarlyExit},
                                        {"loop", RejectClass::DataDependency}};
  CHECK(classify_diagnostic("loop carried dependence", custom) == RejectClass::EarlyExit);
  CHECK(classify_diagnostic("loop stuff", custom) == RejectClass::DataDependency);
}

TEST_CASE("accepting driver marks every loop parallelizable") {
  TempDir dir("probe-accept");
  auto unit = write_unit(dir, "five.c", kFiveLoops);
  auto loops = scan_loops(unit);
  REQUIRE(loops.size() == 5);

  CompilerDriver driver{"true {src} {out}", 30.0};
  ProbeOptions opts;
  opts.workdir = dir.path() / "work";

  auto cs = build_candidate_set(unit, loops, driver, opts);
  CHECK(cs.gene_length() == 5);
  CHECK(cs.candidate_ids == std::vector<int>{0, 1, 2, 3, 4});
}

TEST_CASE("rejecting driver yields NoCandidates but still reports every loop") {
  TempDir dir("probe-reject");
  auto unit = write_unit(dir, "five.c", kFiveLoops);
  auto loops = scan_loops(unit);

  CompilerDriver driver{"false {src} {out}", 30.0};
  ProbeOptions opts;
  opts.workdir = dir.path() / "work";

  std::vector<ProbeResult> report;
  CHECK_THROWS_AS(build_candidate_set(unit, loops, driver, opts, &report), NoCandidates);
  REQUIRE(report.size() == 5);
  for (const auto& r : report) {
    CHECK(r.verdict == ProbeVerdict::Rejected);
    CHECK(r.reject_class == RejectClass::Other);
  }
}

TEST_CASE("mock compiler filters the call and break loops") {
  TempDir dir("probe-mock");
  auto unit = write_unit(dir, "five.c", kFiveLoops);
  auto loops = scan_loops(unit);

  CompilerDriver driver{mockacc_cmd(), 30.0};
  ProbeOptions opts;
  opts.workdir = dir.path() / "work";

  std::vector<ProbeResult> report;
  auto cs = build_candidate_set(unit, loops, driver, opts, &report);

  CHECK(cs.candidate_ids == std::vector<int>{0, 2, 3});
  CHECK(cs.gene_length() == 3);
  CHECK(cs.candidate(0).id == 0);
  CHECK(cs.candidate(1).id == 2);
  CHECK(cs.candidate(2).id == 3);

  REQUIRE(report.size() == 5);
  CHECK(report[1].verdict == ProbeVerdict::Rejected);
  CHECK(report[1].reject_class == RejectClass::ExternalCall);
  CHECK(report[4].verdict == ProbeVerdict::Rejected);
  CHECK(report[4].reject_class == RejectClass::EarlyExit);
}

TEST_CASE("mock compiler flags loop-carried dependences") {
  TempDir dir("probe-dep");
  auto unit = write_unit(dir, "dep.c",
                         "void f(double* a, int n) {\n"
                         "  for (int i = 1; i < n; i++) {\n"
                         "    a[i] = a[i - 1] + 1.0;\n"
                         "  }\n"
                         "}\n");
  auto loops = scan_loops(unit);
  REQUIRE(loops.size() == 1);

  CompilerDriver driver{mockacc_cmd(), 30.0};
  ProbeOptions opts;
  opts.workdir = dir.path() / "work";

  auto r = probe_loop(unit, loops, 0, driver, opts);
  CHECK(r.verdict == ProbeVerdict::Rejected);
  CHECK(r.reject_class == RejectClass::DataDependency);
  CHECK(r.compiler_message.find("loop carried dependence") != std::string::npos);
}

TEST_CASE("pre-annotated outer loop turns the inner probe into a nested overlap") {
  TempDir dir("probe-nested");
  auto unit = write_unit(dir, "nest.c",
                         "void f(double m[64][64], int n) {\n"
                         "  #pragma acc kernels // user annotation\n"
                         "  for (int i = 0; i < n; i++) {\n"
                         "    for (int j = 0; j < n; j++) {\n"
                         "      m[i][j] = m[i][j] * 0.5;\n"
                         "    }\n"
                         "  }\n"
                         "}\n");
  auto loops = scan_loops(unit);
  REQUIRE(loops.size() == 2);

  CompilerDriver driver{mockacc_cmd(), 30.0};
  ProbeOptions opts;
  opts.workdir = dir.path() / "work";

  auto outer = probe_loop(unit, loops, 0, driver, opts);
  CHECK(outer.verdict == ProbeVerdict::Parallelizable);  // duplicate directive collapses

  auto inner = probe_loop(unit, loops, 1, driver, opts);
  CHECK(inner.verdict == ProbeVerdict::Rejected);
  CHECK(inner.reject_class == RejectClass::NestedOverlap);
}

TEST_CASE("probe results are independent of job count") {
  TempDir dir("probe-jobs");
  auto unit = write_unit(dir, "five.c", kFiveLoops);
  auto loops = scan_loops(unit);
  CompilerDriver driver{mockacc_cmd(), 30.0};

  ProbeOptions serial;
  serial.workdir = dir.path() / "work";
  serial.jobs = 1;
  std::vector<ProbeResult> r1;
  auto cs1 = build_candidate_set(unit, loops, driver, serial, &r1);

  ProbeOptions parallel = serial;
  parallel.jobs = 4;
  std::vector<ProbeResult> r4;
  auto cs4 = build_candidate_set(unit, loops, driver, parallel, &r4);

  CHECK(cs1.candidate_ids == cs4.candidate_ids);
  REQUIRE(r1.size() == r4.size());
  for (std::size_t i = 0; i < r1.size(); ++i) CHECK(same_result(r1[i], r4[i]));
}

TEST_CASE("probing never mutates the original source") {
  TempDir dir("probe-immutable");
  auto src_path = dir.path() / "five.c";
  testutil::write_file(src_path, kFiveLoops);
  auto unit = SourceUnit::from_file(src_path);
  auto loops = scan_loops(unit);

  CompilerDriver driver{mockacc_cmd(), 30.0};
  ProbeOptions opts;
  opts.workdir = dir.path() / "work";
  build_candidate_set(unit, loops, driver, opts);

  CHECK(testutil::read_file(src_path) == kFiveLoops);
  CHECK(unit.text == kFiveLoops);
}

TEST_CASE("probe artifacts are retained under the workdir") {
  TempDir dir("probe-artifacts");
  auto unit = write_unit(dir, "five.c", kFiveLoops);
  auto loops = scan_loops(unit);

  CompilerDriver driver{mockacc_cmd(), 30.0};
  ProbeOptions opts;
  opts.workdir = dir.path() / "work";
  probe_loop(unit, loops, 1, driver, opts);

  auto loop_dir = opts.workdir / "probe" / "loop_1";
  CHECK(std::filesystem::exists(loop_dir / "five.c"));
  CHECK(std::filesystem::exists(loop_dir / "compile.log"));

  auto variant = testutil::read_file(loop_dir / "five.c");
  CHECK(variant.find("#pragma acc kernels\n  for (int i = 0; i < n; i++) {\n    foo(a[i]);") !=
        std::string::npos);
}

TEST_CASE("compile timeout is rejected and surfaced distinctly") {
  TempDir dir("probe-timeout");
  auto unit = write_unit(dir, "one.c", "void f(int* a,int n){for(int i=0;i<n;i++){a[i]=i;}}\n");
  auto loops = scan_loops(unit);

  CompilerDriver driver{"sleep 5 # {src} {out}", 0.25};
  ProbeOptions opts;
  opts.workdir = dir.path() / "work";

  auto r = probe_loop(unit, loops, 0, driver, opts);
  CHECK(r.verdict == ProbeVerdict::Rejected);
  CHECK(r.reject_class == RejectClass::Other);
  CHECK(r.timed_out);
}

TEST_CASE("missing compiler raises ToolchainMissing") {
  TempDir dir("probe-missing");
  auto unit = write_unit(dir, "one.c", "void f(int* a,int n){for(int i=0;i<n;i++){a[i]=i;}}\n");
  auto loops = scan_loops(unit);

  CompilerDriver driver{"definitely-not-a-real-compiler-xyz {src} -o {out}", 10.0};
  ProbeOptions opts;
  opts.workdir = dir.path() / "work";

  CHECK_THROWS_AS(probe_loop(unit, loops, 0, driver, opts), ToolchainMissing);
  CHECK_THROWS_AS(build_candidate_set(unit, loops, driver, opts), ToolchainMissing);
}

TEST_CASE("unknown loop id is an error") {
  TempDir dir("probe-badid");
  auto unit = write_unit(dir, "one.c", "void f(int* a,int n){for(int i=0;i<n;i++){a[i]=i;}}\n");
  auto loops = scan_loops(unit);
  CompilerDriver driver{"true", 10.0};
  ProbeOptions opts;
  opts.workdir = dir.path() / "work";
  CHECK_THROWS_AS(probe_loop(unit, loops, 7, driver, opts), Error);
}

TEST_CASE("probe report is one JSON object per loop") {
  TempDir dir("probe-report");
  auto unit = write_unit(dir, "five.c", kFiveLoops);
  auto loops = scan_loops(unit);

  CompilerDriver driver{mockacc_cmd(), 30.0};
  ProbeOptions opts;
  opts.workdir = dir.path() / "work";
  opts.report_file = dir.path() / "out" / "probe_report.jsonl";
  build_candidate_set(unit, loops, driver, opts);

  std::ifstream in(opts.report_file);
  REQUIRE(in.good());
  std::string line;
  std::vector<nlohmann::json> rows;
  while (std::getline(in, line)) {
    if (!line.empty()) rows.push_back(nlohmann::json::parse(line));
  }
  REQUIRE(rows.size() == 5);
  CHECK(rows[0]["id"] == 0);
  CHECK(rows[0]["verdict"] == "parallelizable");
  CHECK(rows[0]["reject_class"].is_null());
  CHECK(rows[0]["line"] == 4);
  CHECK(rows[1]["id"] == 1);
  CHECK(rows[1]["verdict"] == "rejected");
  CHECK(rows[1]["reject_class"] == "external_call");
  CHECK(rows[1]["message"].get<std::string>().find("no acc routine information") !=
        std::string::npos);
  CHECK(rows[4]["reject_class"] == "early_exit");
}

TEST_CASE("probe cache skips repeat compiles") {
  TempDir dir("probe-cache");
  auto unit = write_unit(dir, "five.c", kFiveLoops);
  auto loops = scan_loops(unit);

  auto counter = dir.path() / "count.txt";
  CompilerDriver driver{"echo {src} >> " + shell_quote(counter.string()), 30.0};
  ProbeOptions opts;
  opts.workdir = dir.path() / "work";
  opts.cache_file = dir.path() / "cache" / "probe_cache.jsonl";

  std::vector<ProbeResult> first;
  build_candidate_set(unit, loops, driver, opts, &first);
  CHECK(line_count(counter) == 5);

  std::vector<ProbeResult> second;
  build_candidate_set(unit, loops, driver, opts, &second);
  CHECK(line_count(counter) == 5);  // all five came from the cache
  REQUIRE(second.size() == first.size());
  for (std::size_t i = 0; i < first.size(); ++i) CHECK(same_result(first[i], second[i]));

  // a different source re-probes everything
  auto other = write_unit(dir, "five2.c", std::string(kFiveLoops) + "\n");
  auto other_loops = scan_loops(other);
  build_candidate_set(other, other_loops, driver, opts);
  CHECK(line_count(counter) == 10);
}

TEST_CASE("cached rejections keep their classification") {
  TempDir dir("probe-cache-class");
  auto unit = write_unit(dir, "five.c", kFiveLoops);
  auto loops = scan_loops(unit);

  auto counter = dir.path() / "count.txt";
  CompilerDriver driver{"echo {src} >> " + shell_quote(counter.string()) + "; " + mockacc_cmd(),
                        30.0};
  ProbeOptions opts;
  opts.workdir = dir.path() / "work";
  opts.cache_file = dir.path() / "probe_cache.jsonl";

  std::vector<ProbeResult> first;
  build_candidate_set(unit, loops, driver, opts, &first);
  CHECK(line_count(counter) == 5);

  std::vector<ProbeResult> second;
  auto cs = build_candidate_set(unit, loops, driver, opts, &second);
  CHECK(line_count(counter) == 5);
  CHECK(cs.candidate_ids == std::vector<int>{0, 2, 3});
  CHECK(second[1].reject_class == RejectClass::ExternalCall);
  CHECK(second[4].reject_class == RejectClass::EarlyExit);
}

TEST_CASE("corrupt cache lines are ignored") {
  TempDir dir("probe-cache-corrupt");
  auto unit = write_unit(dir, "one.c", "void f(int* a,int n){for(int i=0;i<n;i++){a[i]=i;}}\n");
  auto loops = scan_loops(unit);

  ProbeOptions opts;
  opts.workdir = dir.path() / "work";
  opts.cache_file = dir.path() / "probe_cache.jsonl";
  testutil::write_file(opts.cache_file, "this is not json\n{\"half\": \n");

  CompilerDriver driver{"true {src} {out}", 10.0};
  auto cs = build_candidate_set(unit, loops, driver, opts);
  CHECK(cs.gene_length() == 1);
}

TEST_CASE("mock compiler emits a runnable timing script") {
  TempDir dir("mockacc-run");
  auto src = dir.path() / "two.c";
  testutil::write_file(src,
                       "void f(int* a, int* b, int n) {\n"
                       "#pragma acc kernels\n"
                       "  for (int i = 0; i < n; i++) {\n"
                       "    a[i] = i;\n"
                       "  }\n"
                       "#pragma acc kernels\n"
                       "  for (int i = 0; i < n; i++) {\n"
                       "    b[i] = 2 * i;\n"
                       "  }\n"
                       "}\n");
  auto exe = dir.path() / "two.bin";
  auto log = dir.path() / "compile.log";

  CompilerDriver driver{mockacc_cmd(), 30.0};
  auto outcome = run_compile(driver, src, exe, log);
  REQUIRE(outcome.ok);

  auto run_log = dir.path() / "run.log";
  auto r = run_command(shell_quote(exe.string()), 10.0, run_log);
  CHECK(r.exit_code == 0);
  // two annotated loops: 1.0 - 2 * 0.08
  CHECK(testutil::read_file(run_log) == "elapsed: 0.840000 s\n");
}

TEST_CASE("unannotated source compiles to the baseline timing") {
  TempDir dir("mockacc-base");
  auto src = dir.path() / "plain.c";
  testutil::write_file(src, "void f(int* a, int n) {\n  for (int i = 0; i < n; i++) a[i] = i;\n}\n");
  auto exe = dir.path() / "plain.bin";

  CompilerDriver driver{mockacc_cmd(), 30.0};
  auto outcome = run_compile(driver, src, exe, dir.path() / "c.log");
  REQUIRE(outcome.ok);

  auto run_log = dir.path() / "run.log";
  run_command(shell_quote(exe.string()), 10.0, run_log);
  CHECK(testutil::read_file(run_log) == "elapsed: 1.000000 s\n");
}

TEST_CASE("directive with no following loop is a compile error") {
  TempDir dir("mockacc-stray");
  auto src = dir.path() / "stray.c";
  testutil::write_file(src, "void f(void) {\n}\n#pragma acc kernels\n");
  auto exe = dir.path() / "stray.bin";

  CompilerDriver driver{mockacc_cmd(), 30.0};
  auto outcome = run_compile(driver, src, exe, dir.path() / "c.log");
  CHECK(!outcome.ok);
  CHECK(outcome.log.find("not attached to a loop") != std::string::npos);
}
