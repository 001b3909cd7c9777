#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "acctune/source_model.hpp"
#include "test_util.hpp"

using namespace acctune;
using testutil::strip_directive_lines;

namespace {

SourceUnit unit_of(std::string text) { return SourceUnit::from_string("test.c", std::move(text)); }

CandidateSet candidates_over_all_loops(SourceUnit unit) {
  CandidateSet cs;
  cs.all_loops = scan_loops(unit);
  cs.unit = std::move(unit);
  for (const auto& site : cs.all_loops) cs.candidate_ids.push_back(site.id);
  return cs;
}

}  // namespace

TEST_CASE("single loop in a function body") {
  auto unit = unit_of("int f(){for(i=0;i<n;i++){a[i]=0;}}");
  auto sites = scan_loops(unit);
  REQUIRE(sites.size() == 1);
  CHECK(sites[0].id == 0);
  CHECK(sites[0].depth == 0);
  CHECK(unit.text.substr(sites[0].header_start, 3) == "for");
}

TEST_CASE("nested loops get increasing depths and nested spans") {
  auto unit = unit_of("void f(){for(i=0;i<n;i++){for(j=0;j<n;j++){a[i][j]=0;}}}");
  auto sites = scan_loops(unit);
  REQUIRE(sites.size() == 2);
  CHECK(sites[0].depth == 0);
  CHECK(sites[1].depth == 1);
  CHECK(sites[0].header_start < sites[1].header_start);
  CHECK(sites[0].body_span.contains(sites[1].header_start));
  CHECK(sites[0].body_span.contains(sites[1].body_span));
}

TEST_CASE("for inside string literal and comment is not a loop") {
  auto unit = unit_of("void f(){char*s=\"for(\";/*for(*/for(i=0;i<n;i++){}}");
  auto sites = scan_loops(unit);
  REQUIRE(sites.size() == 1);
  CHECK(unit.text.substr(sites[0].header_start, 4) == "for(");
}

TEST_CASE("for on a preprocessor line is invisible") {
  auto unit = unit_of("#define LOOP for(i=0;i<n;i++)\nvoid f(){LOOP{a[i]=0;}}\n");
  CHECK(scan_loops(unit).empty());
}

TEST_CASE("preprocessor line continuation hides the whole directive") {
  auto unit = unit_of("#define LOOP \\\n  for(i=0;i<n;i++)\nvoid f(){int x;}\n");
  CHECK(scan_loops(unit).empty());
}

TEST_CASE("line comments swallow for, including continued ones") {
  auto unit = unit_of("// for(i=0;i<n;i++)\n// continued \\\n for(j=0;j<n;j++)\nvoid f(){}\n");
  CHECK(scan_loops(unit).empty());
}

TEST_CASE("single-statement body ends at its semicolon") {
  auto unit = unit_of("void f(){\n  for(i=0;i<n;i++)\n    a[i]=0;\n  b=1;\n}\n");
  auto sites = scan_loops(unit);
  REQUIRE(sites.size() == 1);
  auto body = unit.text.substr(sites[0].body_span.begin, sites[0].body_span.end - sites[0].body_span.begin);
  CHECK(body == "a[i]=0;");
}

TEST_CASE("braceless nesting keeps spans contained") {
  auto unit = unit_of("void f(){for(i=0;i<n;i++)for(j=0;j<n;j++)a[i][j]=0;}");
  auto sites = scan_loops(unit);
  REQUIRE(sites.size() == 2);
  CHECK(sites[0].depth == 0);
  CHECK(sites[1].depth == 1);
  CHECK(sites[0].body_span.contains(sites[1].body_span));
  CHECK(unit.text[sites[1].body_span.end - 1] == ';');
  CHECK(sites[0].body_span.end == sites[1].body_span.end);
}

TEST_CASE("while and do loops are not sites and do not add depth") {
  auto unit = unit_of(
      "void f(){while(x){for(i=0;i<n;i++){a[i]=0;}}do{for(j=0;j<n;j++){b[j]=0;}}while(y);}");
  auto sites = scan_loops(unit);
  REQUIRE(sites.size() == 2);
  CHECK(sites[0].depth == 0);
  CHECK(sites[1].depth == 0);
}

TEST_CASE("loop body containing an if/else keeps the full statement") {
  auto unit = unit_of("void f(){for(i=0;i<n;i++) if(a[i]){b[i]=0;} else {c[i]=1;} d=2;}");
  auto sites = scan_loops(unit);
  REQUIRE(sites.size() == 1);
  auto body = unit.text.substr(sites[0].body_span.begin, sites[0].body_span.end - sites[0].body_span.begin);
  CHECK(body == "if(a[i]){b[i]=0;} else {c[i]=1;}");
}

TEST_CASE("digit separators are not char literals") {
  auto unit = unit_of("void f(){for(i=0;i<1'000;i++){a[i]=0;}}");
  CHECK(scan_loops(unit).size() == 1);
}

TEST_CASE("identifiers containing for are not loops") {
  auto unit = unit_of("void f(){int forx=0; transform(x); x_for(y); for(i=0;i<n;i++){}}");
  CHECK(scan_loops(unit).size() == 1);
}

TEST_CASE("unbalanced braces are rejected") {
  CHECK_THROWS_AS(scan_loops(unit_of("void f(){")), UnbalancedBraces);
  CHECK_THROWS_AS(scan_loops(unit_of("}{")), UnbalancedBraces);
}

TEST_CASE("unterminated literals are rejected") {
  CHECK_THROWS_AS(scan_loops(unit_of("char*s=\"abc")), UnterminatedLiteral);
  CHECK_THROWS_AS(scan_loops(unit_of("char c='a")), UnterminatedLiteral);
  CHECK_THROWS_AS(scan_loops(unit_of("/* never closed")), UnterminatedLiteral);
}

TEST_CASE("string with escapes and line continuation scans fine") {
  auto unit = unit_of("void f(){const char*s=\"a\\\"for(\\\" \\\n more\";for(i=0;i<n;i++){}}");
  CHECK(scan_loops(unit).size() == 1);
}

TEST_CASE("ids are consecutive and ordered by header offset") {
  auto unit = unit_of(
      "void f(){for(a;;){}for(b;;){}}\n"
      "void g(){for(c;;){for(d;;){}}for(e;;){}}\n");
  auto sites = scan_loops(unit);
  REQUIRE(sites.size() == 5);
  for (std::size_t i = 0; i < sites.size(); ++i) CHECK(sites[i].id == static_cast<int>(i));
  for (std::size_t i = 1; i < sites.size(); ++i) CHECK(sites[i - 1].header_start < sites[i].header_start);
}

TEST_CASE("body spans form a forest: no partial overlap") {
  auto unit = unit_of(
      "void f(){for(i;;){for(j;;){a;}for(k;;){b;}}for(m;;){c;}}\n"
      "void g(){for(p;;)for(q;;){d;}}\n");
  auto sites = scan_loops(unit);
  REQUIRE(sites.size() == 6);
  for (const auto& x : sites) {
    for (const auto& y : sites) {
      if (x.id == y.id) continue;
      bool disjoint = x.body_span.end <= y.body_span.begin || y.body_span.end <= x.body_span.begin;
      bool nested = x.body_span.contains(y.body_span) || y.body_span.contains(x.body_span);
      CHECK((disjoint || nested));
    }
  }
}

TEST_CASE("line index round-trips every offset") {
  std::string text = "ab\ncd\n\nxyz\n";
  auto idx = LineIndex::build(text);
  for (std::size_t o = 0; o < text.size(); ++o) {
    CHECK(idx.offset_of(idx.line_col_of(o)) == o);
  }
  CHECK(idx.line_col_of(0).line == 1);
  CHECK(idx.line_col_of(3).line == 2);
}

TEST_CASE("scanning is deterministic") {
  auto unit = unit_of("void f(){for(i;;){for(j;;){a;}}}");
  auto a = scan_loops(unit);
  auto b = scan_loops(unit);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].header_start == b[i].header_start);
    CHECK(a[i].body_span.begin == b[i].body_span.begin);
    CHECK(a[i].body_span.end == b[i].body_span.end);
    CHECK(a[i].depth == b[i].depth);
  }
}

TEST_CASE("random comment and literal noise never changes the loop count") {
  // Three fixed loops; noise statements with for-lookalikes inside comments
  // and strings are sprinkled between statements.
  std::mt19937 rng(20240817);
  const std::vector<std::string> noise = {
      "/* for(x;;) */",
      "// for(y;;)\n",
      "s = \"for(\";",
      "c = 'f';",
      "q = \"}{\";",
      "/* { */",
      "// }\n",
  };
  for (int trial = 0; trial < 50; ++trial) {
    std::string body;
    auto sprinkle = [&] {
      int n = static_cast<int>(rng() % 3);
      for (int i = 0; i < n; ++i) body += noise[rng() % noise.size()] + "\n";
    };
    sprinkle();
    body += "for(i=0;i<n;i++){a[i]=0;}\n";
    sprinkle();
    body += "for(j=0;j<n;j++){for(k=0;k<n;k++){b[j][k]=0;}}\n";
    sprinkle();
    auto unit = unit_of("void f(){\n" + body + "}\n");
    auto sites = scan_loops(unit);
    CHECK(sites.size() == 3);
  }
}

TEST_CASE("render with all-zero genome is the identity") {
  auto cs = candidates_over_all_loops(unit_of("void f(){\n  for(i=0;i<n;i++){a[i]=0;}\n}\n"));
  auto out = render_variant(cs, Genome::zeros(cs.gene_length()));
  CHECK(out == cs.unit.text);
}

TEST_CASE("render with one bit inserts exactly one directive above that for") {
  auto cs = candidates_over_all_loops(
      unit_of("void f(){\n  for(i=0;i<n;i++){\n    for(j=0;j<n;j++){a[i][j]=0;}\n  }\n}\n"));
  REQUIRE(cs.gene_length() == 2);
  Genome g = Genome::zeros(2);
  g.set(1, true);
  auto out = render_variant(cs, g);

  std::size_t at = out.find(kOffloadDirective);
  REQUIRE(at != std::string::npos);
  CHECK(out.find(kOffloadDirective, at + 1) == std::string::npos);
  // The directive line carries the inner loop's indent and sits directly
  // above the inner for line.
  std::string expected = "    " + std::string(kOffloadDirective) + "\n    for(j=0;j<n;j++)";
  CHECK(out.find(expected) != std::string::npos);
}

TEST_CASE("render with all-one genome adds one line per candidate") {
  auto text = "void f(){\n  for(i=0;i<n;i++){a[i]=0;}\n  for(j=0;j<n;j++){b[j]=0;}\n  for(k=0;k<n;k++){c[k]=0;}\n}\n";
  auto cs = candidates_over_all_loops(unit_of(text));
  REQUIRE(cs.gene_length() == 3);
  auto out = render_variant(cs, Genome::ones(3));
  auto count_lines = [](const std::string& s) { return std::count(s.begin(), s.end(), '\n'); };
  CHECK(count_lines(out) == count_lines(cs.unit.text) + 3);
}

TEST_CASE("render rejects a genome of the wrong length") {
  auto cs = candidates_over_all_loops(unit_of("void f(){for(i;;){}}"));
  CHECK_THROWS_AS(render_variant(cs, Genome::zeros(cs.gene_length() + 1)), GenomeLengthMismatch);
}

TEST_CASE("re-scanning an all-zero render yields the identical site list") {
  auto cs = candidates_over_all_loops(
      unit_of("void f(){\n  for(i=0;i<n;i++){\n    for(j=0;j<n;j++){a[i][j]=0;}\n  }\n}\n"));
  auto rendered = render_variant(cs, Genome::zeros(cs.gene_length()));
  auto again = scan_loops(SourceUnit::from_string("test.c", rendered));
  REQUIRE(again.size() == cs.all_loops.size());
  for (std::size_t i = 0; i < again.size(); ++i) {
    CHECK(again[i].header_start == cs.all_loops[i].header_start);
    CHECK(again[i].body_span.begin == cs.all_loops[i].body_span.begin);
    CHECK(again[i].body_span.end == cs.all_loops[i].body_span.end);
    CHECK(again[i].depth == cs.all_loops[i].depth);
  }
}

TEST_CASE("stripping directive lines undoes any render") {
  auto text =
      "int main(void){\n"
      "  int a[8][8];\n"
      "  for(int i=0;i<8;i++){\n"
      "    for(int j=0;j<8;j++){a[i][j]=i+j;}\n"
      "  }\n"
      "\tfor(int k=0;k<8;k++){a[k][k]=0;}\n"
      "  return a[1][2];\n"
      "}\n";
  auto cs = candidates_over_all_loops(unit_of(text));
  REQUIRE(cs.gene_length() == 3);
  std::mt19937 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    Genome g = Genome::zeros(cs.gene_length());
    for (std::size_t k = 0; k < g.size(); ++k) g.set(k, rng() & 1);
    auto out = render_variant(cs, g);
    CHECK(strip_directive_lines(out) == cs.unit.text);
  }
}

TEST_CASE("two loops on one line both get directive lines above it") {
  auto cs = candidates_over_all_loops(unit_of("void f(){for(i;;)for(j;;){a;}}"));
  REQUIRE(cs.gene_length() == 2);
  auto out = render_variant(cs, Genome::ones(2));
  // Both insertions land at the same line start; order follows gene order.
  std::string twice = std::string(kOffloadDirective) + "\n" + std::string(kOffloadDirective) + "\n";
  CHECK(out.find(twice) != std::string::npos);
  CHECK(strip_directive_lines(out) == cs.unit.text);
}
