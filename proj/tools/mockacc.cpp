// mockacc: a stand-in accelerator compiler for tests and demos.
//
// Usage: mockacc [flags...] <src.c> -o <out>
//
// It scans the source for `#pragma acc kernels` lines, attaches each to the
// next `for` statement, and rejects the compilation with PGI-flavored
// diagnostics when an annotated loop breaks one of the rules below. On
// success it writes `out` as an executable shell script that prints a
// deterministic runtime: max(0.05, 1.0 - 0.08 * k) seconds for k annotated
// loops, so that offloading more loops "runs" faster.
//
// Rejection rules, checked per annotated loop in document order:
//   - nested overlap: the loop sits inside another annotated loop
//   - external call: the body calls any function
//   - early exit: the body contains break / return / goto
//   - loop-carried dependence: the body assigns a[i] from a[i +- c]
//
// The checks are textual and deliberately naive; this tool exists to give
// the pipeline a fast, deterministic compiler with realistic failure modes,
// not to analyze real programs.

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <regex>
#include <string>
#include <vector>

#include "acctune/errors.hpp"
#include "acctune/source_model.hpp"

namespace fs = std::filesystem;
using acctune::LoopSite;
using acctune::SourceUnit;

namespace {

struct Annotation {
  int loop_id;
  std::size_t line;  // 1-based line of the loop header
};

// Replaces comment, string-literal and char-literal bytes with spaces so the
// rule regexes only see code. Preprocessor lines are blanked too; the pragma
// scan below runs on the raw text instead.
std::string blank_noncode(const std::string& text) {
  std::string out = text;
  enum class Mode { Code, Line, Block, Str, Chr, Pp } mode = Mode::Code;
  bool at_line_start = true;
  std::size_t block_open = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    const char next = i + 1 < text.size() ? text[i + 1] : '\0';
    switch (mode) {
      case Mode::Code:
        if (c == '/' && next == '/') {
          mode = Mode::Line;
          out[i] = ' ';
        } else if (c == '/' && next == '*') {
          mode = Mode::Block;
          block_open = i;
          out[i] = ' ';
        } else if (c == '"') {
          mode = Mode::Str;
          out[i] = ' ';
        } else if (c == '\'' && (i == 0 || (!std::isalnum(static_cast<unsigned char>(text[i - 1])) &&
                                            text[i - 1] != '_'))) {
          mode = Mode::Chr;
          out[i] = ' ';
        } else if (c == '#' && at_line_start) {
          mode = Mode::Pp;
          out[i] = ' ';
        }
        break;
      case Mode::Line:
        if (c == '\n' && text[i - 1] != '\\') mode = Mode::Code;
        if (c != '\n') out[i] = ' ';
        break;
      case Mode::Block:
        if (c == '/' && i >= block_open + 3 && text[i - 1] == '*') mode = Mode::Code;
        if (c != '\n') out[i] = ' ';
        break;
      case Mode::Str:
        if (c == '\\') {
          out[i] = ' ';
          if (i + 1 < text.size() && text[i + 1] != '\n') out[++i] = ' ';
          break;
        }
        if (c == '"') mode = Mode::Code;
        if (c != '\n') out[i] = ' ';
        break;
      case Mode::Chr:
        if (c == '\\') {
          out[i] = ' ';
          if (i + 1 < text.size() && text[i + 1] != '\n') out[++i] = ' ';
          break;
        }
        if (c == '\'') mode = Mode::Code;
        if (c != '\n') out[i] = ' ';
        break;
      case Mode::Pp:
        if (c == '\n' && text[i - 1] != '\\') mode = Mode::Code;
        if (c != '\n') out[i] = ' ';
        break;
    }
    if (c == '\n') {
      at_line_start = true;
    } else if (c != ' ' && c != '\t') {
      at_line_start = false;
    }
  }
  return out;
}

bool is_keyword(const std::string& ident) {
  static const char* kw[] = {"if", "for", "while", "switch", "sizeof", "do", "else", "return",
                             "case", "defined"};
  for (const char* k : kw) {
    if (ident == k) return true;
  }
  return false;
}

int fail(const std::string& msg) {
  std::fprintf(stderr, "mockacc: error: %s\n", msg.c_str());
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  std::string src_path;
  std::string out_path;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "-o") {
      if (i + 1 >= argc) {
        std::fprintf(stderr, "mockacc: missing argument to -o\n");
        return 2;
      }
      out_path = argv[++i];
    } else if (!arg.empty() && arg[0] == '-') {
      // accept and ignore compiler-ish flags (-acc, -O2, ...)
    } else if (src_path.empty()) {
      src_path = arg;
    } else {
      std::fprintf(stderr, "mockacc: unexpected argument '%s'\n", arg.c_str());
      return 2;
    }
  }
  if (src_path.empty() || out_path.empty()) {
    std::fprintf(stderr, "usage: mockacc [flags...] <src> -o <out>\n");
    return 2;
  }

  SourceUnit unit;
  std::vector<LoopSite> loops;
  try {
    unit = SourceUnit::from_file(src_path);
    loops = acctune::scan_loops(unit);
  } catch (const acctune::Error& e) {
    return fail(e.what());
  }

  // Attach each `#pragma acc kernels` line to the next loop. Repeated
  // directives above one loop collapse to a single annotation.
  static const std::regex pragma_re(R"(^[ \t]*#[ \t]*pragma[ \t]+acc[ \t]+kernels\b)");
  std::vector<Annotation> annotated;
  std::size_t pos = 0;
  while (pos < unit.text.size()) {
    std::size_t eol = unit.text.find('\n', pos);
    if (eol == std::string::npos) eol = unit.text.size();
    const std::string line = unit.text.substr(pos, eol - pos);
    if (std::regex_search(line, pragma_re)) {
      const LoopSite* target = nullptr;
      for (const auto& l : loops) {
        if (l.header_start > eol) {
          target = &l;
          break;
        }
      }
      if (!target) {
        return fail("kernels directive not attached to a loop (" + src_path + ": line " +
                    std::to_string(unit.lines.line_col_of(pos).line) + ")");
      }
      if (annotated.empty() || annotated.back().loop_id != target->id) {
        annotated.push_back({target->id, unit.lines.line_col_of(target->header_start).line});
      }
    }
    pos = eol + 1;
  }

  const std::string code = blank_noncode(unit.text);
  static const std::regex call_re(R"(([A-Za-z_]\w*)\s*\()");
  static const std::regex exit_re(R"(\b(break|return|goto)\b)");
  static const std::regex dep_re(
      R"((\w+)\s*\[\s*(\w+)\s*\]\s*=[^;=][^;]*\b\1\s*\[\s*\2\s*[-+]\s*\d+\s*\])");

  bool failed = false;
  auto diag = [&](const Annotation& a, const std::string& msg) {
    std::fprintf(stderr, "mockacc: error: %s (%s: line %zu)\n", msg.c_str(), src_path.c_str(),
                 a.line);
    failed = true;
  };

  for (const auto& a : annotated) {
    const LoopSite& site = loops[a.loop_id];

    bool nested = false;
    for (const auto& other : annotated) {
      if (other.loop_id != a.loop_id && loops[other.loop_id].body_span.contains(site.header_start)) {
        nested = true;
        break;
      }
    }
    if (nested) {
      diag(a, "compute regions may not be nested");
      continue;
    }

    const std::string body = code.substr(site.body_span.begin,
                                         site.body_span.end - site.body_span.begin);

    std::smatch m;
    bool called = false;
    auto begin = std::sregex_iterator(body.begin(), body.end(), call_re);
    for (auto it = begin; it != std::sregex_iterator(); ++it) {
      if (!is_keyword((*it)[1].str())) {
        diag(a, "call to '" + (*it)[1].str() + "' with no acc routine information");
        called = true;
        break;
      }
    }
    if (called) continue;

    if (std::regex_search(body, m, exit_re)) {
      diag(a, "branching out of compute region ('" + m[1].str() + "')");
      continue;
    }

    if (std::regex_search(body, m, dep_re)) {
      diag(a, "loop carried dependence of '" + m[1].str() + "' prevents parallelization");
      continue;
    }
  }

  if (failed) return 1;

  const double elapsed = std::max(0.05, 1.0 - 0.08 * static_cast<double>(annotated.size()));
  std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
  if (!out) {
    std::fprintf(stderr, "mockacc: cannot write '%s'\n", out_path.c_str());
    return 2;
  }
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", elapsed);
  out << "#!/bin/sh\necho \"elapsed: " << buf << " s\"\n";
  out.close();

  std::error_code ec;
  fs::permissions(out_path,
                  fs::perms::owner_exec | fs::perms::group_exec | fs::perms::others_exec,
                  fs::perm_options::add, ec);
  if (ec) {
    std::fprintf(stderr, "mockacc: cannot mark '%s' executable\n", out_path.c_str());
    return 2;
  }
  return 0;
}
