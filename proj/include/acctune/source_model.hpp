#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "acctune/errors.hpp"
#include "acctune/genome.hpp"

namespace acctune {

// The directive inserted above offloaded loops. No clauses: the compiler is
// left to pick the kernel mapping.
inline constexpr std::string_view kOffloadDirective = "#pragma acc kernels";

// Byte-offset -> (line, column) index. Lines are 1-based, columns 0-based.
class LineIndex {
 public:
  struct LineCol {
    std::size_t line;    // 1-based
    std::size_t column;  // 0-based byte column
  };

  static LineIndex build(std::string_view text);

  LineCol line_col_of(std::size_t offset) const;
  std::size_t offset_of(LineCol lc) const;
  // Byte offset of the start of the line containing `offset`.
  std::size_t line_start_of(std::size_t offset) const;
  std::size_t line_count() const { return line_starts_.size(); }

 private:
  std::vector<std::size_t> line_starts_;  // line_starts_[k] = offset of line k+1
};

// One source file, immutable for the duration of a run. Rendering produces
// new text; the unit itself is never modified.
struct SourceUnit {
  std::string path;
  std::string text;
  LineIndex lines;

  static SourceUnit from_file(const std::filesystem::path& p);
  static SourceUnit from_string(std::string path, std::string text);
};

struct ByteSpan {
  std::size_t begin = 0;
  std::size_t end = 0;  // one past the last byte

  bool contains(std::size_t offset) const { return begin <= offset && offset < end; }
  bool contains(const ByteSpan& other) const { return begin <= other.begin && other.end <= end; }
};

// One discovered `for` statement.
struct LoopSite {
  int id = 0;                  // 0..n-1 in document order
  std::size_t header_start = 0;  // offset of the `for` keyword
  ByteSpan body_span;          // loop body: brace block or single statement
  int depth = 0;               // for-nesting depth, 0 = outermost
  std::string indent;          // whitespace prefix of the line holding the header
};

// Every `for` statement outside comments, string/char literals and
// preprocessor lines, in document order, with nesting depths and body spans.
// Single forward pass; no preprocessing, so macro-generated loops are
// invisible. Throws UnbalancedBraces / UnterminatedLiteral on files the
// lexer cannot make sense of.
std::vector<LoopSite> scan_loops(const SourceUnit& unit);

// The loops a genome ranges over. Gene position k maps to
// all_loops[candidate_ids[k]]; the bijection is fixed for the run.
struct CandidateSet {
  SourceUnit unit;
  std::vector<LoopSite> all_loops;
  std::vector<int> candidate_ids;  // document order, subset of loop ids

  std::size_t gene_length() const { return candidate_ids.size(); }
  const LoopSite& candidate(std::size_t gene) const { return all_loops[candidate_ids[gene]]; }
};

// New source text with one directive line (loop indent + kOffloadDirective)
// inserted immediately before the `for` line of every candidate whose gene
// bit is 1. Insertion offsets are computed against the original text, so any
// number of insertions leave all other bytes unchanged.
std::string render_variant(const CandidateSet& cs, const Genome& genome);

}  // namespace acctune
