#include "acctune/source_model.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace acctune {

LineIndex LineIndex::build(std::string_view text) {
  LineIndex idx;
  idx.line_starts_.push_back(0);
  for (std::size_t i = 0; i < text.size(); ++i)
    if (text[i] == '\n') idx.line_starts_.push_back(i + 1);
  return idx;
}

LineIndex::LineCol LineIndex::line_col_of(std::size_t offset) const {
  auto it = std::upper_bound(line_starts_.begin(), line_starts_.end(), offset);
  std::size_t line = static_cast<std::size_t>(it - line_starts_.begin());  // 1-based
  return {line, offset - line_starts_[line - 1]};
}

std::size_t LineIndex::offset_of(LineCol lc) const {
  return line_starts_[lc.line - 1] + lc.column;
}

std::size_t LineIndex::line_start_of(std::size_t offset) const {
  return line_starts_[line_col_of(offset).line - 1];
}

SourceUnit SourceUnit::from_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ScanError("cannot read source file: " + p.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_string(p.string(), buf.str());
}

SourceUnit SourceUnit::from_string(std::string path, std::string text) {
  SourceUnit unit;
  unit.path = std::move(path);
  unit.text = std::move(text);
  unit.lines = LineIndex::build(unit.text);
  return unit;
}

namespace {

bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$';
}

// Marks each byte that is plain code: not inside a comment, string or char
// literal, and not on a preprocessor line. Also checks global brace balance,
// since a file whose braces do not balance cannot be scanned reliably.
class CodeMask {
 public:
  CodeMask(std::string_view text, const LineIndex& lines) : text_(text), mask_(text.size(), false) {
    build(lines);
  }

  bool is_code(std::size_t i) const { return mask_[i]; }

 private:
  void build(const LineIndex& lines) {
    enum class Mode { Code, LineComment, BlockComment, String, Char, Preprocessor };
    Mode mode = Mode::Code;
    long brace_depth = 0;
    bool at_line_start = true;  // only whitespace/comments seen since the last newline
    std::size_t literal_open = 0;

    auto fail_literal = [&](std::size_t at, const char* what) {
      auto lc = lines.line_col_of(at);
      throw UnterminatedLiteral(std::string(what) + " starting at line " + std::to_string(lc.line));
    };

    std::size_t n = text_.size();
    for (std::size_t i = 0; i < n; ++i) {
      char c = text_[i];
      char next = i + 1 < n ? text_[i + 1] : '\0';
      switch (mode) {
        case Mode::Code:
          if (c == '/' && next == '/') {
            mode = Mode::LineComment;
            ++i;
          } else if (c == '/' && next == '*') {
            mode = Mode::BlockComment;
            literal_open = i;
            ++i;
          } else if (c == '"') {
            mode = Mode::String;
            literal_open = i;
            at_line_start = false;
          } else if (c == '\'' && !(i > 0 && is_ident_char(text_[i - 1]))) {
            // A quote right after an identifier/number char is a digit
            // separator (1'000), not a char literal.
            mode = Mode::Char;
            literal_open = i;
            at_line_start = false;
          } else if (c == '#' && at_line_start) {
            mode = Mode::Preprocessor;
          } else {
            if (c == '\n') {
              at_line_start = true;
            } else if (!std::isspace(static_cast<unsigned char>(c))) {
              at_line_start = false;
            }
            if (c == '{') ++brace_depth;
            if (c == '}') {
              --brace_depth;
              if (brace_depth < 0) {
                auto lc = lines.line_col_of(i);
                throw UnbalancedBraces("unmatched '}' at line " + std::to_string(lc.line));
              }
            }
            mask_[i] = true;
          }
          break;
        case Mode::LineComment:
          if (c == '\\' && next == '\n') {
            ++i;  // line continuation keeps the comment going
          } else if (c == '\n') {
            mode = Mode::Code;
            at_line_start = true;
          }
          break;
        case Mode::BlockComment:
          if (c == '*' && next == '/') {
            mode = Mode::Code;
            ++i;
          }
          break;
        case Mode::String:
        case Mode::Char:
          if (c == '\\') {
            if (next == '\0') fail_literal(literal_open, "unterminated literal");
            ++i;  // escape consumes the next byte, including a newline
          } else if (c == '\n') {
            fail_literal(literal_open, "unterminated literal");
          } else if (c == '"' && mode == Mode::String) {
            mode = Mode::Code;
          } else if (c == '\'' && mode == Mode::Char) {
            mode = Mode::Code;
          }
          break;
        case Mode::Preprocessor:
          if (c == '\\' && next == '\n') {
            ++i;  // directive continues on the next line
          } else if (c == '\n') {
            mode = Mode::Code;
            at_line_start = true;
          }
          break;
      }
    }
    if (mode == Mode::String || mode == Mode::Char) fail_literal(literal_open, "unterminated literal");
    if (mode == Mode::BlockComment) fail_literal(literal_open, "unterminated block comment");
    if (brace_depth != 0) throw UnbalancedBraces("file ends with " + std::to_string(brace_depth) + " unclosed brace(s)");
  }

  std::string_view text_;
  std::vector<bool> mask_;
};

// Statement-level walk over masked code. Visits every byte once; records a
// LoopSite for each `for` whose body it scans recursively, so sites come out
// in document order with correct depths.
class LoopScanner {
 public:
  LoopScanner(const SourceUnit& unit, const CodeMask& mask)
      : unit_(unit), text_(unit.text), mask_(mask) {}

  std::vector<LoopSite> scan() {
    std::size_t pos = 0;
    while (true) {
      pos = skip_noncode(pos);
      if (pos >= text_.size()) break;
      pos = scan_statement(pos, 0);
    }
    return std::move(sites_);
  }

 private:
  std::size_t skip_noncode(std::size_t pos) const {
    while (pos < text_.size() &&
           (!mask_.is_code(pos) || std::isspace(static_cast<unsigned char>(text_[pos]))))
      ++pos;
    return pos;
  }

  bool keyword_at(std::size_t pos, std::string_view kw) const {
    if (pos + kw.size() > text_.size()) return false;
    if (!mask_.is_code(pos)) return false;
    if (text_.compare(pos, kw.size(), kw) != 0) return false;
    if (pos > 0 && is_ident_char(text_[pos - 1]) && mask_.is_code(pos - 1)) return false;
    std::size_t after = pos + kw.size();
    if (after < text_.size() && is_ident_char(text_[after]) && mask_.is_code(after)) return false;
    return true;
  }

  [[noreturn]] void fail(std::size_t at, const std::string& what) const {
    std::size_t line = at < text_.size() ? unit_.lines.line_col_of(at).line : unit_.lines.line_count();
    throw ScanError(what + " near line " + std::to_string(line) + " of " + unit_.path);
  }

  // pos must sit on the opening delimiter. Returns one past the matching
  // closing delimiter, ignoring delimiters in non-code bytes.
  std::size_t skip_balanced(std::size_t pos, char open, char close) const {
    long depth = 0;
    for (std::size_t i = pos; i < text_.size(); ++i) {
      if (!mask_.is_code(i)) continue;
      if (text_[i] == open) ++depth;
      if (text_[i] == close) {
        --depth;
        if (depth == 0) return i + 1;
      }
    }
    fail(pos, std::string("unterminated '") + open + "' group");
  }

  // Scans the interior of a brace block, recording loops, and returns one
  // past the closing brace.
  std::size_t scan_block(std::size_t pos, int depth) {
    std::size_t p = pos + 1;  // past '{'
    while (true) {
      p = skip_noncode(p);
      if (p >= text_.size()) fail(pos, "unterminated '{' block");
      if (mask_.is_code(p) && text_[p] == '}') return p + 1;
      p = scan_statement(p, depth);
    }
  }

  // Scans one statement starting at the code byte `pos`; returns one past
  // its end. `depth` is the for-nesting depth a loop found here would get.
  std::size_t scan_statement(std::size_t pos, int depth) {
    char c = text_[pos];
    if (c == '{') return scan_block(pos, depth);
    if (c == ';') return pos + 1;
    if (keyword_at(pos, "for")) return scan_for(pos, depth);
    if (keyword_at(pos, "if")) {
      std::size_t p = skip_noncode(pos + 3);
      if (p < text_.size() && text_[p] == '(') p = skip_balanced(p, '(', ')');
      p = skip_noncode(p);
      if (p >= text_.size()) fail(pos, "if without a body");
      p = scan_statement(p, depth);
      std::size_t q = skip_noncode(p);
      if (q < text_.size() && keyword_at(q, "else")) {
        q = skip_noncode(q + 4);
        if (q >= text_.size()) fail(pos, "else without a body");
        return scan_statement(q, depth);
      }
      return p;
    }
    if (keyword_at(pos, "while") || keyword_at(pos, "switch")) {
      std::size_t p = skip_noncode(pos + (text_[pos] == 'w' ? 5 : 6));
      if (p < text_.size() && text_[p] == '(') p = skip_balanced(p, '(', ')');
      p = skip_noncode(p);
      if (p >= text_.size()) fail(pos, "loop/switch without a body");
      return scan_statement(p, depth);
    }
    if (keyword_at(pos, "do")) {
      std::size_t p = skip_noncode(pos + 2);
      if (p >= text_.size()) fail(pos, "do without a body");
      p = scan_statement(p, depth);
      p = skip_noncode(p);
      if (p < text_.size() && keyword_at(p, "while")) {
        p = skip_noncode(p + 5);
        if (p < text_.size() && text_[p] == '(') p = skip_balanced(p, '(', ')');
        p = skip_noncode(p);
        if (p < text_.size() && text_[p] == ';') ++p;
      }
      return p;
    }
    // Expression, declaration, or definition. Ends at a ';' outside parens.
    // Brace groups on the way (function bodies, initializer lists, lambdas)
    // are scanned for loops; a group at paren depth 0 not followed by more
    // of the statement ends it (function definitions have no trailing ';').
    long paren = 0;
    std::size_t p = pos;
    while (p < text_.size()) {
      if (!mask_.is_code(p)) {
        ++p;
        continue;
      }
      char d = text_[p];
      if (d == '(' || d == '[') {
        ++paren;
      } else if (d == ')' || d == ']') {
        --paren;
      } else if (d == '{') {
        p = scan_block(p, depth);
        if (paren > 0) continue;
        std::size_t q = skip_noncode(p);
        if (q < text_.size() && mask_.is_code(q) && text_[q] == ';') return q + 1;
        return p;  // e.g. a function definition
      } else if (d == ';' && paren <= 0) {
        return p + 1;
      } else if (d == '}') {
        // Malformed statement running into the enclosing block; let the
        // caller see the brace.
        return p;
      }
      ++p;
    }
    return p;
  }

  std::size_t scan_for(std::size_t pos, int depth) {
    LoopSite site;
    site.header_start = pos;
    site.depth = depth;
    std::size_t line_start = unit_.lines.line_start_of(pos);
    std::size_t ws_end = line_start;
    while (ws_end < text_.size() && (text_[ws_end] == ' ' || text_[ws_end] == '\t')) ++ws_end;
    site.indent = std::string(text_.substr(line_start, ws_end - line_start));

    std::size_t p = skip_noncode(pos + 3);
    if (p >= text_.size() || text_[p] != '(') fail(pos, "for without a '(' header");
    p = skip_balanced(p, '(', ')');
    std::size_t body_begin = skip_noncode(p);
    if (body_begin >= text_.size()) fail(pos, "for without a body");

    // Reserve the id before scanning the body so ids follow header order.
    std::size_t index = sites_.size();
    site.id = static_cast<int>(index);
    sites_.push_back(site);

    std::size_t body_end = scan_statement(body_begin, depth + 1);
    sites_[index].body_span = {body_begin, body_end};
    return body_end;
  }

  const SourceUnit& unit_;
  std::string_view text_;
  const CodeMask& mask_;
  std::vector<LoopSite> sites_;
};

}  // namespace

std::vector<LoopSite> scan_loops(const SourceUnit& unit) {
  CodeMask mask(unit.text, unit.lines);
  return LoopScanner(unit, mask).scan();
}

std::string render_variant(const CandidateSet& cs, const Genome& genome) {
  if (genome.size() != cs.gene_length())
    throw GenomeLengthMismatch("genome length " + std::to_string(genome.size()) +
                               " does not match gene length " + std::to_string(cs.gene_length()));

  // (insertion offset, directive line) pairs against the original text.
  // Offsets are line starts, so inserting never splits existing content; a
  // stable sort keeps same-line directives in gene order.
  std::vector<std::pair<std::size_t, std::string>> inserts;
  for (std::size_t k = 0; k < genome.size(); ++k) {
    if (!genome.test(k)) continue;
    const LoopSite& site = cs.candidate(k);
    std::size_t at = cs.unit.lines.line_start_of(site.header_start);
    inserts.emplace_back(at, site.indent + std::string(kOffloadDirective) + "\n");
  }
  std::stable_sort(inserts.begin(), inserts.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });

  const std::string& text = cs.unit.text;
  std::string out;
  out.reserve(text.size() + inserts.size() * (kOffloadDirective.size() + 8));
  std::size_t from = 0;
  for (const auto& [at, line] : inserts) {
    out.append(text, from, at - from);
    out.append(line);
    from = at;
  }
  out.append(text, from, text.size() - from);
  return out;
}

}  // namespace acctune
