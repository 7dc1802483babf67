#include "spcc/codec.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <map>
#include <set>
#include <string>

#include "spcc/error.hpp"

namespace spcc {

namespace {

// ---------------------------------------------------------------------------
// Printing
// ---------------------------------------------------------------------------

std::string format_scale(double scale) {
  if (scale == 0.0) scale = 0.0;  // folds -0.0
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), scale, std::chars_format::fixed, 6);
  return std::string(buf, res.ptr);
}

std::string point(const Point2i& p) {
  return "(" + std::to_string(p.x) + "," + std::to_string(p.y) + ")";
}

void append_pair(std::string& out, const SketchExtrudePair& pair, std::size_t pair_number,
                 std::size_t& loop_counter) {
  const std::string sketch = "sketch_" + std::to_string(pair_number);
  out += sketch + " = Sketch()\n";
  std::vector<std::string> loop_names;
  for (const auto& loop : pair.sketch.loops) {
    const std::string name = "loop" + std::to_string(++loop_counter);
    loop_names.push_back(name);
    out += name + " = Loop()\n";
    for (const auto& curve : loop.curves) {
      if (const auto* line = std::get_if<Line>(&curve)) {
        out += name + ".Line(endpoint=" + point(line->end) + ")\n";
      } else if (const auto* arc = std::get_if<Arc>(&curve)) {
        out += name + ".Arc(endpoint=" + point(arc->end) + ",degrees=" +
               std::to_string(arc->sweep) + ",counterclockwise=" + (arc->ccw ? "True" : "False") +
               ")\n";
      } else {
        const auto& circle = std::get<Circle>(curve);
        out += name + ".Circle(center=" + point(circle.center) +
               ",radius=" + std::to_string(circle.radius) + ")\n";
      }
    }
  }
  for (const auto& name : loop_names) out += sketch + ".append(" + name + ")\n";

  const auto& e = pair.extrude;
  out += "extrude" + std::to_string(pair_number) + " = Extrude(" + sketch + ",origin=(" +
         std::to_string(e.origin.x) + "," + std::to_string(e.origin.y) + "," +
         std::to_string(e.origin.z) + "),angles=(" + std::to_string(e.orient[0]) + "," +
         std::to_string(e.orient[1]) + "," + std::to_string(e.orient[2]) +
         "),scale=" + format_scale(e.scale) + ",dist1=" + std::to_string(e.dist1) +
         ",dist2=" + std::to_string(e.dist2) + ",op=" + to_string(e.op) +
         ",extent=" + to_string(e.extent) + ")\n";
}

void require_validity(const CadModel& model) {
  const auto violations = validate_static(model);
  if (violations.empty()) return;
  std::vector<std::string> messages;
  for (const auto& v : violations) messages.push_back(v.message);
  const std::string summary = "invalid model: " + messages.front();
  throw ValidationError(summary, std::move(messages));
}

void require_line(const std::string& text, const std::string& what) {
  if (text.empty()) throw StructuralError(what + " is empty");
  if (text.find_first_of("\r\n") != std::string::npos) {
    throw StructuralError(what + " spans several lines");
  }
  if (std::isspace(static_cast<unsigned char>(text.front())) ||
      std::isspace(static_cast<unsigned char>(text.back()))) {
    throw StructuralError(what + " has surrounding whitespace");
  }
}

// ---------------------------------------------------------------------------
// Lexing
// ---------------------------------------------------------------------------

enum class Tok { Ident, Int, Real, Punct, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  std::size_t column = 0;  // 1-based
};

std::vector<Token> lex_line(std::string_view line, std::size_t line_no) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    const char c = line[i];
    if (c == ' ' || c == '\t') {
      ++i;
      continue;
    }
    const std::size_t start = i;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      while (i < line.size() &&
             (std::isalnum(static_cast<unsigned char>(line[i])) || line[i] == '_')) {
        ++i;
      }
      out.push_back({Tok::Ident, std::string(line.substr(start, i - start)), start + 1});
    } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+') {
      if (c == '-' || c == '+') ++i;
      const std::size_t digits = i;
      while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
      bool real = false;
      if (i < line.size() && line[i] == '.') {
        real = true;
        ++i;
        while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
      }
      if (i == digits || (real && i == digits + 1)) {
        throw LexicalError(line_no, start + 1, std::string(line.substr(start, i - start + 1)),
                           "malformed number");
      }
      if (i < line.size() && (std::isalpha(static_cast<unsigned char>(line[i])) || line[i] == '_')) {
        throw LexicalError(line_no, start + 1, std::string(line.substr(start, i - start + 1)),
                           "malformed number");
      }
      out.push_back({real ? Tok::Real : Tok::Int, std::string(line.substr(start, i - start)),
                     start + 1});
    } else if (c == '=' || c == '(' || c == ')' || c == ',' || c == '.') {
      out.push_back({Tok::Punct, std::string(1, c), start + 1});
      ++i;
    } else {
      throw LexicalError(line_no, start + 1, std::string(1, c), "unexpected character");
    }
  }
  out.push_back({Tok::End, "", line.size() + 1});
  return out;
}

class Cursor {
 public:
  Cursor(std::vector<Token> tokens, std::size_t line_no)
      : tokens_(std::move(tokens)), line_(line_no) {}

  const Token& peek() const { return tokens_[pos_]; }
  std::size_t line() const { return line_; }

  [[noreturn]] void fail(const std::string& message) const {
    const Token& t = peek();
    throw LexicalError(line_, t.column, t.kind == Tok::End ? "<end of line>" : t.text, message);
  }

  std::string ident() {
    if (peek().kind != Tok::Ident) fail("expected identifier");
    return tokens_[pos_++].text;
  }

  void punct(char c) {
    if (peek().kind != Tok::Punct || peek().text[0] != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  bool accept_punct(char c) {
    if (peek().kind == Tok::Punct && peek().text[0] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void keyword(std::string_view word) {
    if (peek().kind != Tok::Ident || peek().text != word) fail("expected '" + std::string(word) + "'");
    ++pos_;
  }

  int integer() {
    if (peek().kind != Tok::Int) fail("expected integer");
    const std::string& text = peek().text;
    const char* first = text.data();
    if (*first == '+') ++first;
    int value = 0;
    auto res = std::from_chars(first, text.data() + text.size(), value);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) fail("integer out of range");
    ++pos_;
    return value;
  }

  double real() {
    if (peek().kind != Tok::Int && peek().kind != Tok::Real) fail("expected number");
    const std::string& text = peek().text;
    const char* first = text.data();
    if (*first == '+') ++first;
    double value = 0;
    auto res = std::from_chars(first, text.data() + text.size(), value);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) fail("number out of range");
    ++pos_;
    return value;
  }

  bool boolean() {
    if (peek().kind == Tok::Ident) {
      const std::string& t = peek().text;
      if (t == "True" || t == "true") {
        ++pos_;
        return true;
      }
      if (t == "False" || t == "false") {
        ++pos_;
        return false;
      }
    }
    fail("expected True or False");
  }

  void end() {
    if (peek().kind != Tok::End) fail("unexpected trailing token");
  }

 private:
  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  std::size_t line_;
};

Point2i tuple2(Cursor& cur) {
  cur.punct('(');
  Point2i p;
  p.x = cur.integer();
  cur.punct(',');
  p.y = cur.integer();
  cur.punct(')');
  return p;
}

std::array<int, 3> tuple3(Cursor& cur) {
  cur.punct('(');
  std::array<int, 3> v{};
  v[0] = cur.integer();
  cur.punct(',');
  v[1] = cur.integer();
  cur.punct(',');
  v[2] = cur.integer();
  cur.punct(')');
  return v;
}

void check_range(int v, int lo, int hi, const char* parameter) {
  if (v < lo || v > hi) {
    throw RangeError(parameter, "value " + std::to_string(v) + " outside [" + std::to_string(lo) +
                                    ", " + std::to_string(hi) + "]");
  }
}

void check_point(const Point2i& p, const char* parameter) {
  check_range(p.x, kCoordMin, kCoordMax, parameter);
  check_range(p.y, kCoordMin, kCoordMax, parameter);
}

// Parses `name=value` pairs in any order until ')'. Each handler consumes
// the value; every listed key is required exactly once.
template <typename Handler>
void keyword_args(Cursor& cur, const std::set<std::string>& keys, Handler&& handle,
                  bool leading_comma) {
  std::set<std::string> seen;
  bool first = !leading_comma;
  while (!cur.accept_punct(')')) {
    if (!first) cur.punct(',');
    first = false;
    const std::string key = cur.ident();
    if (!keys.count(key)) cur.fail("unknown argument '" + key + "'");
    if (!seen.insert(key).second) cur.fail("duplicate argument '" + key + "'");
    cur.punct('=');
    handle(key);
  }
  for (const auto& k : keys) {
    if (!seen.count(k)) cur.fail("missing argument '" + k + "'");
  }
}

BooleanOp parse_op(Cursor& cur) {
  const std::string name = cur.ident();
  if (name == "NewBody") return BooleanOp::NewBody;
  if (name == "Join") return BooleanOp::Join;
  if (name == "Cut") return BooleanOp::Cut;
  if (name == "Intersect") return BooleanOp::Intersect;
  throw RangeError("op", "unknown boolean operation '" + name + "'");
}

ExtentType parse_extent(Cursor& cur) {
  const std::string name = cur.ident();
  if (name == "OneSided") return ExtentType::OneSided;
  if (name == "Symmetric") return ExtentType::Symmetric;
  if (name == "TwoSided") return ExtentType::TwoSided;
  throw RangeError("extent", "unknown extent type '" + name + "'");
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool starts_with(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

struct Header {
  std::size_t first_pair = 0;
  ComponentAnnotation annotation;
};

struct ParseState {
  std::optional<std::string> abstract_text;
  std::optional<std::string> detailed;
  std::vector<Header> headers;
  bool saw_other_comment = false;

  struct PendingLoop {
    Loop loop;
    bool appended = false;
  };
  std::map<std::string, PendingLoop> loops;
  std::map<std::string, Sketch> sketches;  // defined but not yet extruded
  std::set<std::string> consumed_sketches;
  std::set<std::string> extrude_names;
  CadModel model;
};

void parse_comment(std::string_view line, std::size_t line_no, ParseState& st, bool annotations) {
  if (!annotations) return;
  auto text_after = [&](std::string_view prefix) {
    return std::string(trim(line.substr(prefix.size())));
  };
  // Prefix matches allow the single space to be missing after trimming.
  const std::string_view global = trim(kGlobalPrefix);
  const std::string_view details = trim(kDetailsPrefix);
  if (starts_with(line, global)) {
    if (st.abstract_text || !st.headers.empty() || !st.model.pairs.empty()) {
      throw StructuralError("line " + std::to_string(line_no) + ": misplaced model description");
    }
    st.abstract_text = text_after(global);
    if (st.abstract_text->empty()) {
      throw StructuralError("line " + std::to_string(line_no) + ": empty model description");
    }
    return;
  }
  if (starts_with(line, details)) {
    if (!st.abstract_text || st.detailed || !st.headers.empty() || !st.model.pairs.empty()) {
      throw StructuralError("line " + std::to_string(line_no) + ": misplaced details line");
    }
    st.detailed = text_after(details);
    if (st.detailed->empty()) {
      throw StructuralError("line " + std::to_string(line_no) + ": empty details line");
    }
    return;
  }
  if (starts_with(line, kComponentPrefix)) {
    std::string_view rest = line.substr(kComponentPrefix.size());
    std::size_t digits = 0;
    while (digits < rest.size() && std::isdigit(static_cast<unsigned char>(rest[digits]))) ++digits;
    std::size_t index = 0;
    auto res = std::from_chars(rest.data(), rest.data() + digits, index);
    if (digits == 0 || res.ec != std::errc()) {
      throw LexicalError(line_no, kComponentPrefix.size() + 1, std::string(rest.substr(0, 1)),
                         "expected component number");
    }
    if (index != st.headers.size() + 1) {
      throw StructuralError("line " + std::to_string(line_no) + ": component " +
                            std::to_string(index) + " out of sequence");
    }
    rest.remove_prefix(digits);
    Header header;
    header.first_pair = st.model.pairs.size();
    if (starts_with(rest, " (")) {
      const std::size_t close = rest.find("):");
      if (close == std::string_view::npos) {
        throw LexicalError(line_no, line.size(), std::string(rest), "unterminated component name");
      }
      header.annotation.name = std::string(trim(rest.substr(2, close - 2)));
      rest.remove_prefix(close + 2);
    } else if (starts_with(rest, ":")) {
      rest.remove_prefix(1);
    } else {
      throw LexicalError(line_no, kComponentPrefix.size() + digits + 1, std::string(rest.substr(0, 1)),
                         "expected ':' or '(' after component number");
    }
    header.annotation.description = std::string(trim(rest));
    if (header.annotation.description.empty()) {
      throw StructuralError("line " + std::to_string(line_no) + ": empty component description");
    }
    if (!st.sketches.empty()) {
      throw StructuralError("line " + std::to_string(line_no) +
                            ": component header inside an unfinished sketch-extrude pair");
    }
    st.headers.push_back(std::move(header));
    return;
  }
  st.saw_other_comment = true;
}

void parse_statement(std::string_view line, std::size_t line_no, ParseState& st) {
  Cursor cur(lex_line(line, line_no), line_no);
  const std::string target = cur.ident();

  if (cur.accept_punct('=')) {
    const std::string ctor = cur.ident();
    if (ctor == "Sketch" || ctor == "Loop") {
      cur.punct('(');
      cur.punct(')');
      cur.end();
      if (st.sketches.count(target) || st.loops.count(target) || st.consumed_sketches.count(target) ||
          st.extrude_names.count(target)) {
        throw StructuralError("line " + std::to_string(line_no) + ": redefinition of '" + target + "'");
      }
      if (ctor == "Sketch") {
        st.sketches.emplace(target, Sketch{});
      } else {
        st.loops.emplace(target, ParseState::PendingLoop{});
      }
      return;
    }
    if (ctor != "Extrude") cur.fail("expected Sketch(), Loop() or Extrude(...)");
    cur.punct('(');
    const std::string sketch_name = cur.ident();
    auto it = st.sketches.find(sketch_name);
    if (it == st.sketches.end()) {
      throw StructuralError("line " + std::to_string(line_no) + ": extrusion references " +
                            (st.consumed_sketches.count(sketch_name) ? "already extruded" : "undefined") +
                            " sketch '" + sketch_name + "'");
    }
    if (st.extrude_names.count(target) || st.loops.count(target)) {
      throw StructuralError("line " + std::to_string(line_no) + ": redefinition of '" + target + "'");
    }
    ExtrudeCmd e;
    keyword_args(
        cur, {"origin", "angles", "scale", "dist1", "dist2", "op", "extent"},
        [&](const std::string& key) {
          if (key == "origin") {
            const auto v = tuple3(cur);
            for (int c : v) check_range(c, kCoordMin, kCoordMax, "origin");
            e.origin = {v[0], v[1], v[2]};
          } else if (key == "angles") {
            e.orient = tuple3(cur);
            check_range(e.orient[0], kAngleMin, kAngleMax, "theta");
            check_range(e.orient[1], kAngleMin, kAngleMax, "phi");
            check_range(e.orient[2], kAngleMin, kAngleMax, "gamma");
          } else if (key == "scale") {
            e.scale = cur.real();
            if (!(e.scale >= kScaleMin && e.scale <= kScaleMax)) {
              throw RangeError("scale", "value outside [0, 2]");
            }
          } else if (key == "dist1") {
            e.dist1 = cur.integer();
            check_range(e.dist1, kLengthMin, kLengthMax, "dist1");
          } else if (key == "dist2") {
            e.dist2 = cur.integer();
            check_range(e.dist2, kLengthMin, kLengthMax, "dist2");
          } else if (key == "op") {
            e.op = parse_op(cur);
          } else {
            e.extent = parse_extent(cur);
          }
        },
        /*leading_comma=*/true);
    cur.end();
    st.model.pairs.push_back({std::move(it->second), e});
    st.consumed_sketches.insert(sketch_name);
    st.sketches.erase(it);
    st.extrude_names.insert(target);
    return;
  }

  cur.punct('.');
  const std::string method = cur.ident();
  cur.punct('(');

  if (method == "append") {
    const std::string loop_name = cur.ident();
    cur.punct(')');
    cur.end();
    auto sk = st.sketches.find(target);
    if (sk == st.sketches.end()) {
      throw StructuralError("line " + std::to_string(line_no) + ": append to undefined sketch '" +
                            target + "'");
    }
    auto lp = st.loops.find(loop_name);
    if (lp == st.loops.end()) {
      throw StructuralError("line " + std::to_string(line_no) + ": append of undefined loop '" +
                            loop_name + "'");
    }
    if (lp->second.appended) {
      throw StructuralError("line " + std::to_string(line_no) + ": loop '" + loop_name +
                            "' appended twice");
    }
    lp->second.appended = true;
    sk->second.loops.push_back(lp->second.loop);
    return;
  }

  auto lp = st.loops.find(target);
  if (lp == st.loops.end()) {
    throw StructuralError("line " + std::to_string(line_no) + ": curve added to undefined loop '" +
                          target + "'");
  }
  if (lp->second.appended) {
    throw StructuralError("line " + std::to_string(line_no) + ": curve added to loop '" + target +
                          "' after it was appended");
  }
  Loop& loop = lp->second.loop;
  if (method == "Line") {
    Line l;
    keyword_args(
        cur, {"endpoint"}, [&](const std::string&) { l.end = tuple2(cur); }, false);
    cur.end();
    check_point(l.end, "endpoint");
    loop.curves.emplace_back(l);
  } else if (method == "Arc") {
    Arc a;
    keyword_args(
        cur, {"endpoint", "degrees", "counterclockwise"},
        [&](const std::string& key) {
          if (key == "endpoint") {
            a.end = tuple2(cur);
          } else if (key == "degrees") {
            a.sweep = cur.integer();
          } else {
            a.ccw = cur.boolean();
          }
        },
        false);
    cur.end();
    check_point(a.end, "endpoint");
    check_range(a.sweep, kSweepMin, kSweepMax, "sweep");
    loop.curves.emplace_back(a);
  } else if (method == "Circle") {
    Circle c;
    keyword_args(
        cur, {"center", "radius"},
        [&](const std::string& key) {
          if (key == "center") {
            c.center = tuple2(cur);
          } else {
            c.radius = cur.integer();
          }
        },
        false);
    cur.end();
    check_point(c.center, "center");
    check_range(c.radius, kLengthMin, kLengthMax, "radius");
    loop.curves.emplace_back(c);
  } else {
    throw LexicalError(line_no, 1, method, "unknown method");
  }
}

ParseState parse_lines(std::string_view text, bool annotations) {
  ParseState st;
  bool ended = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view raw = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    const std::string_view line = trim(raw);
    if (line.empty()) {
      if (nl == text.size()) break;
      continue;
    }
    if (ended) {
      throw StructuralError("line " + std::to_string(line_no) + ": content after '# End of code'");
    }
    if (line.front() == '#') {
      if (line == kEndOfCode) {
        ended = true;
      } else {
        parse_comment(line, line_no, st, annotations);
      }
    } else {
      parse_statement(line, line_no, st);
    }
    if (nl == text.size()) break;
  }
  if (!ended) throw StructuralError("missing '# End of code' terminator");
  if (!st.sketches.empty()) {
    throw StructuralError("sketch '" + st.sketches.begin()->first + "' is never extruded");
  }
  for (const auto& [name, loop] : st.loops) {
    if (!loop.appended) throw StructuralError("loop '" + name + "' is never appended to a sketch");
  }
  if (!st.headers.empty() && st.headers.front().first_pair != 0) {
    throw StructuralError("code precedes the first component header");
  }
  for (std::size_t i = 0; i < st.headers.size(); ++i) {
    const std::size_t end =
        i + 1 < st.headers.size() ? st.headers[i + 1].first_pair : st.model.pairs.size();
    if (end == st.headers[i].first_pair) {
      throw StructuralError("component " + std::to_string(i + 1) + " has no sketch-extrude pair");
    }
  }
  require_validity(st.model);
  return st;
}

}  // namespace

const char* to_string(DocMode mode) {
  switch (mode) {
    case DocMode::Tilde: return "tilde";
    case DocMode::Dot: return "dot";
    case DocMode::CodeOnly: return "code";
  }
  return "?";
}

DocMode doc_mode_from_string(std::string_view name) {
  if (name == "tilde") return DocMode::Tilde;
  if (name == "dot") return DocMode::Dot;
  if (name == "code") return DocMode::CodeOnly;
  throw DomainError("unknown document mode '" + std::string(name) + "'");
}

DocMode effective_mode(const CadModel& model, DocMode mode, int threshold) {
  if (mode == DocMode::Dot && segment(model, threshold).size() == 1) return DocMode::Tilde;
  return mode;
}

std::string format_code_unchecked(const CadModel& model) {
  std::string out;
  std::size_t loop_counter = 0;
  for (std::size_t i = 0; i < model.pairs.size(); ++i) {
    append_pair(out, model.pairs[i], i + 1, loop_counter);
  }
  out += kEndOfCode;
  out += '\n';
  return out;
}

std::string print_code(const CadModel& model) {
  require_validity(model);
  return format_code_unchecked(model);
}

std::string print_spcc(const CadModel& model, const Annotations& annotations, DocMode mode,
                       int threshold) {
  if (mode == DocMode::CodeOnly) return print_code(model);
  require_validity(model);
  const auto components = segment(model, threshold);
  if (annotations.components.size() != components.size()) {
    throw StructuralError("annotation count " + std::to_string(annotations.components.size()) +
                          " differs from component count " + std::to_string(components.size()));
  }
  const bool single = components.size() == 1;

  std::string out;
  if (!single) {
    if (!annotations.global) throw StructuralError("multi-component document needs a global annotation");
    require_line(annotations.global->abstract_text, "abstract description");
    out += kGlobalPrefix;
    out += annotations.global->abstract_text + "\n";
    if (mode == DocMode::Tilde) {
      require_line(annotations.global->detailed, "detailed description");
      out += kDetailsPrefix;
      out += annotations.global->detailed + "\n";
    }
  }

  std::size_t loop_counter = 0;
  for (std::size_t c = 0; c < components.size(); ++c) {
    const auto& ann = annotations.components[c];
    require_line(ann.description, "component description");
    out += kComponentPrefix;
    out += std::to_string(c + 1);
    if (!ann.name.empty()) {
      require_line(ann.name, "component name");
      if (ann.name.find("):") != std::string::npos || ann.name.find('(') != std::string::npos) {
        throw StructuralError("component name may not contain '(' or '):'");
      }
      out += " (" + ann.name + ")";
    } else if (!single) {
      throw StructuralError("component " + std::to_string(c + 1) + " needs a name");
    }
    out += ": " + ann.description + "\n";
    for (std::size_t p = components[c].first; p < components[c].end(); ++p) {
      append_pair(out, model.pairs[p], p + 1, loop_counter);
    }
  }
  out += kEndOfCode;
  out += '\n';
  return out;
}

SpccDocument parse(std::string_view text, int threshold) {
  ParseState st = parse_lines(text, /*annotations=*/true);
  SpccDocument doc;
  doc.model = std::move(st.model);
  const auto segments = segment(doc.model, threshold);

  if (st.headers.empty()) {
    if (st.abstract_text) throw StructuralError("model description without component headers");
    doc.mode = DocMode::CodeOnly;
    doc.components = segments;
    return doc;
  }

  if (st.headers.size() != segments.size()) {
    throw StructuralError("document has " + std::to_string(st.headers.size()) +
                          " component headers but the model segments into " +
                          std::to_string(segments.size()) + " components");
  }
  for (std::size_t i = 0; i < segments.size(); ++i) {
    if (st.headers[i].first_pair != segments[i].first) {
      throw StructuralError("component " + std::to_string(i + 1) +
                            " boundary disagrees with the repeated-pair segmentation");
    }
    doc.annotations.components.push_back(std::move(st.headers[i].annotation));
  }
  doc.components = segments;

  if (segments.size() == 1) {
    if (st.abstract_text) throw StructuralError("single-component document carries a global description");
    doc.mode = DocMode::Tilde;
    return doc;
  }
  if (!st.abstract_text) throw StructuralError("multi-component document lacks a model description");
  for (std::size_t i = 0; i < doc.annotations.components.size(); ++i) {
    if (doc.annotations.components[i].name.empty()) {
      throw StructuralError("component " + std::to_string(i + 1) + " lacks a name");
    }
  }
  doc.annotations.global = GlobalAnnotation{*st.abstract_text, st.detailed.value_or("")};
  doc.mode = st.detailed ? DocMode::Tilde : DocMode::Dot;
  return doc;
}

CadModel parse_model(std::string_view text) {
  return parse_lines(text, /*annotations=*/false).model;
}

std::string strip_annotations(std::string_view text) {
  std::string out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    const bool last = nl == std::string_view::npos;
    if (last) nl = text.size();
    const std::string_view line = text.substr(pos, nl - pos);
    const std::string_view t = trim(line);
    if (t.empty() || t.front() != '#' || t == kEndOfCode) {
      out += line;
      if (!last) out += '\n';
    }
    pos = nl + 1;
  }
  return out;
}

std::string sanitize_annotation_text(std::string_view text) {
  std::string out;
  bool pending_space = false;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += c;
  }
  return out;
}

}  // namespace spcc
