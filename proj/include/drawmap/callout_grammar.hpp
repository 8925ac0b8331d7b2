#pragma once
// Deterministic grammar for drawing callout text.
//
// Recognized, in order:
//   [<n>X]                       multiplicity prefix
//   Ø | ⌀ | %%c | DIA            diameter
//   R | CR                       radius
//   M<d>[x<pitch>][-<class>]     metric thread
//   ⌴ / CBORE, ⌵ / CSK           counterbore / countersink
//   ↧ <d> | <d> DEEP             depth
//   <d>°                         angle
//   <d>                          bare linear value, optional ±tol and unit
//   ⌖ ⌓ ⌒ ↗ ⌰ ⏥ frames           GD&T with zone and datum letters
//   [A] / A                      datum letters
//   Ra <v> / √<v>                surface roughness
// plus modifiers (THRU, DEEP, TYP, REF, EQSP) and feature keywords (BOSS,
// SLOT, ...) that hint the target category. Anything else is left over and
// downgrades the match to partial; no recognized value means unknown.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "drawmap/core.hpp"

namespace drawmap {

enum class MatchQuality { none, partial, exact };

struct CalloutParse {
  NormalizedType kind = NormalizedType::unknown;
  std::optional<double> value;
  std::optional<double> tolerance;
  std::optional<double> pitch;
  std::optional<double> depth;  // depth modifier attached to another kind
  std::optional<std::string> unit;
  int multiplicity = 1;
  bool has_diameter_symbol = false;
  bool thru = false;
  std::vector<std::string> datums;
  std::optional<std::string> target_hint;
  MatchQuality quality = MatchQuality::none;
};

namespace grammar_detail {

inline std::u32string decode_utf8(std::string_view s) {
  std::u32string out;
  for (std::size_t i = 0; i < s.size();) {
    const auto c = static_cast<unsigned char>(s[i]);
    char32_t cp = 0;
    std::size_t len = 1;
    if (c < 0x80) {
      cp = c;
    } else if ((c >> 5) == 0x6) {
      cp = c & 0x1f;
      len = 2;
    } else if ((c >> 4) == 0xe) {
      cp = c & 0x0f;
      len = 3;
    } else if ((c >> 3) == 0x1e) {
      cp = c & 0x07;
      len = 4;
    } else {
      out.push_back(U'�');
      ++i;
      continue;
    }
    if (i + len > s.size()) {
      out.push_back(U'�');
      break;
    }
    bool ok = true;
    for (std::size_t k = 1; k < len; ++k) {
      const auto cc = static_cast<unsigned char>(s[i + k]);
      if ((cc >> 6) != 0x2) {
        ok = false;
        break;
      }
      cp = (cp << 6) | (cc & 0x3f);
    }
    out.push_back(ok ? cp : U'�');
    i += ok ? len : 1;
  }
  return out;
}

// ASCII escapes exported by legacy CAD packages.
inline std::u32string expand_escapes(const std::u32string& in) {
  std::u32string out;
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (in[i] == U'%' && i + 2 < in.size() && in[i + 1] == U'%') {
      const char32_t code = in[i + 2] | 0x20;  // lower-case ASCII
      if (code == U'c') { out.push_back(U'Ø'); i += 2; continue; }
      if (code == U'd') { out.push_back(U'°'); i += 2; continue; }
      if (code == U'p') { out.push_back(U'±'); i += 2; continue; }
    }
    if (in[i] == U'+' && i + 2 < in.size() && in[i + 1] == U'/' && in[i + 2] == U'-') {
      out.push_back(U'±');
      i += 2;
      continue;
    }
    out.push_back(in[i]);
  }
  return out;
}

enum class TokKind { number, word, symbol };

struct Token {
  TokKind kind;
  std::string text;   // upper-cased for words
  std::string raw;    // original spelling for words
  char32_t symbol = 0;
  double number = 0.0;
  bool integral = false;
};

inline bool is_ascii_alpha(char32_t c) { return (c >= U'a' && c <= U'z') || (c >= U'A' && c <= U'Z'); }
inline bool is_digit(char32_t c) { return c >= U'0' && c <= U'9'; }
inline bool is_space(char32_t c) { return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r'; }

inline std::vector<Token> tokenize(const std::u32string& s) {
  std::vector<Token> out;
  for (std::size_t i = 0; i < s.size();) {
    const char32_t c = s[i];
    if (is_space(c)) {
      ++i;
    } else if (is_digit(c) || (c == U'.' && i + 1 < s.size() && is_digit(s[i + 1]))) {
      std::string num;
      bool dot = false;
      while (i < s.size() && (is_digit(s[i]) || (s[i] == U'.' && !dot && i + 1 < s.size() && is_digit(s[i + 1])))) {
        dot |= s[i] == U'.';
        num.push_back(static_cast<char>(s[i]));
        ++i;
      }
      Token t{TokKind::number, num, num};
      std::from_chars(num.data(), num.data() + num.size(), t.number);
      t.integral = !dot;
      out.push_back(t);
    } else if (is_ascii_alpha(c)) {
      std::string raw;
      while (i < s.size() && (is_ascii_alpha(s[i]) || s[i] == U'\'')) {
        raw.push_back(static_cast<char>(s[i]));
        ++i;
      }
      std::string upper = raw;
      for (auto& ch : upper) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
      upper.erase(std::remove(upper.begin(), upper.end(), '\''), upper.end());
      out.push_back(Token{TokKind::word, upper, raw});
    } else {
      Token t{TokKind::symbol, "", ""};
      t.symbol = c;
      out.push_back(t);
      ++i;
    }
  }
  return out;
}

constexpr char32_t kDiameter1 = U'Ø';
constexpr char32_t kDiameter2 = U'ø';
constexpr char32_t kDiameter3 = U'⌀';
constexpr char32_t kPlusMinus = U'±';
constexpr char32_t kDegree = U'°';
constexpr char32_t kTimes = U'×';
constexpr char32_t kDepth = U'↧';
constexpr char32_t kCounterbore = U'⌴';
constexpr char32_t kCountersink = U'⌵';
constexpr char32_t kPosition = U'⌖';
constexpr char32_t kProfileSurface = U'⌓';
constexpr char32_t kProfileLine = U'⌒';
constexpr char32_t kRunout = U'↗';
constexpr char32_t kTotalRunout = U'⌰';
constexpr char32_t kFlatness = U'⏥';
constexpr char32_t kRoot = U'√';

inline bool is_diameter_symbol(char32_t c) { return c == kDiameter1 || c == kDiameter2 || c == kDiameter3; }

inline std::optional<NormalizedType> gdt_symbol(char32_t c) {
  switch (c) {
    case kPosition: return NormalizedType::gdt_position;
    case kProfileSurface:
    case kProfileLine: return NormalizedType::gdt_profile;
    case kRunout:
    case kTotalRunout: return NormalizedType::gdt_runout;
    case kFlatness: return NormalizedType::gdt_flatness;
    default: return std::nullopt;
  }
}

inline std::optional<NormalizedType> gdt_word(const std::string& w) {
  if (w == "POSITION" || w == "TP") return NormalizedType::gdt_position;
  if (w == "PROFILE") return NormalizedType::gdt_profile;
  if (w == "RUNOUT") return NormalizedType::gdt_runout;
  if (w == "FLATNESS") return NormalizedType::gdt_flatness;
  return std::nullopt;
}

inline std::optional<std::string> target_keyword(const std::string& w) {
  static const std::pair<std::string_view, std::string_view> kTable[] = {
      {"BOSS", "boss"},     {"SLOT", "slot"},     {"SLOTS", "slot"},     {"POCKET", "pocket"},
      {"GROOVE", "groove"}, {"FILLET", "fillet"}, {"FILLETS", "fillet"}, {"ROUND", "round"},
      {"CHAMFER", "chamfer"}, {"BORE", "bore"},   {"DRILL", "drill"},    {"HOLE", "hole"},
      {"HOLES", "hole"},    {"CYL", "cylinder"},  {"FACE", "plane"},
  };
  for (const auto& [k, v] : kTable) {
    if (w == k) return std::string(v);
  }
  return std::nullopt;
}

inline bool is_modifier_word(const std::string& w) {
  return w == "THRU" || w == "ALL" || w == "TYP" || w == "REF" || w == "EQSP" || w == "EQ" ||
         w == "SP" || w == "PLACES" || w == "PL" || w == "MAX" || w == "MIN" || w == "BSC" ||
         w == "THK" || w == "THICK";
}

inline std::optional<std::string> unit_word(const std::string& w) {
  if (w == "MM") return "mm";
  if (w == "IN" || w == "INCH") return "in";
  if (w == "CM") return "cm";
  return std::nullopt;
}

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)), used_(toks_.size(), false) {}

  CalloutParse run() {
    if (toks_.empty()) return out_;
    parse_multiplicity();
    if (!parse_gdt() && !parse_datum_box() && !parse_roughness()) parse_dimension();
    scan_modifiers();
    if (out_.kind == NormalizedType::unknown && !out_.value && out_.datums.empty()) {
      out_.quality = MatchQuality::none;
    } else {
      out_.quality = std::all_of(used_.begin(), used_.end(), [](bool u) { return u; })
                         ? MatchQuality::exact
                         : MatchQuality::partial;
    }
    return out_;
  }

 private:
  std::vector<Token> toks_;
  std::vector<bool> used_;
  std::size_t pos_ = 0;
  CalloutParse out_;

  const Token* peek(std::size_t ahead = 0) const {
    // skips separators that never carry meaning
    std::size_t i = pos_;
    std::size_t n = 0;
    while (i < toks_.size()) {
      if (!is_separator(toks_[i])) {
        if (n == ahead) return &toks_[i];
        ++n;
      }
      ++i;
    }
    return nullptr;
  }

  static bool is_separator(const Token& t) {
    return t.kind == TokKind::symbol &&
           (t.symbol == U'|' || t.symbol == U'(' || t.symbol == U')' || t.symbol == U',');
  }

  void consume(std::size_t count = 1) {
    while (count > 0 && pos_ < toks_.size()) {
      if (!is_separator(toks_[pos_])) --count;
      used_[pos_] = true;
      ++pos_;
    }
    // trailing separators belong to what was consumed
    while (pos_ < toks_.size() && is_separator(toks_[pos_])) used_[pos_++] = true;
  }

  bool peek_word(const char* w, std::size_t ahead = 0) const {
    const Token* t = peek(ahead);
    return t && t->kind == TokKind::word && t->text == w;
  }

  bool peek_symbol(char32_t s, std::size_t ahead = 0) const {
    const Token* t = peek(ahead);
    return t && t->kind == TokKind::symbol && t->symbol == s;
  }

  bool peek_number(std::size_t ahead = 0) const {
    const Token* t = peek(ahead);
    return t && t->kind == TokKind::number;
  }

  void skip_leading_separators() {
    while (pos_ < toks_.size() && is_separator(toks_[pos_])) used_[pos_++] = true;
  }

  void parse_multiplicity() {
    skip_leading_separators();
    const Token* n = peek();
    if (!n || n->kind != TokKind::number || !n->integral || n->number < 1) return;
    const Token* x = peek(1);
    const bool times = x && ((x->kind == TokKind::word && x->text == "X") ||
                             (x->kind == TokKind::symbol && x->symbol == kTimes));
    if (!times) return;
    // "1.5 X 45°" style chamfers are not multiplicities; the integral check above covers them
    out_.multiplicity = static_cast<int>(n->number);
    consume(2);
  }

  bool parse_gdt() {
    const Token* t = peek();
    if (!t) return false;
    std::optional<NormalizedType> kind;
    if (t->kind == TokKind::symbol) kind = gdt_symbol(t->symbol);
    if (t->kind == TokKind::word) kind = gdt_word(t->text);
    if (!kind) return false;
    out_.kind = *kind;
    consume();
    if (const Token* d = peek(); d && d->kind == TokKind::symbol && is_diameter_symbol(d->symbol)) {
      out_.has_diameter_symbol = true;
      consume();
    }
    if (peek_number()) {
      out_.tolerance = peek()->number;
      consume();
    }
    // material condition modifiers
    while (const Token* m = peek()) {
      if (m->kind == TokKind::symbol && (m->symbol == U'Ⓜ' || m->symbol == U'Ⓛ' || m->symbol == U'Ⓢ')) {
        consume();
      } else if (m->kind == TokKind::word && (m->text == "MMC" || m->text == "LMC" || m->text == "RFS")) {
        consume();
      } else {
        break;
      }
    }
    parse_datum_letters();
    return true;
  }

  void parse_datum_letters() {
    while (const Token* t = peek()) {
      if (t->kind == TokKind::symbol && (t->symbol == U'[' || t->symbol == U']' || t->symbol == U'-')) {
        consume();
        continue;
      }
      if (t->kind == TokKind::word && t->raw.size() == 1 && t->raw[0] >= 'A' && t->raw[0] <= 'Z') {
        out_.datums.push_back(t->raw);
        consume();
        continue;
      }
      break;
    }
  }

  bool parse_datum_box() {
    // the whole text must be letters in optional brackets / dashes
    for (const auto& t : toks_) {
      if (t.kind == TokKind::number) return false;
      if (t.kind == TokKind::word && !(t.raw.size() == 1 && t.raw[0] >= 'A' && t.raw[0] <= 'Z')) return false;
      if (t.kind == TokKind::symbol && !(t.symbol == U'[' || t.symbol == U']' || t.symbol == U'-' || is_separator(t))) {
        return false;
      }
    }
    const std::size_t before = out_.datums.size();
    parse_datum_letters();
    if (out_.datums.size() == before) return false;
    out_.kind = NormalizedType::datum_ref;
    return true;
  }

  bool parse_roughness() {
    const Token* t = peek();
    if (!t) return false;
    const bool ra = t->kind == TokKind::word && (t->text == "RA" || t->text == "RZ");
    const bool root = t->kind == TokKind::symbol && t->symbol == kRoot;
    if (!ra && !root) return false;
    if (root) {
      consume();
      if (!peek_word("RA") && !peek_word("RZ") && !peek_number()) {
        out_.kind = NormalizedType::roughness;
        return true;
      }
      if (peek_word("RA") || peek_word("RZ")) consume();
    } else {
      consume();
    }
    out_.kind = NormalizedType::roughness;
    if (peek_number()) {
      out_.value = peek()->number;
      out_.unit = "um";
      consume();
    }
    return true;
  }

  void parse_plus_minus() {
    if (peek_symbol(kPlusMinus) && peek_number(1)) {
      consume();
      out_.tolerance = peek()->number;
      consume();
    }
  }

  void parse_unit() {
    if (const Token* t = peek(); t && t->kind == TokKind::word) {
      if (auto u = unit_word(t->text)) {
        out_.unit = *u;
        consume();
      }
    }
  }

  void take_value() {
    out_.value = peek()->number;
    consume();
    parse_plus_minus();
    parse_unit();
  }

  void parse_dimension() {
    const Token* t = peek();
    if (!t) return;

    if (t->kind == TokKind::symbol && is_diameter_symbol(t->symbol) && peek_number(1)) {
      out_.kind = NormalizedType::diameter;
      out_.has_diameter_symbol = true;
      consume();
      take_value();
      return;
    }
    if (t->kind == TokKind::word && t->text == "DIA" && peek_number(1)) {
      // an ASCII fallback for the symbol, so the symbol counts as present
      out_.kind = NormalizedType::diameter;
      out_.has_diameter_symbol = true;
      consume();
      take_value();
      return;
    }
    if (t->kind == TokKind::word && (t->text == "R" || t->text == "CR" || t->text == "SR") && peek_number(1)) {
      out_.kind = NormalizedType::radius;
      consume();
      take_value();
      return;
    }
    if (t->kind == TokKind::word && t->text == "M" && peek_number(1)) {
      out_.kind = NormalizedType::thread;
      consume();
      out_.value = peek()->number;
      consume();
      const Token* x = peek();
      if (x && ((x->kind == TokKind::word && x->text == "X") || (x->kind == TokKind::symbol && x->symbol == kTimes)) &&
          peek_number(1)) {
        consume();
        out_.pitch = peek()->number;
        consume();
      }
      // tolerance class, e.g. -6H
      if (peek_symbol(U'-') && peek_number(1) && peek(2) && peek(2)->kind == TokKind::word && peek(2)->text.size() <= 2) {
        consume(3);
      }
      return;
    }
    if (t->kind == TokKind::symbol && (t->symbol == kCounterbore || t->symbol == kCountersink)) {
      out_.kind = t->symbol == kCounterbore ? NormalizedType::counterbore : NormalizedType::countersink;
      consume();
      take_sized_value();
      return;
    }
    if (t->kind == TokKind::word && (t->text == "CBORE" || t->text == "CSK" || t->text == "CSINK" || t->text == "SPOTFACE" || t->text == "SF")) {
      out_.kind = (t->text == "CBORE" || t->text == "SPOTFACE" || t->text == "SF") ? NormalizedType::counterbore
                                                                                     : NormalizedType::countersink;
      consume();
      take_sized_value();
      return;
    }
    if (t->kind == TokKind::symbol && t->symbol == kDepth && peek_number(1)) {
      out_.kind = NormalizedType::depth;
      consume();
      take_value();
      return;
    }
    if (t->kind == TokKind::number) {
      if (peek_symbol(kDegree, 1)) {
        out_.kind = NormalizedType::angle;
        out_.value = t->number;
        out_.unit = "deg";
        consume(2);
        parse_plus_minus();
        return;
      }
      if (peek_word("DIA", 1)) {
        out_.kind = NormalizedType::diameter;
        out_.has_diameter_symbol = true;
        out_.value = t->number;
        consume(2);
        parse_plus_minus();
        return;
      }
      out_.value = t->number;
      consume();
      parse_plus_minus();
      parse_unit();
      if (peek_word("DEEP") || peek_word("DP")) {
        out_.kind = NormalizedType::depth;
        consume();
        return;
      }
      out_.kind = NormalizedType::linear;
      return;
    }
    if (t->kind == TokKind::word) {
      // a thread written without a space after the value, e.g. "M8" tokenizes
      // as M + 8 and is handled above; nothing else to try
      return;
    }
  }

  void take_sized_value() {
    if (const Token* d = peek(); d && d->kind == TokKind::symbol && is_diameter_symbol(d->symbol)) {
      out_.has_diameter_symbol = true;
      consume();
    }
    if (peek_number()) take_value();
  }

  // Modifiers may follow the main value anywhere in the remaining text.
  void scan_modifiers() {
    while (pos_ < toks_.size()) {
      const Token* t = peek();
      if (!t) break;
      if (t->kind == TokKind::symbol && t->symbol == kDepth && peek_number(1)) {
        consume();
        out_.depth = peek()->number;
        consume();
        continue;
      }
      if (t->kind == TokKind::number && (peek_word("DEEP", 1) || peek_word("DP", 1))) {
        out_.depth = t->number;
        consume(2);
        continue;
      }
      if (t->kind == TokKind::word) {
        if (t->text == "THRU") out_.thru = true;
        if (is_modifier_word(t->text)) {
          consume();
          continue;
        }
        if (auto hint = target_keyword(t->text)) {
          if (!out_.target_hint) out_.target_hint = *hint;
          consume();
          continue;
        }
      }
      // leave unknown tokens unconsumed and keep scanning
      ++pos_;
      while (pos_ < toks_.size() && is_separator(toks_[pos_])) used_[pos_++] = true;
    }
  }
};

}  // namespace grammar_detail

/// Parse callout text. Never fails: unrecognized input yields kind=unknown.
inline CalloutParse parse_callout_grammar(std::string_view text) {
  using namespace grammar_detail;
  auto toks = tokenize(expand_escapes(decode_utf8(text)));
  return Parser(std::move(toks)).run();
}

}  // namespace drawmap
