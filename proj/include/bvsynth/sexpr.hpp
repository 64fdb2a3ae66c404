#pragma once

#include <cctype>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "error.hpp"

namespace bvsynth {

// Parsed S-expression with source position. Atoms keep their raw spelling.
struct SExpr {
  enum class Kind { Symbol, Numeral, Hex, Binary, Keyword, String, List };

  Kind kind = Kind::List;
  std::string text;
  std::vector<SExpr> items;
  std::size_t line = 1;
  std::size_t col = 1;

  bool is_list() const noexcept { return kind == Kind::List; }
  bool is_symbol() const noexcept { return kind == Kind::Symbol; }
  bool is_symbol(std::string_view name) const noexcept {
    return kind == Kind::Symbol && text == name;
  }
  bool is_bv_literal() const noexcept { return kind == Kind::Hex || kind == Kind::Binary; }

  // List whose head is the given symbol.
  bool is_call(std::string_view head) const noexcept {
    return is_list() && !items.empty() && items.front().is_symbol(head);
  }

  [[noreturn]] void fail(const std::string& detail) const { throw SyntaxError(line, col, detail); }
};

// Reads a sequence of top-level S-expressions. Carriage returns count as
// whitespace so CRLF and LF files read identically; `;` starts a line comment.
class SExprReader {
 public:
  explicit SExprReader(std::string_view text) : text_(text) {}

  std::vector<SExpr> read_all() {
    std::vector<SExpr> out;
    for (skip_blank(); pos_ < text_.size(); skip_blank()) out.push_back(read());
    return out;
  }

 private:
  static bool is_symbol_char(char c) {
    if (std::isalnum(static_cast<unsigned char>(c))) return true;
    switch (c) {
      case '~': case '!': case '@': case '$': case '%': case '^': case '&': case '*':
      case '_': case '-': case '+': case '=': case '<': case '>': case '.': case '?':
      case '/': case '\'':
        return true;
      default:
        return false;
    }
  }

  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else if (text_[pos_] != '\r') {
      ++col_;
    }
    ++pos_;
  }

  void skip_blank() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == ';') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        return;
      }
    }
  }

  SExpr start(SExpr::Kind kind) const {
    SExpr node;
    node.kind = kind;
    node.line = line_;
    node.col = col_;
    return node;
  }

  SExpr read() {
    skip_blank();
    if (pos_ >= text_.size()) throw SyntaxError(line_, col_, "unexpected end of input");
    char c = peek();
    if (c == '(') {
      SExpr list = start(SExpr::Kind::List);
      advance();
      for (skip_blank(); peek() != ')'; skip_blank()) {
        if (pos_ >= text_.size())
          throw SyntaxError(list.line, list.col, "unclosed parenthesis");
        list.items.push_back(read());
      }
      advance();
      return list;
    }
    if (c == ')') throw SyntaxError(line_, col_, "unexpected ')'");
    if (c == '"') return read_string();
    if (c == '#') return read_literal();
    if (c == '|') return read_quoted_symbol();

    SExpr atom = start(SExpr::Kind::Symbol);
    if (c == ':') {
      atom.kind = SExpr::Kind::Keyword;
      atom.text.push_back(c);
      advance();
    }
    while (pos_ < text_.size() && is_symbol_char(peek())) {
      atom.text.push_back(peek());
      advance();
    }
    if (atom.text.empty()) throw SyntaxError(line_, col_, std::string("unexpected character '") + c + "'");
    if (atom.kind == SExpr::Kind::Symbol &&
        std::isdigit(static_cast<unsigned char>(atom.text.front()))) {
      for (char d : atom.text)
        if (!std::isdigit(static_cast<unsigned char>(d)))
          throw SyntaxError(atom.line, atom.col, "malformed numeral '" + atom.text + "'");
      atom.kind = SExpr::Kind::Numeral;
    }
    return atom;
  }

  SExpr read_literal() {
    SExpr atom = start(SExpr::Kind::Hex);
    advance();
    char base = peek();
    if (base != 'x' && base != 'b')
      throw SyntaxError(atom.line, atom.col, "expected #x or #b literal");
    atom.kind = base == 'x' ? SExpr::Kind::Hex : SExpr::Kind::Binary;
    advance();
    while (pos_ < text_.size() && std::isalnum(static_cast<unsigned char>(peek()))) {
      char d = peek();
      bool ok = base == 'x' ? std::isxdigit(static_cast<unsigned char>(d)) != 0
                            : (d == '0' || d == '1');
      if (!ok) throw SyntaxError(line_, col_, std::string("bad digit '") + d + "' in literal");
      atom.text.push_back(d);
      advance();
    }
    if (atom.text.empty()) throw SyntaxError(atom.line, atom.col, "empty bitvector literal");
    return atom;
  }

  SExpr read_string() {
    SExpr atom = start(SExpr::Kind::String);
    advance();
    while (true) {
      if (pos_ >= text_.size()) throw SyntaxError(atom.line, atom.col, "unterminated string");
      char c = peek();
      advance();
      if (c == '"') {
        if (peek() != '"') break;
        advance();
      }
      atom.text.push_back(c);
    }
    return atom;
  }

  SExpr read_quoted_symbol() {
    SExpr atom = start(SExpr::Kind::Symbol);
    advance();
    while (peek() != '|') {
      if (pos_ >= text_.size()) throw SyntaxError(atom.line, atom.col, "unterminated |symbol|");
      atom.text.push_back(peek());
      advance();
    }
    advance();
    return atom;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t col_ = 1;
};

inline std::vector<SExpr> read_sexprs(std::string_view text) { return SExprReader(text).read_all(); }

}  // namespace bvsynth
