// Copyright 2026 The Ember Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "sql/parser.hpp"

#include <array>
#include <cctype>
#include <charconv>

#include "common/error.hpp"

namespace ember::sql {

namespace {

constexpr std::array kReserved = {
    "select", "from",  "where", "group",  "by",      "order",    "limit",         "as",
    "join",   "inner", "on",    "and",    "or",      "not",      "in",            "is",
    "null",   "between", "true", "false", "create",  "table",    "tblproperties", "distribute",
    "drop",   "exists", "explain", "asc", "desc",    "into",     "distinct",
};

enum class Tok { kIdent, kQuotedIdent, kString, kInt, kFloat, kSymbol, kEnd };

struct Token {
  Tok kind = Tok::kEnd;
  std::string text;  // identifiers as written, strings unescaped
  size_t offset = 0;
};

[[noreturn]] void syntax(size_t offset, const std::string& what) {
  fail(ErrorCode::kSyntax, "syntax error at offset " + std::to_string(offset) + ": " + what, offset);
}

std::vector<Token> lex(std::string_view s) {
  std::vector<Token> out;
  size_t i = 0;
  while (i < s.size()) {
    char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (c == '-' && i + 1 < s.size() && s[i + 1] == '-') {
      while (i < s.size() && s[i] != '\n') ++i;
      continue;
    }
    Token t;
    t.offset = i;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t j = i;
      while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '_')) ++j;
      t.kind = Tok::kIdent;
      t.text = std::string(s.substr(i, j - i));
      i = j;
    } else if (std::isdigit(static_cast<unsigned char>(c)) ||
               (c == '.' && i + 1 < s.size() && std::isdigit(static_cast<unsigned char>(s[i + 1])))) {
      size_t j = i;
      bool is_float = false;
      while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
      if (j < s.size() && s[j] == '.') {
        is_float = true;
        ++j;
        while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
      }
      if (j < s.size() && (s[j] == 'e' || s[j] == 'E')) {
        size_t k = j + 1;
        if (k < s.size() && (s[k] == '+' || s[k] == '-')) ++k;
        if (k < s.size() && std::isdigit(static_cast<unsigned char>(s[k]))) {
          is_float = true;
          j = k;
          while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
        }
      }
      t.kind = is_float ? Tok::kFloat : Tok::kInt;
      t.text = std::string(s.substr(i, j - i));
      i = j;
    } else if (c == '\'' || c == '"' || c == '`') {
      size_t j = i + 1;
      std::string text;
      for (;;) {
        if (j >= s.size()) syntax(i, "unterminated quoted text");
        if (s[j] == c) {
          if (j + 1 < s.size() && s[j + 1] == c) {
            text += c;
            j += 2;
            continue;
          }
          break;
        }
        text += s[j++];
      }
      t.kind = c == '`' ? Tok::kQuotedIdent : Tok::kString;
      t.text = std::move(text);
      i = j + 1;
    } else {
      static constexpr std::array kTwo = {"<=", ">=", "<>", "!="};
      t.kind = Tok::kSymbol;
      for (const char* two : kTwo) {
        if (s.substr(i, 2) == two) t.text = two;
      }
      if (t.text.empty()) {
        if (std::string_view("=<>+-*/%(),.;").find(c) == std::string_view::npos) {
          syntax(i, std::string("unexpected character '") + c + "'");
        }
        t.text = std::string(1, c);
      }
      i += t.text.size();
    }
    out.push_back(std::move(t));
  }
  out.push_back({Tok::kEnd, "", s.size()});
  return out;
}

class Parser {
 public:
  Parser(std::string_view text) : text_(text), toks_(lex(text)) {}

  Statement statement() {
    Statement st;
    st.text = std::string(text_);
    if (accept_kw("explain")) st.explain = true;
    if (peek_kw("select")) {
      next();
      if (accept_kw("into")) {
        // Hive's SELECT INTO t ... stores the result like CREATE TABLE t AS.
        st.kind = Statement::Kind::kCreate;
        st.create.name = identifier("table name");
        size_t body = peek().offset;
        st.create.query = select_body();
        st.create.query_text = "SELECT " + trim(text_.substr(body, peek().offset - body));
      } else {
        st.select = select_body();
      }
    } else if (accept_kw("create")) {
      st.kind = Statement::Kind::kCreate;
      expect_kw("table");
      st.create.name = identifier("table name");
      if (accept_kw("tblproperties")) {
        expect_sym("(");
        do {
          const Token& k = peek();
          if (k.kind != Tok::kString) syntax(k.offset, "expected quoted property name, got " + describe(k));
          next();
          expect_sym("=");
          const Token& v = peek();
          std::string value;
          if (v.kind == Tok::kString || v.kind == Tok::kInt || v.kind == Tok::kFloat) {
            value = v.text;
          } else if (v.kind == Tok::kIdent && (iequals(v.text, "true") || iequals(v.text, "false"))) {
            value = to_lower(v.text);
          } else {
            syntax(v.offset, "expected property value, got " + describe(v));
          }
          next();
          st.create.properties.emplace_back(k.text, value);
        } while (accept_sym(","));
        expect_sym(")");
      }
      expect_kw("as");
      size_t start = peek().offset;
      expect_kw("select");
      st.create.query = select_body();
      st.create.query_text = trim(text_.substr(start, peek().offset - start));
      if (accept_kw("distribute")) {
        expect_kw("by");
        st.create.distribute_offset = peek().offset;
        st.create.distribute_by = identifier("column name");
        if (accept_sym(".")) st.create.distribute_by = identifier("column name");
      }
    } else if (accept_kw("drop")) {
      st.kind = Statement::Kind::kDrop;
      expect_kw("table");
      if (accept_kw("if")) {
        expect_kw("exists");
        st.drop.if_exists = true;
      }
      st.drop.name = identifier("table name");
    } else {
      syntax(peek().offset, "expected SELECT, CREATE, DROP or EXPLAIN, got " + describe(peek()));
    }
    accept_sym(";");
    if (peek().kind != Tok::kEnd) syntax(peek().offset, "unexpected " + describe(peek()));
    return st;
  }

 private:
  static std::string trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return std::string(s);
  }

  const Token& peek(size_t ahead = 0) const { return toks_[std::min(pos_ + ahead, toks_.size() - 1)]; }
  void next() {
    if (pos_ + 1 < toks_.size()) ++pos_;
  }

  bool peek_kw(std::string_view kw, size_t ahead = 0) const {
    const Token& t = peek(ahead);
    return t.kind == Tok::kIdent && iequals(t.text, kw);
  }
  bool accept_kw(std::string_view kw) {
    if (!peek_kw(kw)) return false;
    next();
    return true;
  }
  void expect_kw(std::string_view kw) {
    if (!accept_kw(kw)) syntax(peek().offset, "expected " + to_upper(kw) + ", got " + describe(peek()));
  }
  bool peek_sym(std::string_view s, size_t ahead = 0) const {
    return peek(ahead).kind == Tok::kSymbol && peek(ahead).text == s;
  }
  bool accept_sym(std::string_view s) {
    if (!peek_sym(s)) return false;
    next();
    return true;
  }
  void expect_sym(std::string_view s) {
    if (!accept_sym(s)) syntax(peek().offset, "expected '" + std::string(s) + "', got " + describe(peek()));
  }

  static std::string describe(const Token& t) {
    switch (t.kind) {
      case Tok::kEnd: return "end of input";
      case Tok::kString: return "string '" + t.text + "'";
      default: return "'" + t.text + "'";
    }
  }

  std::string identifier(const std::string& what) {
    const Token& t = peek();
    if (t.kind == Tok::kQuotedIdent || (t.kind == Tok::kIdent && !is_reserved(t.text))) {
      next();
      return t.text;
    }
    syntax(t.offset, "expected " + what + ", got " + describe(t));
  }

  bool at_identifier() const {
    const Token& t = peek();
    return t.kind == Tok::kQuotedIdent || (t.kind == Tok::kIdent && !is_reserved(t.text));
  }

  SelectStmt select_body() {
    SelectStmt s;
    do {
      SelectItem item;
      item.offset = peek().offset;
      if (accept_sym("*")) {
        s.items.push_back(item);
        continue;
      }
      if (at_identifier() && peek_sym(".", 1) && peek_sym("*", 2)) {
        item.star_qualifier = identifier("table name");
        next();
        next();
        s.items.push_back(item);
        continue;
      }
      item.expr = expr();
      if (accept_kw("as")) {
        item.alias = identifier("alias");
      } else if (at_identifier()) {
        item.alias = identifier("alias");
      }
      s.items.push_back(std::move(item));
    } while (accept_sym(","));

    expect_kw("from");
    s.from.push_back(table_ref());
    if (accept_sym(",")) {
      s.from.push_back(table_ref());
    } else if (peek_kw("join") || peek_kw("inner")) {
      accept_kw("inner");
      expect_kw("join");
      s.from.push_back(table_ref());
      expect_kw("on");
      s.join_on = expr();
    }
    if (peek_sym(",") || peek_kw("join") || peek_kw("inner")) {
      syntax(peek().offset, "joins of more than two tables are not supported");
    }
    if (accept_kw("where")) s.where = expr();
    if (accept_kw("group")) {
      expect_kw("by");
      do s.group_by.push_back(expr());
      while (accept_sym(","));
    }
    if (accept_kw("order")) {
      expect_kw("by");
      do {
        OrderItem o;
        o.expr = expr();
        if (accept_kw("desc")) {
          o.ascending = false;
        } else {
          accept_kw("asc");
        }
        s.order_by.push_back(std::move(o));
      } while (accept_sym(","));
    }
    if (accept_kw("limit")) {
      const Token& t = peek();
      if (t.kind != Tok::kInt) syntax(t.offset, "expected row count, got " + describe(t));
      size_t n = 0;
      auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), n);
      if (ec != std::errc()) syntax(t.offset, "row count out of range");
      s.limit = n;
      next();
    }
    return s;
  }

  TableRef table_ref() {
    TableRef t;
    t.offset = peek().offset;
    t.name = identifier("table name");
    if (accept_kw("as")) {
      t.alias = identifier("alias");
    } else if (at_identifier()) {
      t.alias = identifier("alias");
    }
    return t;
  }

  static std::shared_ptr<AstExpr> make(AstKind kind, size_t offset) {
    auto e = std::make_shared<AstExpr>();
    e->kind = kind;
    e->offset = offset;
    return e;
  }

  AstExprPtr binary(std::string op, size_t offset, AstExprPtr l, AstExprPtr r) {
    auto e = make(AstKind::kBinary, offset);
    e->op = std::move(op);
    e->children = {std::move(l), std::move(r)};
    return e;
  }

  AstExprPtr expr() { return or_expr(); }

  AstExprPtr or_expr() {
    auto l = and_expr();
    while (peek_kw("or")) {
      size_t off = peek().offset;
      next();
      l = binary("OR", off, l, and_expr());
    }
    return l;
  }

  AstExprPtr and_expr() {
    auto l = not_expr();
    while (peek_kw("and")) {
      size_t off = peek().offset;
      next();
      l = binary("AND", off, l, not_expr());
    }
    return l;
  }

  AstExprPtr not_expr() {
    if (peek_kw("not")) {
      auto e = make(AstKind::kUnary, peek().offset);
      next();
      e->op = "NOT";
      e->children = {not_expr()};
      return e;
    }
    return predicate();
  }

  AstExprPtr predicate() {
    auto l = additive();
    size_t off = peek().offset;
    static constexpr std::array kCmp = {"=", "<>", "!=", "<", "<=", ">", ">="};
    for (const char* op : kCmp) {
      if (peek_sym(op)) {
        next();
        return binary(std::string(op) == "!=" ? "<>" : op, off, l, additive());
      }
    }
    bool negated = false;
    if (peek_kw("not") && (peek_kw("between", 1) || peek_kw("in", 1))) {
      negated = true;
      next();
    }
    if (accept_kw("between")) {
      auto e = make(AstKind::kBetween, off);
      e->negated = negated;
      auto lo = additive();
      expect_kw("and");
      e->children = {l, lo, additive()};
      return e;
    }
    if (accept_kw("in")) {
      auto e = make(AstKind::kIn, off);
      e->negated = negated;
      e->children.push_back(l);
      expect_sym("(");
      do e->children.push_back(expr());
      while (accept_sym(","));
      expect_sym(")");
      return e;
    }
    if (accept_kw("is")) {
      auto e = make(AstKind::kIsNull, off);
      e->negated = accept_kw("not");
      expect_kw("null");
      e->children = {l};
      return e;
    }
    return l;
  }

  AstExprPtr additive() {
    auto l = multiplicative();
    while (peek_sym("+") || peek_sym("-")) {
      std::string op = peek().text;
      size_t off = peek().offset;
      next();
      l = binary(op, off, l, multiplicative());
    }
    return l;
  }

  AstExprPtr multiplicative() {
    auto l = unary();
    while (peek_sym("*") || peek_sym("/") || peek_sym("%")) {
      std::string op = peek().text;
      size_t off = peek().offset;
      next();
      l = binary(op, off, l, unary());
    }
    return l;
  }

  AstExprPtr unary() {
    if (peek_sym("-")) {
      size_t off = peek().offset;
      next();
      auto inner = unary();
      // Negative numeric literals fold so pruning sees a plain constant.
      if (inner->kind == AstKind::kLiteral && !inner->literal.is_null() && inner->op == "unsigned") {
        auto e = make(AstKind::kLiteral, off);
        e->literal = inner->literal.type() == Type::kFloat64 ? Value(-inner->literal.as_double())
                                                             : Value(-inner->literal.as_int());
        return e;
      }
      auto e = make(AstKind::kUnary, off);
      e->op = "-";
      e->children = {inner};
      return e;
    }
    if (peek_sym("+")) {
      next();
      return unary();
    }
    return primary();
  }

  AstExprPtr primary() {
    const Token t = peek();
    switch (t.kind) {
      case Tok::kInt: {
        next();
        auto e = make(AstKind::kLiteral, t.offset);
        e->op = "unsigned";
        int64_t v = 0;
        auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
        if (ec != std::errc()) syntax(t.offset, "integer literal out of range");
        e->literal = Value(v);
        return e;
      }
      case Tok::kFloat: {
        next();
        auto e = make(AstKind::kLiteral, t.offset);
        e->op = "unsigned";
        e->literal = Value(std::stod(t.text));
        return e;
      }
      case Tok::kString: {
        next();
        auto e = make(AstKind::kLiteral, t.offset);
        e->literal = Value(t.text);
        return e;
      }
      case Tok::kSymbol:
        if (t.text == "(") {
          next();
          auto e = expr();
          expect_sym(")");
          return e;
        }
        break;
      case Tok::kIdent:
        if (iequals(t.text, "null")) {
          next();
          return make(AstKind::kLiteral, t.offset);
        }
        if (iequals(t.text, "true") || iequals(t.text, "false")) {
          next();
          auto e = make(AstKind::kLiteral, t.offset);
          e->literal = Value(iequals(t.text, "true"));
          return e;
        }
        // DATE 'yyyy-mm-dd' literal; DATE(...) and a column named date are
        // handled below.
        if (iequals(t.text, "date") && peek(1).kind == Tok::kString) {
          next();
          const Token s = peek();
          next();
          auto d = parse_date(s.text);
          if (!d) syntax(s.offset, "invalid date literal '" + s.text + "'");
          auto e = make(AstKind::kLiteral, t.offset);
          e->literal = Value(*d);
          return e;
        }
        if (!is_reserved(t.text) && peek_sym("(", 1)) return call();
        [[fallthrough]];
      case Tok::kQuotedIdent:
        if (at_identifier()) {
          auto e = make(AstKind::kColumn, t.offset);
          e->name = identifier("column name");
          if (accept_sym(".")) {
            e->qualifier = e->name;
            e->name = identifier("column name");
          }
          return e;
        }
        break;
      default:
        break;
    }
    syntax(t.offset, "expected expression, got " + describe(t));
  }

  AstExprPtr call() {
    auto e = make(AstKind::kCall, peek().offset);
    e->name = to_lower(peek().text);
    next();
    expect_sym("(");
    if (accept_sym("*")) {
      e->star = true;
      expect_sym(")");
      return e;
    }
    if (accept_kw("distinct")) e->distinct = true;
    if (!peek_sym(")")) {
      do e->children.push_back(expr());
      while (accept_sym(","));
    }
    expect_sym(")");
    return e;
  }

  std::string_view text_;
  std::vector<Token> toks_;
  size_t pos_ = 0;
};

}  // namespace

bool is_reserved(std::string_view word) {
  for (const char* r : kReserved) {
    if (iequals(word, r)) return true;
  }
  return false;
}

Statement parse(std::string_view text) { return Parser(text).statement(); }

std::vector<ScriptPiece> split_statements(std::string_view script) {
  std::vector<ScriptPiece> out;
  size_t start = 0;
  char quote = 0;
  auto flush = [&](size_t end) {
    std::string_view piece = script.substr(start, end - start);
    size_t lead = 0;
    while (lead < piece.size() && std::isspace(static_cast<unsigned char>(piece[lead]))) ++lead;
    piece.remove_prefix(lead);
    while (!piece.empty() && std::isspace(static_cast<unsigned char>(piece.back()))) piece.remove_suffix(1);
    // Pieces made only of comments are dropped.
    std::string_view rest = piece;
    while (rest.starts_with("--")) {
      size_t nl = rest.find('\n');
      rest = nl == std::string_view::npos ? std::string_view() : rest.substr(nl + 1);
      while (!rest.empty() && std::isspace(static_cast<unsigned char>(rest.front()))) rest.remove_prefix(1);
    }
    if (!rest.empty()) out.push_back({std::string(piece), start + lead});
  };
  for (size_t i = 0; i < script.size(); ++i) {
    char c = script[i];
    if (quote) {
      if (c == quote) quote = 0;
      continue;
    }
    if (c == '\'' || c == '"' || c == '`') {
      quote = c;
    } else if (c == '-' && i + 1 < script.size() && script[i + 1] == '-') {
      while (i < script.size() && script[i] != '\n') ++i;
    } else if (c == ';') {
      flush(i);
      start = i + 1;
    }
  }
  flush(script.size());
  return out;
}

std::string ast_to_string(const AstExprPtr& e) {
  if (!e) return "";
  switch (e->kind) {
    case AstKind::kColumn: return e->qualifier.empty() ? e->name : e->qualifier + "." + e->name;
    case AstKind::kLiteral: return e->literal.is_null() ? "NULL" : to_literal(e->literal);
    case AstKind::kUnary:
      return e->op == "NOT" ? "NOT " + ast_to_string(e->children[0]) : "-" + ast_to_string(e->children[0]);
    case AstKind::kBinary:
      return "(" + ast_to_string(e->children[0]) + " " + e->op + " " + ast_to_string(e->children[1]) + ")";
    case AstKind::kBetween:
      return ast_to_string(e->children[0]) + (e->negated ? " NOT" : "") + " BETWEEN " +
             ast_to_string(e->children[1]) + " AND " + ast_to_string(e->children[2]);
    case AstKind::kIn: {
      std::string s = ast_to_string(e->children[0]) + (e->negated ? " NOT IN (" : " IN (");
      for (size_t i = 1; i < e->children.size(); ++i) s += (i > 1 ? ", " : "") + ast_to_string(e->children[i]);
      return s + ")";
    }
    case AstKind::kIsNull:
      return ast_to_string(e->children[0]) + (e->negated ? " IS NOT NULL" : " IS NULL");
    case AstKind::kCall: {
      std::string s = e->name + "(";
      if (e->star) return s + "*)";
      if (e->distinct) s += "DISTINCT ";
      for (size_t i = 0; i < e->children.size(); ++i) s += (i ? ", " : "") + ast_to_string(e->children[i]);
      return s + ")";
    }
  }
  return "";
}

}  // namespace ember::sql
